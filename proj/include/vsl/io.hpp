#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vsl/core_model.hpp"
#include "vsl/diagnostics.hpp"
#include "vsl/fit.hpp"

namespace vsl {

inline constexpr const char* kSchemaLine = "# vsl-schema v1";

/// 17 significant digits; parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

/// Comma-separated table with a schema comment, optional `# key = value` comments and a
/// header row.
struct CsvTable {
  std::vector<std::string> comments;  // without the leading "# "
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  bool has(const std::string& column) const;
  std::size_t index(const std::string& column) const;  // throws FormatError if absent
  std::vector<double> column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

/// One row per particle: t,species,id,x1..x3,v1..v3,weight, or for the spherical engine
/// t,species,id,r,w,ell,weight,x1..x3,v1..v3. `species` is the species index.
void write_snapshot(const std::filesystem::path& path, const Snapshot& snap, EngineKind engine);
Snapshot read_snapshot(const std::filesystem::path& path);

std::string snapshot_filename(std::size_t index);
/// Every snap_*.csv in a directory, sorted by time.
std::vector<Snapshot> read_snapshots(const std::filesystem::path& dir);

/// diagnostics.csv: one row per time with sup norms, supports, residuals and conservation
/// columns; the t = 0 conservation baseline goes in a comment line.
void write_diagnostics(const std::filesystem::path& path, const DiagnosticsSeries& series);
/// cauchy.csv: t,d_V,d_Y,d_Z,scatter,F_dev,P_sup.
void write_cauchy(const std::filesystem::path& path, const DiagnosticsSeries& series);
/// Reads diagnostics.csv and, when present next to it, cauchy.csv.
DiagnosticsSeries read_diagnostics(const std::filesystem::path& path);

struct NamedFit {
  std::string quantity;
  FitResult fit;
};

void write_fits(const std::filesystem::path& path, const std::vector<NamedFit>& fits);
std::vector<NamedFit> read_fits(const std::filesystem::path& path);

/// profile.csv: species,id,v1..v3,charge,z1..z3 per atom with eps_v, h_v, mode and t_end
/// in comment lines.
void write_profile(const std::filesystem::path& path, const AsymptoticProfile& profile,
                   const ParticleEnsemble& final_ensemble);

}  // namespace vsl
