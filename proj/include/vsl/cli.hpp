#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vsl/io.hpp"

namespace vsl {

enum class Subcommand { Simulate, Diagnose, Fit, Report };

struct CommandRequest {
  Subcommand subcommand{Subcommand::Simulate};
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> in_dir;
  std::optional<std::filesystem::path> out_dir;
  std::vector<std::string> overrides;
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::filesystem::path> resume;
  bool quiet{false};
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Fits of the decay and convergence series in a run directory's CSV tables. Quantities
/// whose series is not positive over the window are listed in `skipped` with the reason.
struct FitSummary {
  std::vector<NamedFit> fits;
  std::vector<std::pair<std::string, std::string>> skipped;
};

/// Log power of the spatial-average convergence rate t^{-1} ln^4 t.
inline constexpr double kConvergenceLogPower = 4.0;

/// Power fits of every sup_* column over [t_max/20, t_max]; power fit of d_V over t >= 10
/// and power-log fit of F_dev (log power pinned) over 32 <= t < t_max when cauchy is given.
FitSummary fit_tables(const CsvTable& diagnostics, const std::optional<CsvTable>& cauchy);

/// Plain-text comparison of fitted exponents against the predicted table.
/// `neutral_limit` selects the faster rates expected when the limiting density vanishes.
std::string render_report(const std::vector<NamedFit>& fits, bool neutral_limit);

int run_cli(const CommandRequest& request, std::ostream& out, std::ostream& err);
/// Parses argv with CLI11 and runs; returns the process exit code.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace vsl
