#include "vsl/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include "vsl/config.hpp"
#include "vsl/engine.hpp"
#include "vsl/errors.hpp"

namespace vsl {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::optional<FitResult> try_fit(const std::string& name, std::span<const double> t, std::span<const double> y,
                                 FitModel model, double t_a, double t_b, FitSummary& summary,
                                 std::optional<double> log_power = std::nullopt) {
  try {
    return fit_decay(t, y, model, t_a, t_b, log_power);
  } catch (const DomainError& e) {
    summary.skipped.emplace_back(name, e.what());
    return std::nullopt;
  }
}

std::string band(double lo, double hi) {
  std::ostringstream os;
  os.precision(3);
  os << lo << "–" << hi;
  return os.str();
}

/// Files directly under `dir` that exist right now.
std::set<fs::path> listing(const fs::path& dir) {
  std::set<fs::path> out;
  if (fs::is_directory(dir))
    for (const auto& e : fs::directory_iterator(dir)) out.insert(e.path());
  return out;
}

/// Removes what a failed command left behind in `dir`, keeping the blow-up dump.
class OutputGuard {
 public:
  explicit OutputGuard(std::optional<fs::path> dir) : dir_(std::move(dir)) {
    if (dir_) {
      existed_ = fs::exists(*dir_);
      before_ = listing(*dir_);
    }
  }
  void commit() { committed_ = true; }
  ~OutputGuard() {
    if (committed_ || !dir_) return;
    std::error_code ec;
    bool kept = false;
    for (const auto& p : listing(*dir_)) {
      if (before_.count(p)) continue;
      if (p.filename() == "blowup_dump.csv") {
        kept = true;
        continue;
      }
      fs::remove_all(p, ec);
    }
    if (!existed_ && !kept) fs::remove(*dir_, ec);
  }

 private:
  std::optional<fs::path> dir_;
  bool existed_{false};
  bool committed_{false};
  std::set<fs::path> before_;
};

std::vector<std::string> effective_overrides(const CommandRequest& req) {
  auto overrides = req.overrides;
  if (const char* seed = std::getenv("VSL_SEED")) overrides.push_back(std::string("species.*.seed=") + seed);
  return overrides;
}

SimulationConfig request_config(const CommandRequest& req, const fs::path& fallback) {
  const fs::path path = req.config ? *req.config : fallback;
  if (!fs::is_regular_file(path)) throw UsageError("config file not found: " + path.string());
  return load_config(path.string(), effective_overrides(req));
}

void require_dir(const std::optional<fs::path>& dir, const char* flag) {
  if (!dir) throw UsageError(std::string(flag) + " is required");
  if (!fs::is_directory(*dir)) throw UsageError(std::string(flag) + " is not a directory: " + dir->string());
}

void require_out(const std::optional<fs::path>& dir) {
  if (!dir) throw UsageError("--out is required");
  if (fs::exists(*dir) && !fs::is_directory(*dir)) throw UsageError("--out is not a directory: " + dir->string());
}

std::optional<CsvTable> optional_table(const fs::path& path) {
  if (!fs::exists(path)) return std::nullopt;
  return read_csv(path);
}

bool neutral_limit(const std::optional<CsvTable>& cauchy) {
  if (!cauchy || cauchy->rows.empty() || !cauchy->has("P_sup")) return false;
  return cauchy->rows.back()[cauchy->index("P_sup")] == 0.0;
}

FitSummary fits_for_dir(const fs::path& dir) {
  const auto diag = read_csv(dir / "diagnostics.csv");
  return fit_tables(diag, optional_table(dir / "cauchy.csv"));
}

int simulate(const CommandRequest& req, std::ostream& out) {
  require_out(req.out_dir);
  std::optional<RunState> resumed;
  SimulationConfig config;
  if (req.resume) {
    if (!fs::is_regular_file(*req.resume)) throw UsageError("checkpoint not found: " + req.resume->string());
    resumed = checkpoint_load(*req.resume);
    config = resumed->config;
  } else {
    if (!req.config) throw UsageError("--config is required");
    config = request_config(req, {});
  }
  OutputGuard guard(req.out_dir);
  RunOptions options;
  options.out_dir = req.out_dir;
  options.checkpoint = req.checkpoint;
  if (!req.quiet)
    options.on_snapshot = [&out](const Snapshot& s, const RunState& st) {
      out << "t = " << s.t << "  steps = " << st.steps << "\n";
    };
  const auto result = resumed ? resume_simulation(*resumed, options) : run_simulation(config, options);
  guard.commit();
  if (!req.quiet)
    out << "wrote " << result.snapshots.size() << " snapshots and diagnostics to " << req.out_dir->string()
        << "\n";
  return kExitOk;
}

int diagnose(const CommandRequest& req, std::ostream& out) {
  require_dir(req.in_dir, "--in");
  require_out(req.out_dir);
  const auto config = request_config(req, *req.in_dir / "config.cfg");
  OutputGuard guard(req.out_dir);
  const auto snapshots = read_snapshots(*req.in_dir);
  configure_threads(config);
  const auto analysis = analyze_run(config, snapshots);
  fs::create_directories(*req.out_dir);
  write_diagnostics(*req.out_dir / "diagnostics.csv", analysis.series);
  write_cauchy(*req.out_dir / "cauchy.csv", analysis.series);
  write_profile(*req.out_dir / "profile.csv", analysis.profile, snapshots.back().ensemble);
  guard.commit();
  if (!req.quiet) out << "diagnostics for " << analysis.series.rows.size() << " times\n";
  return kExitOk;
}

int fit(const CommandRequest& req, std::ostream& out) {
  require_dir(req.in_dir, "--in");
  require_out(req.out_dir);
  if (!fs::is_regular_file(*req.in_dir / "diagnostics.csv"))
    throw UsageError("no diagnostics.csv in " + req.in_dir->string());
  OutputGuard guard(req.out_dir);
  const auto summary = fits_for_dir(*req.in_dir);
  fs::create_directories(*req.out_dir);
  write_fits(*req.out_dir / "fits.csv", summary.fits);
  guard.commit();
  if (!req.quiet) {
    for (const auto& f : summary.fits) out << f.quantity << ": p_hat = " << f.fit.exponent << "\n";
    for (const auto& [q, why] : summary.skipped) out << q << ": not fitted (" << why << ")\n";
  }
  return kExitOk;
}

int report(const CommandRequest& req, std::ostream& out) {
  require_dir(req.in_dir, "--in");
  if (req.out_dir) require_out(req.out_dir);
  const fs::path fits_path = *req.in_dir / "fits.csv";
  std::vector<NamedFit> fits;
  if (fs::is_regular_file(fits_path)) {
    fits = read_fits(fits_path);
  } else {
    if (!fs::is_regular_file(*req.in_dir / "diagnostics.csv"))
      throw UsageError("no fits.csv or diagnostics.csv in " + req.in_dir->string());
    fits = fits_for_dir(*req.in_dir).fits;
  }
  const auto text = render_report(fits, neutral_limit(optional_table(*req.in_dir / "cauchy.csv")));
  if (req.out_dir) {
    OutputGuard guard(req.out_dir);
    fs::create_directories(*req.out_dir);
    std::ofstream f(*req.out_dir / "report.txt");
    f << text;
    if (!f) throw RuntimeFailure("cannot write report.txt");
    guard.commit();
  }
  out << text;
  return kExitOk;
}

}  // namespace

FitSummary fit_tables(const CsvTable& diagnostics, const std::optional<CsvTable>& cauchy) {
  FitSummary summary;
  const auto t = diagnostics.column("t");
  if (t.empty()) throw FormatError("diagnostics table has no rows");
  const double t_max = *std::max_element(t.begin(), t.end());
  for (const auto& col : diagnostics.columns) {
    if (col.rfind("sup_", 0) != 0) continue;
    const auto y = diagnostics.column(col);
    if (auto r = try_fit(col, t, y, FitModel::Power, t_max / 20.0, t_max, summary))
      summary.fits.push_back({col, *r});
  }
  if (cauchy) {
    const auto tc = cauchy->column("t");
    if (cauchy->has("d_V")) {
      std::vector<double> ts, ys;
      const auto dv = cauchy->column("d_V");
      for (std::size_t k = 0; k < tc.size(); ++k)
        if (!std::isnan(dv[k])) {
          ts.push_back(tc[k]);
          ys.push_back(dv[k]);
        }
      const double t_hi = ts.empty() ? 10.0 : ts.back();
      if (auto r = try_fit("d_V", ts, ys, FitModel::Power, 10.0, t_hi, summary))
        summary.fits.push_back({"d_V", *r});
    }
    if (cauchy->has("F_dev") && !tc.empty()) {
      const double tc_max = *std::max_element(tc.begin(), tc.end());
      if (auto r = try_fit("F_dev", tc, cauchy->column("F_dev"), FitModel::PowerLog, 32.0,
                           std::nextafter(tc_max, 0.0), summary, kConvergenceLogPower))
        summary.fits.push_back({"F_dev", *r});
    }
  }
  return summary;
}

std::string render_report(const std::vector<NamedFit>& fits, bool neutral) {
  struct Row {
    const char* label;
    const char* quantity;
    double predicted;
  };
  const Row rows[] = {{"E exponent", "sup_E", neutral ? 3.0 : 2.0},
                      {"rho exponent", "sup_rho", neutral ? 4.0 : 3.0},
                      {"V exponent", "d_V", 1.0}};
  std::ostringstream os;
  os << "limit: " << (neutral ? "neutral (P_inf = 0)" : "non-neutral (P_inf != 0)") << "\n";
  for (const auto& row : rows) {
    const double lo = 0.95 * row.predicted, hi = 1.05 * row.predicted;
    os << row.label << " " << band(lo, hi) << ": ";
    const auto it = std::find_if(fits.begin(), fits.end(), [&](const NamedFit& f) { return f.quantity == row.quantity; });
    if (it == fits.end()) {
      os << "N/A (no fit)\n";
      continue;
    }
    const double p = it->fit.exponent;
    std::ostringstream val;
    val.precision(4);
    val << p << " +/- " << it->fit.confidence;
    os << (p >= lo && p <= hi ? "PASS" : "FAIL") << " (p_hat = " << val.str() << ", window " << it->fit.t_a
       << "-" << it->fit.t_b << ")\n";
  }
  for (const auto& f : fits)
    if (f.quantity == "F_dev")
      os << "F convergence: p_hat = " << f.fit.exponent << ", m_hat = " << f.fit.log_power << "\n";
  return os.str();
}

int run_cli(const CommandRequest& req, std::ostream& out, std::ostream& err) {
  try {
    switch (req.subcommand) {
      case Subcommand::Simulate: return simulate(req, out);
      case Subcommand::Diagnose: return diagnose(req, out);
      case Subcommand::Fit: return fit(req, out);
      case Subcommand::Report: return report(req, out);
    }
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multispecies Vlasov-Poisson particle runs and asymptotic diagnostics", "vsl"};
  app.require_subcommand(1, 1);
  CommandRequest req;
  std::string config, in_dir, out_dir, checkpoint, resume;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--override", req.overrides, "KEY=VALUE applied after the config file")->allow_extra_args(false);
    sub->add_flag("--quiet", req.quiet, "Suppress progress output");
  };
  auto* sim = app.add_subcommand("simulate", "Run a simulation and write snapshots, diagnostics and profile");
  sim->add_option("--config", config, "Configuration file");
  sim->add_option("--out", out_dir, "Output directory")->required();
  sim->add_option("--checkpoint", checkpoint, "Checkpoint file updated at every snapshot");
  sim->add_option("--resume", resume, "Continue from a checkpoint");
  add_common(sim);
  auto* diag = app.add_subcommand("diagnose", "Recompute diagnostics from existing snapshots");
  diag->add_option("--in", in_dir, "Run directory")->required();
  diag->add_option("--out", out_dir, "Output directory")->required();
  diag->add_option("--config", config, "Configuration (default: <in>/config.cfg)");
  add_common(diag);
  auto* fitc = app.add_subcommand("fit", "Fit decay exponents from diagnostics CSVs");
  fitc->add_option("--in", in_dir, "Directory holding diagnostics.csv")->required();
  fitc->add_option("--out", out_dir, "Output directory for fits.csv")->required();
  add_common(fitc);
  auto* rep = app.add_subcommand("report", "Compare fitted exponents with the predicted rates");
  rep->add_option("--in", in_dir, "Run directory")->required();
  rep->add_option("--out", out_dir, "Directory for report.txt");
  add_common(rep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (sim->parsed()) req.subcommand = Subcommand::Simulate;
  else if (diag->parsed()) req.subcommand = Subcommand::Diagnose;
  else if (fitc->parsed()) req.subcommand = Subcommand::Fit;
  else req.subcommand = Subcommand::Report;
  if (!config.empty()) req.config = config;
  if (!in_dir.empty()) req.in_dir = in_dir;
  if (!out_dir.empty()) req.out_dir = out_dir;
  if (!checkpoint.empty()) req.checkpoint = checkpoint;
  if (!resume.empty()) req.resume = resume;
  return run_cli(req, out, err);
}

}  // namespace vsl
