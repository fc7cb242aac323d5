#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "test_helpers.hpp"
#include "vsl/cli.hpp"
#include "vsl/errors.hpp"
#include "vsl/io.hpp"

using namespace vsl;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("vsl_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int cli(std::vector<std::string> args, std::string* out_text = nullptr) {
  args.insert(args.begin(), "vsl");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str() + err.str();
  return code;
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("doubles survive text formatting") {
  for (double x : {0.1, -1e-300, 1.0 / 3.0, 6.02214076e23, 0.0})
    CHECK(parse_double(format_double(x)) == x);
  CHECK(std::isnan(parse_double(format_double(std::numeric_limits<double>::quiet_NaN()))));
  CHECK(parse_double("inf") == std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(parse_double("1.5x"), FormatError);
}

TEST_CASE("snapshot files round trip for both layouts") {
  const auto dir = scratch("snap");
  SimulationConfig c;
  c.species = {test::ball_species("a", 1.0, 25, 1), test::ball_species("b", -1.0, 10, 2)};
  c = test::finalized(c);
  const Snapshot s{2.5, sample_initial(c)};
  write_snapshot(dir / "a.csv", s, EngineKind::Direct3d);
  CHECK(read_snapshot(dir / "a.csv") == s);

  SimulationConfig one;
  one.species = {test::ball_species("a", 1.0, 25, 1)};
  one.engine = EngineKind::SphericalShell;
  one = test::finalized(one);
  const Snapshot shell{4.0, sample_initial(one)};
  write_snapshot(dir / "b.csv", shell, EngineKind::SphericalShell);
  CHECK(read_snapshot(dir / "b.csv") == shell);
  CHECK(read_csv(dir / "b.csv").has("ell"));
}

TEST_CASE("tables reject missing columns and unknown schema") {
  const auto dir = scratch("schema");
  write_text(dir / "x.csv", "# vsl-schema v9\nt\n1\n");
  CHECK_THROWS_AS(read_csv(dir / "x.csv"), FormatError);
  CsvTable t;
  t.columns = {"t"};
  t.rows = {{1.0}};
  write_csv(dir / "y.csv", t);
  CHECK(read_csv(dir / "y.csv").column("t") == std::vector<double>{1.0});
  CHECK_THROWS_AS(read_csv(dir / "y.csv").index("sup_E"), FormatError);
}

TEST_CASE("fits round trip and synthetic sup norms give exponent 2") {
  CsvTable diag;
  diag.columns = {"t", "sup_E"};
  for (int k = 0; k <= 20; ++k) {
    const double t = std::pow(2.0, k / 2.0);
    diag.rows.push_back({t, 3.0 / (t * t)});
  }
  const auto summary = fit_tables(diag, std::nullopt);
  REQUIRE(summary.fits.size() == 1);
  CHECK(summary.fits[0].quantity == "sup_E");
  CHECK(summary.fits[0].fit.exponent == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(render_report(summary.fits, false).find("E exponent 1.9") != std::string::npos);

  const auto dir = scratch("fits");
  write_fits(dir / "fits.csv", summary.fits);
  const auto back = read_fits(dir / "fits.csv");
  REQUIRE(back.size() == 1);
  CHECK(back[0].fit.exponent == summary.fits[0].fit.exponent);
}

TEST_CASE("exit codes") {
  const auto dir = scratch("exit");
  CHECK(cli({}) == kExitUsage);
  CHECK(cli({"nonsense"}) == kExitUsage);
  CHECK(cli({"simulate", "--out", (dir / "o").string()}) == kExitUsage);
  CHECK(cli({"simulate", "--config", (dir / "missing.cfg").string(), "--out", (dir / "o").string()}) == kExitUsage);
  write_text(dir / "bad.cfg", "dt = 1\n");
  std::string text;
  CHECK(cli({"simulate", "--config", (dir / "bad.cfg").string(), "--out", (dir / "o").string()}, &text) ==
        kExitUsage);
  CHECK(text.find("'dt'") != std::string::npos);
  CHECK(cli({"diagnose", "--in", (dir / "empty").string(), "--out", (dir / "d").string(), "--config",
             (dir / "bad.cfg").string()}) == kExitUsage);
  fs::create_directories(dir / "empty");
  write_text(dir / "ok.cfg", "[species]\ncount = 4\nradius_v = 1\n");
  CHECK(cli({"diagnose", "--in", (dir / "empty").string(), "--out", (dir / "d").string(), "--config",
             (dir / "ok.cfg").string()}) == kExitRuntime);
  CHECK(cli({"fit", "--in", (dir / "empty").string(), "--out", (dir / "f").string()}) == kExitUsage);
  write_text(dir / "empty" / "diagnostics.csv", "# vsl-schema v1\nt,sup_E\n1,oops\n");
  CHECK(cli({"fit", "--in", (dir / "empty").string(), "--out", (dir / "f").string()}) == kExitRuntime);
  CHECK(!fs::exists(dir / "f"));
}

TEST_CASE("twin simulate through the command line gives a vanishing field") {
  const auto dir = scratch("twin");
  write_text(dir / "twin.cfg",
             "softening = 0.05\nt_end = 8\n"
             "[species]\nname = plus\ncharge = 1\ncount = 60\nradius_v = 1\nseed = 5\n"
             "[species]\nname = minus\ncharge = -1\ncount = 60\nradius_v = 1\nseed = 5\n");
  REQUIRE(cli({"simulate", "--config", (dir / "twin.cfg").string(), "--out", (dir / "run").string(), "--quiet"}) ==
          kExitOk);
  const auto diag = read_csv(dir / "run" / "diagnostics.csv");
  for (double e : diag.column("sup_E")) CHECK(e < 1e-10);
  for (double m : diag.column("M")) CHECK(m == 0.0);
  std::string report;
  CHECK(cli({"report", "--in", (dir / "run").string()}, &report) == kExitOk);
  CHECK(report.find("exponent") != std::string::npos);
}

TEST_CASE("diagnose reproduces the tables written by simulate") {
  const auto dir = scratch("diag");
  write_text(dir / "run.cfg", "softening = 0.05\nt_end = 8\n[species]\ncount = 50\nradius_v = 1\nseed = 3\n");
  REQUIRE(cli({"simulate", "--config", (dir / "run.cfg").string(), "--out", (dir / "run").string(), "--quiet"}) ==
          kExitOk);
  REQUIRE(cli({"diagnose", "--in", (dir / "run").string(), "--out", (dir / "again").string(), "--quiet"}) ==
          kExitOk);
  CHECK(read_csv(dir / "run" / "diagnostics.csv").rows == read_csv(dir / "again" / "diagnostics.csv").rows);
}
