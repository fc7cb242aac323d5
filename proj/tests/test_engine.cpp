#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "test_helpers.hpp"
#include "vsl/engine.hpp"
#include "vsl/errors.hpp"

using namespace vsl;
namespace fs = std::filesystem;

namespace {

SimulationConfig small_run(double charge = 1.0) {
  SimulationConfig c;
  c.species = {test::ball_species("a", charge, 40, 21), test::ball_species("b", -0.5 * charge, 30, 22)};
  c.softening = 0.05;
  c.t_end = 16.0;
  return test::finalized(c);
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("vsl_engine_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("simulation emits t = 0 and every scheduled time") {
  const auto c = small_run();
  const auto result = run_simulation(c);
  REQUIRE(result.snapshots.size() == c.snapshot_times.size() + 1);
  CHECK(result.snapshots.front().t == 0.0);
  for (std::size_t k = 0; k < c.snapshot_times.size(); ++k)
    CHECK(result.snapshots[k + 1].t == c.snapshot_times[k]);
  CHECK(result.analysis.has_value());
  CHECK(result.final_state.conservation.size() == result.snapshots.size());
}

TEST_CASE("checkpoint round trip restores the state exactly") {
  const auto dir = scratch("ckpt");
  Simulation sim(small_run());
  sim.advance();
  sim.advance();
  checkpoint_save(sim.state(), dir / "run.ckpt");
  CHECK(checkpoint_load(dir / "run.ckpt") == sim.state());
}

TEST_CASE("damaged checkpoints are rejected") {
  const auto dir = scratch("bad");
  Simulation sim(small_run());
  sim.advance();
  const auto path = dir / "run.ckpt";
  checkpoint_save(sim.state(), path);

  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.put('X');
  }
  CHECK_THROWS_AS(checkpoint_load(path), FormatError);

  checkpoint_save(sim.state(), path);
  fs::resize_file(path, fs::file_size(path) - 5);
  CHECK_THROWS_AS(checkpoint_load(path), FormatError);

  CHECK_THROWS_AS(checkpoint_load(dir / "missing.ckpt"), FormatError);
}

TEST_CASE("resumed run is bitwise identical to an uninterrupted one") {
  const auto c = small_run();
  const auto dir = scratch("resume");
  const auto full = run_simulation(c);

  RunOptions first;
  first.checkpoint = dir / "run.ckpt";
  first.stop_after = 4.0;
  const auto part = run_simulation(c, first);
  CHECK(!part.analysis.has_value());
  CHECK(part.final_state.t == 4.0);

  const auto rest = resume_simulation(checkpoint_load(dir / "run.ckpt"));
  REQUIRE(!rest.snapshots.empty());
  CHECK(rest.snapshots.back() == full.snapshots.back());
  CHECK(rest.final_state.conservation == full.final_state.conservation);
  CHECK(rest.final_state.steps == full.final_state.steps);
}

TEST_CASE("uncharged ensemble streams freely through the engine") {
  const auto c = small_run(0.0);
  const auto result = run_simulation(c);
  const auto& first = result.snapshots.front().ensemble;
  const auto& last = result.snapshots.back().ensemble;
  for (std::size_t a = 0; a < first.species.size(); ++a)
    for (std::size_t i = 0; i < first.species[a].size(); ++i) {
      const Vec3 expected = first.species[a].x[i] + c.t_end * first.species[a].v[i];
      CHECK(norm(last.species[a].x[i] - expected) < 1e-11);
      CHECK(last.species[a].v[i] == first.species[a].v[i]);
    }
}

TEST_CASE("output directory receives config, snapshots and tables") {
  const auto dir = scratch("out");
  RunOptions o;
  o.out_dir = dir;
  const auto c = small_run();
  run_simulation(c, o);
  CHECK(fs::exists(dir / "config.cfg"));
  CHECK(fs::exists(dir / "snap_0000.csv"));
  CHECK(fs::exists(dir / "diagnostics.csv"));
  CHECK(fs::exists(dir / "cauchy.csv"));
  CHECK(fs::exists(dir / "profile.csv"));
}
