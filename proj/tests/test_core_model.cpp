#include <doctest.h>

#include <cmath>

#include "test_helpers.hpp"
#include "vsl/errors.hpp"

using namespace vsl;

TEST_CASE("single uniform-ball sample carries the whole weight inside the ball") {
  SimulationConfig c;
  c.species = {test::ball_species("a", 1.0, 1, 3)};
  c.species[0].init.center_x = {2.0, -1.0, 0.5};
  const auto e = sample_initial(test::finalized(c));
  REQUIRE(e.species[0].size() == 1);
  CHECK(e.species[0].weight[0] == 1.0);
  CHECK(norm(e.species[0].x[0] - Vec3{2.0, -1.0, 0.5}) <= 1.0);
  CHECK(norm(e.species[0].v[0]) <= 1.0);
}

TEST_CASE("sampling is deterministic for every recipe") {
  for (auto kind : {RecipeKind::UniformBall, RecipeKind::TruncatedGaussian, RecipeKind::ShiftedBeam,
                    RecipeKind::SphericalShellset}) {
    SimulationConfig c;
    auto s = test::ball_species("a", 1.0, 500, 42);
    s.init.kind = kind;
    s.init.sigma_v = 0.3;
    c.species = {s};
    c = test::finalized(c);
    CHECK(sample_initial(c) == sample_initial(c));
  }
}

TEST_CASE("uniform ball: fraction inside R/2 is 1/8 within 3 sigma") {
  SimulationConfig c;
  c.species = {test::ball_species("a", 1.0, 100000, 2024)};
  c.species[0].init.radius_x = 2.0;
  const auto e = sample_initial(test::finalized(c));
  std::size_t inside = 0;
  for (const auto& x : e.species[0].x) inside += norm(x) <= 1.0 ? 1 : 0;
  const double n = 100000.0;
  const double sigma = std::sqrt(0.125 * 0.875 / n);
  CHECK(std::abs(inside / n - 0.125) < 3.0 * sigma);
}

TEST_CASE("truncated gaussian and shifted beam respect their supports") {
  SimulationConfig c;
  auto s = test::ball_species("a", 1.0, 2000, 5);
  s.init.kind = RecipeKind::TruncatedGaussian;
  s.init.radius_v.reset();
  s.init.sigma_v = 0.2;
  s.init.center_v = {1.0, 0.0, 0.0};
  c.species = {s};
  const auto e = sample_initial(test::finalized(c));
  for (std::size_t i = 0; i < e.species[0].size(); ++i) {
    CHECK(norm(e.species[0].x[i]) <= 1.0);
    CHECK(norm(e.species[0].v[i] - Vec3{1.0, 0.0, 0.0}) <= 0.6 + 1e-12);
  }
}

TEST_CASE("weights sum to total_number") {
  SimulationConfig c;
  c.species = {test::ball_species("a", 1.0, 777, 9, 2.5)};
  const auto e = sample_initial(test::finalized(c));
  CHECK(species_number(e.species[0]) == doctest::Approx(2.5).epsilon(1e-14));
}

TEST_CASE("net charge") {
  SimulationConfig c;
  c.species = {test::ball_species("a", 1.0, 10, 1, 2.5)};
  const auto one = sample_initial(test::finalized(c));
  CHECK(net_charge(ParticleEnsemble{}, c.species) == 0.0);
  CHECK(net_charge(one, c.species) == doctest::Approx(2.5).epsilon(1e-14));

  c.species = {test::ball_species("p", 1.0, 100, 7), test::ball_species("m", -1.0, 100, 7)};
  const auto twin = sample_initial(test::finalized(c));
  CHECK(net_charge(twin, c.species) == 0.0);
}

TEST_CASE("shell coordinates follow from x and v") {
  SpeciesState s;
  s.id = {0};
  s.x = {{3.0, 0.0, 0.0}};
  s.v = {{1.0, 2.0, 0.0}};
  s.weight = {1.0};
  const auto c = shell_coordinates(s);
  CHECK(c.r[0] == 3.0);
  CHECK(c.w[0] == 1.0);
  CHECK(c.ell[0] == doctest::Approx(36.0));
}

TEST_CASE("snapshot schedules") {
  const auto dy = geometric_snapshot_times(1000.0, SnapshotSchedule::Dyadic);
  CHECK(dy.front() == doctest::Approx(1000.0 / 512.0));
  CHECK(dy.back() == 1000.0);
  CHECK(dy.size() == 10);
  const auto half = geometric_snapshot_times(1000.0, SnapshotSchedule::HalfDyadic);
  CHECK(half.size() == 20);
  for (std::size_t k = 0; k < dy.size(); ++k)
    CHECK(std::find(half.begin(), half.end(), dy[k]) != half.end());
}

TEST_CASE("invariant violations are config errors") {
  SimulationConfig c;
  c.species = {test::ball_species("a", 1.0, 10, 1)};
  auto bad = c;
  bad.species[0].mass = 0.0;
  CHECK_THROWS_AS(finalize_config(bad), ConfigError);
  bad = c;
  bad.t_end = 0.5;
  CHECK_THROWS_AS(finalize_config(bad), ConfigError);
  bad = c;
  bad.species[0].count = 0;
  CHECK_THROWS_AS(finalize_config(bad), ConfigError);
  bad = c;
  bad.engine = EngineKind::SphericalShell;
  bad.species.push_back(test::ball_species("b", -1.0, 10, 2));
  CHECK_THROWS_WITH_AS(finalize_config(bad), "spherical-shell requires one species", ConfigError);
  bad = c;
  bad.engine = EngineKind::SphericalShell;
  bad.species[0].init.kind = RecipeKind::ShiftedBeam;
  bad.species[0].init.sigma_v = 0.1;
  CHECK_THROWS_AS(finalize_config(bad), ConfigError);
}
