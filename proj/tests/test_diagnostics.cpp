#include <doctest.h>

#include <cmath>
#include <random>

#include "test_helpers.hpp"
#include "vsl/diagnostics.hpp"
#include "vsl/errors.hpp"

using namespace vsl;

namespace {

SpeciesState state_of(std::vector<Vec3> x, std::vector<Vec3> v, std::vector<double> w) {
  SpeciesState s;
  for (std::size_t i = 0; i < x.size(); ++i) s.id.push_back(i);
  s.x = std::move(x);
  s.v = std::move(v);
  s.weight = std::move(w);
  return s;
}

}  // namespace

TEST_CASE("single particle lands in one cell with density 1/h^3") {
  VelocityGrid grid{{0, 0, 0}, 0.5, {4, 4, 4}};
  ParticleEnsemble e;
  e.species.push_back(state_of({{0, 0, 0}}, {{0.6, 0.3, 1.2}}, {1.0}));
  std::vector<SpeciesSpec> species{test::ball_species("a", 1.0, 1, 1)};
  const auto d = spatial_average(e, species, grid);
  const auto cell = grid.flat(1, 0, 2);
  CHECK(d.F(0, cell) == 8.0);
  CHECK(d.net[cell] == 8.0);
  double total = 0.0;
  for (double n : d.number[0]) total += n;
  CHECK(total == 1.0);

  const auto cic = spatial_average(e, species, grid, Deposit::CloudInCell);
  CHECK(cic.species_mass(0) == doctest::Approx(1.0).epsilon(1e-14));

  e.species[0].v[0] = {5.0, 0.0, 0.0};
  CHECK_THROWS_AS(spatial_average(e, species, grid), DomainError);
}

TEST_CASE("twin species give zero net density and zero cross deviation") {
  SimulationConfig c;
  c.species = {test::ball_species("p", 1.0, 200, 4), test::ball_species("m", -1.0, 200, 4)};
  c = test::finalized(c);
  const auto e = sample_initial(c);
  const std::vector<const ParticleEnsemble*> all{&e};
  const auto grid = covering_velocity_grid(all, 12);
  const auto d = spatial_average(e, c.species, grid, Deposit::CloudInCell);
  for (double p : d.net) CHECK(p == 0.0);
  CHECK(max_cross_species_deviation(d, 0, 1) == 0.0);
  CHECK(max_species_deviation(d, d) == 0.0);
}

TEST_CASE("free streaming keeps velocity diameter, Y-support and kinetic energy") {
  SimulationConfig c;
  c.species = {test::ball_species("a", 0.0, 100, 6)};
  c.softening = 0.1;
  c = test::finalized(c);
  const auto force = make_force_model(c);
  Snapshot s0{0.0, sample_initial(c)};
  Snapshot s1 = s0;
  s1.t = 50.0;
  for (std::size_t i = 0; i < s1.ensemble.species[0].size(); ++i)
    s1.ensemble.species[0].x[i] += 50.0 * s1.ensemble.species[0].v[i];
  const auto a = support_extents(s0);
  const auto b = support_extents(s1);
  CHECK(a.vel_diameter == b.vel_diameter);
  CHECK(b.mu == doctest::Approx(a.mu).epsilon(1e-10));
  const auto r0 = conservation_report(s0, c.species, *force);
  const auto r1 = conservation_report(s1, c.species, *force);
  CHECK(r0.kinetic == r1.kinetic);
  CHECK(r0.momentum == r1.momentum);
  CHECK(r1.net_charge == 0.0);
  CHECK(r1.species_number[0] == doctest::Approx(1.0));
}

TEST_CASE("exactly self-similar data has zero residuals") {
  SimulationConfig c;
  c.species = {test::ball_species("a", 1.0, 80, 12)};
  c.softening = 1e-3;
  c.t_end = 64.0;
  c = test::finalized(c);
  const auto initial = sample_initial(c);
  const auto at = [&](double t) {
    Snapshot s{t, initial};
    for (std::size_t i = 0; i < s.ensemble.species[0].size(); ++i)
      s.ensemble.species[0].x[i] = t * s.ensemble.species[0].v[i];
    return s;
  };
  const auto profile = build_profile(at(64.0), c);
  const auto probes = probe_grid(profile.velocity_box(), 5);
  const auto r = self_similar_residuals(at(8.0), c.species, profile, probes);
  double scale_E = 0.0;
  for (const auto& e : profile.softened_field(probes)) scale_E = std::max(scale_E, norm(e));
  double scale_rho = 0.0;
  for (double p : profile.smoothed_density(probes)) scale_rho = std::max(scale_rho, std::abs(p));
  CHECK(scale_E > 0.0);
  CHECK(r.E < 1e-12 * scale_E);
  CHECK(r.rho < 1e-12 * scale_rho);
  CHECK(r.gradE >= 0.0);
}

TEST_CASE("profile charge sum matches the net charge and vanishes for twins") {
  SimulationConfig c;
  c.species = {test::ball_species("p", 1.0, 50, 3, 2.0), test::ball_species("m", -0.5, 30, 5)};
  c = test::finalized(c);
  const Snapshot s{c.t_end, sample_initial(c)};
  CHECK(build_profile(s, c).charge_sum() == doctest::Approx(1.5));

  c.species = {test::ball_species("p", 1.0, 50, 3), test::ball_species("m", -1.0, 50, 3)};
  c = test::finalized(c);
  const Snapshot twin{c.t_end, sample_initial(c)};
  CHECK(build_profile(twin, c).charge_sum() == 0.0);
}

TEST_CASE("Cauchy probe on synthetic frames with V converging like 1/t") {
  std::vector<TrajectoryFrame> frames;
  for (double t : {1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0}) {
    TrajectoryFrame f;
    f.t = t;
    const Vec3 v{1.0 + 1.0 / t, 0, 0};
    f.V = {{v}};
    f.X = {{t * v}};
    f.Y = {{Vec3{0, 0, 0}}};
    f.Z = {{Vec3{0, 0, 0}}};
    frames.push_back(f);
  }
  const auto table = convergence_probe(frames, 1.0);
  REQUIRE(table.rows.size() == 6);
  CHECK(table.rows[0].d_V == doctest::Approx(0.5));
  CHECK(table.slope_V == doctest::Approx(-1.0));
  const auto scatter = scattering_residual(frames);
  CHECK(scatter.back().combined == 0.0);
  CHECK(scatter.front().combined == doctest::Approx(1.0 - 1.0 / 64.0));
}

TEST_CASE("probe grid and bounding box") {
  const Box b{{0, 0, 0}, {1, 2, 3}};
  const auto g = probe_grid(b, 3);
  CHECK(g.size() == 27);
  const auto bb = bounding_box(g);
  CHECK(bb.lo == b.lo);
  CHECK(bb.hi == b.hi);
  CHECK(b.volume() == 6.0);
  CHECK_THROWS(probe_grid(b, 1));
}
