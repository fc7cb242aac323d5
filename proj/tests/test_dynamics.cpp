#include <doctest.h>

#include <cmath>
#include <numbers>

#include "test_helpers.hpp"
#include "vsl/diagnostics.hpp"
#include "vsl/dynamics.hpp"
#include "vsl/errors.hpp"

using namespace vsl;

namespace {

SimulationConfig small_plasma(std::uint64_t count = 64, double charge = 1.0) {
  SimulationConfig c;
  c.species = {test::ball_species("a", charge, count, 9)};
  c.softening = 0.05;
  c.t_end = 4.0;
  return test::finalized(c);
}

}  // namespace

TEST_CASE("zero charge is free streaming") {
  const auto c = small_plasma(32, 0.0);
  auto e = sample_initial(c);
  const auto start = e;
  const auto force = make_force_model(c);
  for (int k = 0; k < 100; ++k) step_characteristics_3d(e, *force, 0.05);
  for (std::size_t i = 0; i < e.species[0].size(); ++i) {
    const Vec3 expected = start.species[0].x[i] + 5.0 * start.species[0].v[i];
    CHECK(norm(e.species[0].x[i] - expected) < 1e-12);
    CHECK(e.species[0].v[i] == start.species[0].v[i]);
  }
}

TEST_CASE("leapfrog is time reversible") {
  const auto c = small_plasma();
  auto e = sample_initial(c);
  const auto start = e;
  const auto force = make_force_model(c);
  LeapfrogIntegrator integrator(*force);
  for (int k = 0; k < 200; ++k) integrator.step(e, {}, 0.01);
  for (auto& s : e.species)
    for (auto& v : s.v) v = -v;
  integrator.invalidate();
  for (int k = 0; k < 200; ++k) integrator.step(e, {}, 0.01);
  double err = 0.0;
  for (std::size_t i = 0; i < e.species[0].size(); ++i)
    err = std::max(err, norm(e.species[0].x[i] - start.species[0].x[i]));
  CHECK(err < 1e-12);
}

TEST_CASE("gravitational circular orbit of a tracer keeps its radius and energy") {
  SimulationConfig c;
  auto s = test::ball_species("sun", 1.0, 1, 1, 4.0 * std::numbers::pi);
  c.species = {s};
  c.force_sign = ForceSign::Gravitational;
  c.softening = 0.0;
  c = test::finalized(c);
  ParticleEnsemble e;
  e.species.push_back({{0}, {{0, 0, 0}}, {{0, 0, 0}}, {4.0 * std::numbers::pi}});
  const auto force = make_force_model(c);
  LeapfrogIntegrator integrator(*force);
  std::vector<Tracer> tracer{{{1, 0, 0}, {0, 1, 0}, 1.0}};
  const auto energy = [&] { return 0.5 * norm2(tracer[0].v) - 1.0 / norm(tracer[0].x); };
  const double e0 = energy();
  double max_radius_error = 0.0;
  for (int k = 0; k < 6283; ++k) {
    integrator.step(e, tracer, 0.01);
    max_radius_error = std::max(max_radius_error, std::abs(norm(tracer[0].x) - 1.0));
  }
  CHECK(std::abs(energy() - e0) / std::abs(e0) < 1e-3);
  CHECK(max_radius_error < 1e-3);
  CHECK(norm(e.species[0].x[0]) == 0.0);
}

TEST_CASE("spherical step conserves energy with angular momentum") {
  SimulationConfig c;
  c.species = {test::ball_species("a", 1.0, 400, 17, 10.0)};
  c.species[0].init.kind = RecipeKind::SphericalShellset;
  c.engine = EngineKind::SphericalShell;
  c.t_end = 10.0;
  c = test::finalized(c);
  const auto force = make_force_model(c);
  Snapshot snap{0.0, sample_initial(c)};
  const double e0 = conservation_report(snap, c.species, *force).total;
  std::vector<double> ell0;
  for (const auto& ell : shell_coordinates(snap.ensemble.species[0]).ell) ell0.push_back(ell);
  for (int k = 0; k < 1000; ++k) step_spherical(snap.ensemble, c.species, c.force_sign, 0.005);
  const double e1 = conservation_report(snap, c.species, *force).total;
  CHECK(std::abs(e1 - e0) / std::abs(e0) < 1e-3);
  const auto ell1 = shell_coordinates(snap.ensemble.species[0]).ell;
  for (std::size_t i = 0; i < ell0.size(); ++i) CHECK(ell1[i] == doctest::Approx(ell0[i]).epsilon(1e-10));
}

TEST_CASE("spherical step rejects a shell at the origin") {
  std::vector<SpeciesSpec> species{test::ball_species("a", 1.0, 1, 1)};
  ParticleEnsemble e;
  e.species.push_back({{0}, {{0, 0, 0}}, {{1, 0, 0}}, {1.0}});
  CHECK_THROWS_AS(step_spherical(e, species, ForceSign::Plasma, 0.1), DomainError);
}

TEST_CASE("step plan lands exactly on the interval end") {
  const auto c = small_plasma();
  const auto e = sample_initial(c);
  const auto force = make_force_model(c);
  const auto plan = plan_interval(c, *force, e, 2.0, 2.8284271247461903);
  CHECK(plan.steps >= 1);
  CHECK(plan.dt <= c.dt_initial * 2.0 * (1.0 + 1e-12));
  CHECK(plan.dt * plan.steps == doctest::Approx(0.8284271247461903).epsilon(1e-14));
  CHECK_THROWS_AS(plan_interval(c, *force, e, 2.0, 2.0), DomainError);
}

TEST_CASE("Y and Z identities") {
  const Vec3 x{3, -1, 2}, v{0.5, 0.25, -1};
  CHECK(compute_Y(4.0, x, v) == Vec3{1, -2, 6});
  const std::vector<double> times{1.0, std::exp(2.0)};
  const std::vector<Vec3> Y{{1, 1, 1}, {2, 2, 2}};
  const std::vector<Vec3> V{{0, 0, 0}, {1, 0, 0}};
  const LimitFieldFn zero = [](std::span<const Vec3> q) { return std::vector<Vec3>(q.size()); };
  const auto z0 = compute_Z(times, Y, V, 1.0, zero);
  CHECK(z0[0] == Y[0]);
  CHECK(z0[1] == Y[1]);
  const LimitFieldFn unit = [](std::span<const Vec3> q) { return std::vector<Vec3>(q.size(), Vec3{1, 0, 0}); };
  const auto z1 = compute_Z(times, Y, V, 0.5, unit);
  CHECK(z1[0] == Y[0]);
  CHECK(z1[1].x == doctest::Approx(3.0));
  const std::vector<double> early{0.5, 2.0};
  CHECK_THROWS_AS(compute_Z(early, Y, V, 1.0, zero), DomainError);

  SpeciesSpec s;
  s.charge = -2.0;
  s.mass = 4.0;
  CHECK(z_prefactor(s, ZPrefactor::ChargeOverMass) == -0.5);
  CHECK(z_prefactor(s, ZPrefactor::Charge) == -2.0);
}

TEST_CASE("flow Jacobian is one for free streaming and rejects a degenerate box") {
  auto c = small_plasma(16, 0.0);
  const auto e = sample_initial(c);
  CHECK(flow_jacobian_probe(c, e, 0, {0.1, 0, 0}, {0.2, 0, 0}, 1e-3, 3.0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(flow_jacobian_probe(c, e, 0, {}, {}, 0.0, 3.0), DomainError);
}

TEST_CASE("spherical tracer field is smooth and exact outside the ensemble") {
  SimulationConfig c;
  c.species = {test::ball_species("a", 2.0, 500, 4, 3.0)};
  c.species[0].init.kind = RecipeKind::SphericalShellset;
  c.engine = EngineKind::SphericalShell;
  c = test::finalized(c);
  const auto e = sample_initial(c);
  const SphericalShellForce force(c.species, c.force_sign);
  const Vec3 far{0, 3, 4};
  const auto outside = force.tracer_field(e, std::vector<Vec3>{far})[0];
  CHECK(norm(outside - force.field_at(e, std::vector<Vec3>{far})[0]) < 1e-12);
  CHECK(outside.z == doctest::Approx(6.0 * kInvFourPi / 25.0 * 4.0 / 5.0));
  const auto near = force.tracer_field(e, std::vector<Vec3>{{1e-3, 0, 0}, {0.5, 0, 0}, {0.5 + 1e-6, 0, 0}});
  CHECK(std::abs(near[0].x) < 1e-2);
  CHECK(std::abs(near[2].x - near[1].x) < 1e-5 * std::abs(near[1].x));
}
