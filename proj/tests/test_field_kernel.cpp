#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "vsl/errors.hpp"
#include "vsl/field_kernel.hpp"

using namespace vsl;

namespace {

SourceBlock block(const std::vector<Vec3>& x, const std::vector<double>& c) { return {x, c}; }

}  // namespace

TEST_CASE("single unit source gives 1/(4 pi) at unit distance") {
  const std::vector<Vec3> x{{0, 0, 0}};
  const std::vector<double> c{1.0};
  const std::vector<SourceBlock> src{block(x, c)};
  const std::vector<Vec3> target{{1, 0, 0}};
  const auto e = softened_field_sum(target, src, 0.0);
  CHECK(e[0].x == doctest::Approx(0.0795774715459477).epsilon(1e-15));
  CHECK(e[0].y == 0.0);
  CHECK(e[0].z == 0.0);
}

TEST_CASE("symmetric opposite sources cancel") {
  const std::vector<Vec3> x{{1, 0, 0}, {-1, 0, 0}};
  const std::vector<double> c{1.0, 1.0};
  const std::vector<SourceBlock> src{block(x, c)};
  const std::vector<Vec3> target{{0, 0, 0}};
  CHECK(norm(softened_field_sum(target, src, 0.0)[0]) == 0.0);
}

TEST_CASE("coincident target and source without softening is singular") {
  const std::vector<Vec3> x{{0, 0, 0}};
  const std::vector<double> c{1.0};
  const std::vector<SourceBlock> src{block(x, c)};
  CHECK_THROWS_AS(softened_field_sum(x, src, 0.0), SingularityError);
  CHECK_NOTHROW(softened_field_sum(x, src, 0.1));
}

TEST_CASE("gradient of a unit source is diag(-2, 1, 1)/(4 pi)") {
  const std::vector<Vec3> x{{0, 0, 0}};
  const std::vector<double> c{1.0};
  const std::vector<SourceBlock> src{block(x, c)};
  const std::vector<Vec3> target{{1, 0, 0}};
  const auto g = softened_gradient_sum(target, src, 0.0)[0];
  const double k = 0.0795774715459477;
  CHECK(g(0, 0) == doctest::Approx(-2.0 * k));
  CHECK(g(1, 1) == doctest::Approx(k));
  CHECK(g(2, 2) == doctest::Approx(k));
  CHECK(g(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("gradient matches central differences to second order") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> x(50);
  std::vector<double> c(50);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = {u(rng), u(rng), u(rng)};
    c[i] = u(rng);
  }
  const std::vector<SourceBlock> src{block(x, c)};
  const Vec3 p{0.3, -0.2, 1.7};
  const auto g = softened_gradient_sum(std::vector<Vec3>{p}, src, 0.05)[0];
  double previous = 0.0;
  for (double delta : {1e-2, 5e-3}) {
    double err = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
      Vec3 a = p, b = p;
      a[j] += delta;
      b[j] -= delta;
      const auto ea = softened_field_sum(std::vector<Vec3>{a}, src, 0.05)[0];
      const auto eb = softened_field_sum(std::vector<Vec3>{b}, src, 0.05)[0];
      for (std::size_t i = 0; i < 3; ++i) err = std::max(err, std::abs((ea[i] - eb[i]) / (2 * delta) - g(i, j)));
    }
    if (previous > 0.0) CHECK(previous / err == doctest::Approx(4.0).epsilon(0.1));
    previous = err;
  }
}

TEST_CASE("no sources: zero field, zero gradient, zero density") {
  const std::vector<Vec3> target{{0.5, 0, 0}};
  const std::vector<SourceBlock> none;
  CHECK(norm(softened_field_sum(target, none, 0.0)[0]) == 0.0);
  CHECK(norm(softened_gradient_sum(target, none, 0.0)[0]) == 0.0);
  CHECK(density_estimate(target, none, 0.1)[0] == 0.0);
}

TEST_CASE("twin blocks cancel exactly in every estimator") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> x(300), v(300);
  std::vector<double> plus(300), minus(300);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = {u(rng), u(rng), u(rng)};
    v[i] = {u(rng), u(rng), u(rng)};
    plus[i] = 0.01 * (1.0 + u(rng));
    minus[i] = -plus[i];
  }
  const std::vector<SourceBlock> src{{x, plus, v}, {x, minus, v}};
  std::vector<Vec3> targets(x.begin(), x.begin() + 20);
  targets.push_back({0.1, 0.2, 0.3});
  for (const auto& e : softened_field_sum(targets, src, 0.01)) CHECK(norm(e) == 0.0);
  for (const auto& g : softened_gradient_sum(targets, src, 0.01)) CHECK(norm(g) == 0.0);
  for (double r : density_estimate(targets, src, 0.3)) CHECK(r == 0.0);
  for (const auto& j : current_estimate(targets, src, 0.3)) CHECK(norm(j) == 0.0);
  for (const auto& e : field_at_sources(src, 0.01)) CHECK(norm(e) == 0.0);
}

TEST_CASE("field at sources excludes self and matches the direct sum otherwise") {
  const std::vector<Vec3> x{{0, 0, 0}, {1, 0, 0}, {0, 2, 0}};
  const std::vector<double> c{1.0, 2.0, -1.0};
  const std::vector<SourceBlock> src{block(x, c)};
  const auto at = field_at_sources(src, 0.0);
  const std::vector<Vec3> x_rest{{1, 0, 0}, {0, 2, 0}};
  const std::vector<double> c_rest{2.0, -1.0};
  const std::vector<SourceBlock> rest{block(x_rest, c_rest)};
  const auto direct = softened_field_sum(std::vector<Vec3>{x[0]}, rest, 0.0)[0];
  CHECK(norm(at[0] - direct) < 1e-15);
}

TEST_CASE("pair energy of two unit charges") {
  const std::vector<Vec3> x{{0, 0, 0}, {2, 0, 0}};
  const std::vector<double> c{1.0, 1.0};
  const std::vector<SourceBlock> src{block(x, c)};
  CHECK(softened_pair_energy(src, 0.0) == doctest::Approx(0.0795774715459477 / 2.0));
}

TEST_CASE("smoothing kernel integrates to one") {
  const double h = 0.7;
  const int n = 200;
  double integral = 0.0;
  const double dr = h / n;
  for (int i = 0; i < n; ++i) {
    const double r = (i + 0.5) * dr;
    integral += 4.0 * std::numbers::pi * r * r * smoothing_kernel(r, h) * dr;
  }
  CHECK(integral == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(smoothing_kernel(h, h) == 0.0);
}

TEST_CASE("density of a single unit source integrates to one on a grid") {
  const std::vector<Vec3> x{{0.013, -0.021, 0.007}};
  const std::vector<double> c{1.0};
  const std::vector<SourceBlock> src{block(x, c)};
  const double h = 0.5;
  const int n = 60;
  const double step = 2.0 * h / n;
  std::vector<Vec3> grid;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        grid.push_back({-h + (i + 0.5) * step, -h + (j + 0.5) * step, -h + (k + 0.5) * step});
  double total = 0.0;
  for (double r : density_estimate(grid, src, h)) total += r * step * step * step;
  CHECK(total == doctest::Approx(1.0).epsilon(2e-3));
  CHECK_THROWS_AS(density_estimate(grid, src, 0.0), DomainError);
}

TEST_CASE("enclosed charge and spherical field") {
  CHECK(enclosed_charge({}, {}, 1.0, 1.0) == 0.0);
  const std::vector<double> r{0.1, 0.5, 0.9};
  const std::vector<double> w{1.0, 1.0, 0.5};
  CHECK(enclosed_charge(r, w, 2.0, 10.0) == 5.0);
  CHECK(enclosed_charge(r, w, 2.0, 0.5) == 4.0);
  CHECK_THROWS_AS(enclosed_charge(r, w, 1.0, 0.0), DomainError);
  CHECK(spherical_field(0.0, 1.0) == 0.0);
  CHECK(spherical_field(4.0 * std::numbers::pi, 1.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(spherical_field(1.0, -1.0), DomainError);

  const RadialCharge shells(std::vector<double>{0.9, 0.1, 0.5}, std::vector<double>{0.5, 1.0, 1.0});
  CHECK(shells.enclosed(0.5) == 2.0);
  CHECK(shells.enclosed_below(0.5) == 1.0);
  CHECK(shells.total() == 2.5);
}

TEST_CASE("uniform ball: enclosed charge at R/2 is M/8 within 3 sigma") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = 100000;
  std::vector<double> r(n), w(n, 1.0 / n);
  for (auto& x : r) x = std::cbrt(u(rng));
  std::sort(r.begin(), r.end());
  const double q = enclosed_charge(r, w, 1.0, 0.5);
  CHECK(std::abs(q - 0.125) < 3.0 * std::sqrt(0.125 * 0.875 / n));
}

TEST_CASE("limiting field of a point cluster and of a dipole") {
  const std::vector<Vec3> u{{0.2, 0, 0}};
  const std::vector<double> m{3.0};
  const std::vector<SourceBlock> profile{block(u, m)};
  const Vec3 v{10.0, 4.0, -3.0};
  const Vec3 d = v - u[0];
  const Vec3 expected = (3.0 * kInvFourPi / std::pow(norm(d), 3)) * d;
  CHECK(norm(limiting_field(std::vector<Vec3>{v}, profile, 1e-3)[0] - expected) < 1e-6 * norm(expected));

  const std::vector<Vec3> pair{{1, 0, 0}, {-1, 0, 0}};
  const std::vector<double> q{1.0, -1.0};
  const std::vector<SourceBlock> dipole{block(pair, q)};
  const auto far = limiting_field(std::vector<Vec3>{{0, 0, 100}, {0, 0, 200}}, dipole, 1e-3);
  CHECK(norm(far[0]) / norm(far[1]) == doctest::Approx(8.0).epsilon(1e-3));

  const std::vector<Vec3> at{{0.3, 0, 0}};
  const std::vector<double> plus{1.0}, minus{-1.0};
  const std::vector<SourceBlock> twin{block(at, plus), block(at, minus)};
  CHECK(norm(limiting_field(std::vector<Vec3>{{1, 1, 1}}, twin, 1e-3)[0]) == 0.0);
}
