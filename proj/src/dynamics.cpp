#include "vsl/dynamics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "vsl/errors.hpp"

namespace vsl {

namespace {

struct SortedParticle {
  double r;
  std::size_t species;
  std::size_t index;
};

// All particles ordered by radius, ties broken by (species, index).
std::vector<SortedParticle> radial_order(const ParticleEnsemble& e) {
  std::vector<SortedParticle> order;
  order.reserve(e.total_count());
  for (std::size_t a = 0; a < e.species.size(); ++a)
    for (std::size_t i = 0; i < e.species[a].size(); ++i)
      order.push_back({norm(e.species[a].x[i]), a, i});
  std::sort(order.begin(), order.end(), [](const SortedParticle& p, const SortedParticle& q) {
    if (p.r != q.r) return p.r < q.r;
    if (p.species != q.species) return p.species < q.species;
    return p.index < q.index;
  });
  return order;
}

double max_abs_charge_over_mass(std::span<const SpeciesSpec> species) {
  double m = 0.0;
  for (const auto& s : species) m = std::max(m, std::abs(s.charge_over_mass()));
  return m;
}

void check_finite(const std::vector<std::vector<Vec3>>& field) {
  for (const auto& block : field)
    for (const auto& e : block)
      if (!is_finite(e)) throw RuntimeFailure("non-finite field value during integration");
}

}  // namespace

std::vector<SourceBlock> charge_blocks(const ParticleEnsemble& ensemble,
                                       std::span<const SpeciesSpec> species,
                                       std::vector<std::vector<double>>& charges) {
  charges.assign(ensemble.species.size(), {});
  std::vector<SourceBlock> blocks;
  for (std::size_t a = 0; a < ensemble.species.size(); ++a) {
    const auto& s = ensemble.species[a];
    charges[a].resize(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) charges[a][i] = species[a].charge * s.weight[i];
  }
  for (std::size_t a = 0; a < ensemble.species.size(); ++a)
    blocks.push_back({ensemble.species[a].x, charges[a], ensemble.species[a].v});
  return blocks;
}

std::vector<std::vector<Vec3>> SphericalShellForce::field_at_particles(const ParticleEnsemble& e) const {
  std::vector<std::vector<Vec3>> field(e.species.size());
  for (std::size_t a = 0; a < e.species.size(); ++a) field[a].resize(e.species[a].size());
  double inside = 0.0;
  for (const auto& p : radial_order(e)) {
    const Vec3& x = e.species[p.species].x[p.index];
    if (p.r > 0.0) field[p.species][p.index] = (inside * kInvFourPi / (p.r * p.r * p.r)) * x;
    inside += species_[p.species].charge * e.species[p.species].weight[p.index];
  }
  return field;
}

std::vector<Vec3> SphericalShellForce::field_at(const ParticleEnsemble& e,
                                                std::span<const Vec3> points) const {
  std::vector<double> radii;
  std::vector<double> charges;
  for (std::size_t a = 0; a < e.species.size(); ++a)
    for (std::size_t i = 0; i < e.species[a].size(); ++i) {
      radii.push_back(norm(e.species[a].x[i]));
      charges.push_back(species_[a].charge * e.species[a].weight[i]);
    }
  const RadialCharge shells(radii, charges);
  std::vector<Vec3> out(points.size());
  for (std::size_t k = 0; k < points.size(); ++k) {
    const double r = norm(points[k]);
    if (r > 0.0) out[k] = (shells.enclosed_below(r) * kInvFourPi / (r * r * r)) * points[k];
  }
  return out;
}

std::vector<Vec3> SphericalShellForce::tracer_field(const ParticleEnsemble& e,
                                                   std::span<const Vec3> points) const {
  std::vector<double> s;
  std::vector<double> c;
  double s_max = 0.0;
  for (std::size_t a = 0; a < e.species.size(); ++a)
    for (std::size_t i = 0; i < e.species[a].size(); ++i) {
      const double r = norm(e.species[a].x[i]);
      s.push_back(r * r * r);
      c.push_back(species_[a].charge * e.species[a].weight[i]);
      s_max = std::max(s_max, s.back());
    }
  std::vector<Vec3> out(points.size());
  if (!(s_max > 0.0)) return out;
  const double inv = 1.0 / (std::numbers::sqrt2 * kTracerSmoothing * s_max);
  for (std::size_t k = 0; k < points.size(); ++k) {
    const double r = norm(points[k]);
    if (!(r > 0.0)) continue;
    const double sq = r * r * r;
    double q = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j)
      q += c[j] * 0.5 * (std::erfc((s[j] - sq) * inv) - std::erfc((s[j] + sq) * inv));
    out[k] = (q * kInvFourPi / (r * r * r)) * points[k];
  }
  return out;
}

double SphericalShellForce::potential_energy(const ParticleEnsemble& e) const {
  double inside = 0.0;
  double energy = 0.0;
  for (const auto& p : radial_order(e)) {
    const double c = species_[p.species].charge * e.species[p.species].weight[p.index];
    if (p.r > 0.0) energy += c * inside * kInvFourPi / p.r;
    inside += c;
  }
  return sign_factor() * energy;
}

double SphericalShellForce::tidal_scale(const ParticleEnsemble& e) const {
  const auto order = radial_order(e);
  // the innermost percent is shot noise of a handful of shells, not a resolved scale
  const std::size_t skip = std::max<std::size_t>(1, order.size() / 100);
  double inside = 0.0;
  double scale = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& p = order[k];
    if (k >= skip && p.r > 0.0)
      scale = std::max(scale, 3.0 * std::abs(inside) * kInvFourPi / (p.r * p.r * p.r));
    inside += species_[p.species].charge * e.species[p.species].weight[p.index];
  }
  return max_abs_charge_over_mass(species_) * scale;
}

std::vector<std::vector<Vec3>> DirectSoftenedForce::field_at_particles(const ParticleEnsemble& e) const {
  std::vector<std::vector<double>> charges;
  const auto blocks = charge_blocks(e, species_, charges);
  const auto flat = field_at_sources(blocks, eps_);
  std::vector<std::vector<Vec3>> field(e.species.size());
  std::size_t k = 0;
  for (std::size_t a = 0; a < e.species.size(); ++a) {
    field[a].assign(flat.begin() + static_cast<std::ptrdiff_t>(k),
                    flat.begin() + static_cast<std::ptrdiff_t>(k + e.species[a].size()));
    k += e.species[a].size();
  }
  return field;
}

std::vector<Vec3> DirectSoftenedForce::field_at(const ParticleEnsemble& e,
                                                std::span<const Vec3> points) const {
  std::vector<std::vector<double>> charges;
  const auto blocks = charge_blocks(e, species_, charges);
  return softened_field_sum(points, blocks, eps_);
}

double DirectSoftenedForce::potential_energy(const ParticleEnsemble& e) const {
  std::vector<std::vector<double>> charges;
  const auto blocks = charge_blocks(e, species_, charges);
  return sign_factor() * softened_pair_energy(blocks, eps_);
}

double DirectSoftenedForce::tidal_scale(const ParticleEnsemble& e) const {
  std::vector<std::vector<double>> charges;
  const auto blocks = charge_blocks(e, species_, charges);
  double scale = 0.0;
  for (const auto& g : gradient_at_sources(blocks, eps_)) scale = std::max(scale, norm(g));
  return max_abs_charge_over_mass(species_) * scale;
}

std::unique_ptr<ForceModel> make_force_model(const SimulationConfig& config) {
  if (config.engine == EngineKind::SphericalShell)
    return std::make_unique<SphericalShellForce>(config.species, config.force_sign);
  return std::make_unique<DirectSoftenedForce>(config.species, config.force_sign,
                                               effective_softening(config));
}

void LeapfrogIntegrator::compute(const ParticleEnsemble& ensemble, std::span<const Tracer> tracers) {
  const auto species = force_->species();
  const double sign = force_->sign_factor();
  accel_ = force_->field_at_particles(ensemble);
  check_finite(accel_);
  for (std::size_t a = 0; a < accel_.size(); ++a) {
    const double k = sign * species[a].charge_over_mass();
    for (auto& e : accel_[a]) e *= k;
  }
  tracer_accel_.clear();
  if (!tracers.empty()) {
    std::vector<Vec3> points;
    points.reserve(tracers.size());
    for (const auto& t : tracers) points.push_back(t.x);
    tracer_accel_ = force_->tracer_field(ensemble, points);
    for (std::size_t k = 0; k < tracers.size(); ++k) {
      if (!is_finite(tracer_accel_[k])) throw RuntimeFailure("non-finite field at tracer");
      tracer_accel_[k] *= sign * tracers[k].charge_over_mass;
    }
  }
  cached_ = true;
}

void LeapfrogIntegrator::kick(ParticleEnsemble& ensemble, std::span<Tracer> tracers, double h) const {
  for (std::size_t a = 0; a < ensemble.species.size(); ++a) {
    auto& v = ensemble.species[a].v;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += h * accel_[a][i];
  }
  for (std::size_t k = 0; k < tracers.size(); ++k) tracers[k].v += h * tracer_accel_[k];
}

void LeapfrogIntegrator::step(ParticleEnsemble& ensemble, std::span<Tracer> tracers, double dt) {
  if (!cached_ || tracer_accel_.size() != tracers.size()) compute(ensemble, tracers);
  kick(ensemble, tracers, 0.5 * dt);
  for (auto& s : ensemble.species)
    for (std::size_t i = 0; i < s.size(); ++i) s.x[i] += dt * s.v[i];
  for (auto& t : tracers) t.x += dt * t.v;
  compute(ensemble, tracers);
  kick(ensemble, tracers, 0.5 * dt);
}

void step_characteristics_3d(ParticleEnsemble& ensemble, const ForceModel& force, double dt) {
  LeapfrogIntegrator integrator(force);
  integrator.step(ensemble, {}, dt);
}

void step_spherical(ParticleEnsemble& ensemble, std::span<const SpeciesSpec> species,
                    ForceSign sign, double dt) {
  for (const auto& s : ensemble.species)
    for (const auto& x : s.x)
      if (!(norm(x) > 0.0)) throw DomainError("spherical step requires r > 0 for every shell");
  const SphericalShellForce force({species.begin(), species.end()}, sign);
  LeapfrogIntegrator integrator(force);
  integrator.step(ensemble, {}, dt);
  for (const auto& s : ensemble.species)
    for (const auto& x : s.x)
      if (!is_finite(x)) throw RuntimeFailure("shell radius became non-finite");
}

StepPlan plan_interval(const SimulationConfig& config, const ForceModel& force,
                       const ParticleEnsemble& ensemble, double t_a, double t_b) {
  if (!(t_b > t_a)) throw DomainError("interval end must exceed its start");
  double dt = config.dt_initial * std::max(1.0, t_a);
  const double g = force.tidal_scale(ensemble);
  if (g > 0.0) dt = std::min(dt, config.courant / std::sqrt(g));
  const double span = t_b - t_a;
  StepPlan plan;
  plan.steps = static_cast<std::size_t>(std::ceil(span / dt * (1.0 - 1e-12)));
  plan.steps = std::max<std::size_t>(plan.steps, 1);
  plan.dt = span / static_cast<double>(plan.steps);
  return plan;
}

StepPlan advance_interval(const SimulationConfig& config, LeapfrogIntegrator& integrator,
                          const ForceModel& force, ParticleEnsemble& ensemble,
                          std::span<Tracer> tracers, double t_a, double t_b) {
  const StepPlan plan = plan_interval(config, force, ensemble, t_a, t_b);
  integrator.invalidate();
  for (std::size_t k = 0; k < plan.steps; ++k) integrator.step(ensemble, tracers, plan.dt);
  return plan;
}

Vec3 compute_Y(double t, const Vec3& X, const Vec3& V) { return X - t * V; }

std::vector<Vec3> compute_Y(std::span<const double> times, std::span<const Vec3> X,
                            std::span<const Vec3> V) {
  if (times.size() != X.size() || X.size() != V.size())
    throw std::invalid_argument("compute_Y: length mismatch");
  std::vector<Vec3> Y(X.size());
  for (std::size_t k = 0; k < X.size(); ++k) Y[k] = compute_Y(times[k], X[k], V[k]);
  return Y;
}

std::vector<Vec3> compute_Z(std::span<const double> times, std::span<const Vec3> Y,
                            std::span<const Vec3> V, double prefactor, const LimitFieldFn& e_inf) {
  if (times.size() != Y.size() || Y.size() != V.size())
    throw std::invalid_argument("compute_Z: length mismatch");
  for (double t : times)
    if (!(t >= 1.0)) throw DomainError("Z is defined only for t >= 1");
  const auto field = e_inf(V);
  std::vector<Vec3> Z(Y.size());
  for (std::size_t k = 0; k < Y.size(); ++k) Z[k] = Y[k] + (prefactor * std::log(times[k])) * field[k];
  return Z;
}

double z_prefactor(const SpeciesSpec& species, ZPrefactor mode) {
  return mode == ZPrefactor::ChargeOverMass ? species.charge_over_mass() : species.charge;
}

double flow_jacobian_probe(const SimulationConfig& config, const ParticleEnsemble& initial,
                           std::size_t species_index, const Vec3& x0, const Vec3& v0, double delta,
                           double t) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw DomainError("degenerate parallelepiped: delta <= 0");
  if (!(t > 0.0)) throw DomainError("probe time must be > 0");
  if (species_index >= config.species.size()) throw std::out_of_range("species index");
  const double qm = config.species[species_index].charge_over_mass();

  std::vector<Tracer> tracers;
  for (std::size_t axis = 0; axis < 6; ++axis)
    for (double sgn : {1.0, -1.0}) {
      Tracer tr{x0, v0, qm};
      if (axis < 3) tr.x[axis] += sgn * delta;
      else tr.v[axis - 3] += sgn * delta;
      tracers.push_back(tr);
    }

  auto ensemble = initial;
  const auto force = make_force_model(config);
  LeapfrogIntegrator integrator(*force);
  double t_a = 0.0;
  for (double s : config.snapshot_times) {
    if (s >= t) break;
    advance_interval(config, integrator, *force, ensemble, tracers, t_a, s);
    t_a = s;
  }
  advance_interval(config, integrator, *force, ensemble, tracers, t_a, t);

  Eigen::Matrix<double, 6, 6> jac;
  for (std::size_t axis = 0; axis < 6; ++axis) {
    const auto& plus = tracers[2 * axis];
    const auto& minus = tracers[2 * axis + 1];
    const Vec3 dy = compute_Y(t, plus.x, plus.v) - compute_Y(t, minus.x, minus.v);
    const Vec3 dv = plus.v - minus.v;
    for (std::size_t k = 0; k < 3; ++k) {
      jac(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(axis)) = dy[k] / (2.0 * delta);
      jac(static_cast<Eigen::Index>(k + 3), static_cast<Eigen::Index>(axis)) = dv[k] / (2.0 * delta);
    }
  }
  return jac.determinant();
}

}  // namespace vsl
