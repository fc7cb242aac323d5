#include "vsl/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "vsl/errors.hpp"

namespace vsl {

namespace {

// Explicit conversions keep sampling bit-identical across standard libraries.
double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double open_unit_uniform(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

Vec3 unit_direction(std::mt19937_64& rng) {
  const double cos_theta = 2.0 * unit_uniform(rng) - 1.0;
  const double phi = 2.0 * std::numbers::pi * unit_uniform(rng);
  const double sin_theta = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
  return {sin_theta * std::cos(phi), sin_theta * std::sin(phi), cos_theta};
}

Vec3 gaussian3(std::mt19937_64& rng) {
  Vec3 g;
  for (std::size_t k = 0; k < 3; ++k) {
    const double u1 = open_unit_uniform(rng);
    const double u2 = unit_uniform(rng);
    g[k] = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  return g;
}

Vec3 uniform_ball(std::mt19937_64& rng, const Vec3& center, double radius) {
  const double r = radius * std::cbrt(unit_uniform(rng));
  return center + r * unit_direction(rng);
}

Vec3 truncated_gaussian(std::mt19937_64& rng, const Vec3& center, double sigma, double cut) {
  for (;;) {
    const Vec3 g = sigma * gaussian3(rng);
    if (norm(g) <= cut) return center + g;
  }
}

std::vector<double> stratified_radii(std::mt19937_64& rng, std::uint64_t count, double radius) {
  std::vector<double> radii(count);
  const double n = static_cast<double>(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const double u = (static_cast<double>(i) + unit_uniform(rng)) / n;
    radii[i] = radius * std::cbrt(u);
  }
  return radii;
}

void shuffle(std::mt19937_64& rng, std::vector<double>& values) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(unit_uniform(rng) * static_cast<double>(i));
    std::swap(values[i - 1], values[std::min(j, i - 1)]);
  }
}

SpeciesState sample_species(const SpeciesSpec& spec) {
  const auto& recipe = spec.init;
  std::mt19937_64 rng(spec.seed);
  SpeciesState s;
  const std::uint64_t n = spec.count;
  s.id.resize(n);
  s.x.resize(n);
  s.v.resize(n);
  s.weight.assign(n, recipe.total_number / static_cast<double>(n));
  for (std::uint64_t i = 0; i < n; ++i) s.id[i] = i;

  const double vcut = recipe.velocity_support_radius();
  switch (recipe.kind) {
    case RecipeKind::UniformBall:
      for (std::uint64_t i = 0; i < n; ++i) {
        s.x[i] = uniform_ball(rng, recipe.center_x, recipe.radius_x);
        s.v[i] = uniform_ball(rng, recipe.center_v, vcut);
      }
      break;
    case RecipeKind::TruncatedGaussian:
      for (std::uint64_t i = 0; i < n; ++i) {
        s.x[i] = truncated_gaussian(rng, recipe.center_x, recipe.radius_x / 3.0, recipe.radius_x);
        s.v[i] = truncated_gaussian(rng, recipe.center_v, *recipe.sigma_v, vcut);
      }
      break;
    case RecipeKind::ShiftedBeam:
      for (std::uint64_t i = 0; i < n; ++i) {
        s.x[i] = uniform_ball(rng, recipe.center_x, recipe.radius_x);
        s.v[i] = truncated_gaussian(rng, recipe.center_v, *recipe.sigma_v, vcut);
      }
      break;
    case RecipeKind::SphericalShellset: {
      const auto rx = stratified_radii(rng, n, recipe.radius_x);
      auto rv = stratified_radii(rng, n, vcut);
      shuffle(rng, rv);
      for (std::uint64_t i = 0; i < n; ++i) {
        s.x[i] = recipe.center_x + rx[i] * unit_direction(rng);
        s.v[i] = recipe.center_v + rv[i] * unit_direction(rng);
      }
      break;
    }
  }
  return s;
}

bool is_zero(const Vec3& a) { return a.x == 0.0 && a.y == 0.0 && a.z == 0.0; }

}  // namespace

double DistributionRecipe::velocity_support_radius() const {
  if (kind == RecipeKind::TruncatedGaussian || kind == RecipeKind::ShiftedBeam) {
    return radius_v ? *radius_v : 3.0 * sigma_v.value_or(0.0);
  }
  return radius_v.value_or(0.0);
}

bool DistributionRecipe::spherically_symmetric() const {
  return kind != RecipeKind::ShiftedBeam && is_zero(center_x) && is_zero(center_v);
}

std::vector<double> geometric_snapshot_times(double t_end, SnapshotSchedule schedule) {
  const double ratio = schedule == SnapshotSchedule::Dyadic ? 2.0 : std::sqrt(2.0);
  std::vector<double> times;
  for (int k = 0;; ++k) {
    double t = t_end;
    // exact halving for even k keeps t_end/2^j bit-exact in both schedules
    if (schedule == SnapshotSchedule::Dyadic) {
      t = std::ldexp(t_end, -k);
    } else {
      t = std::ldexp(t_end, -(k / 2));
      if (k % 2 == 1) t /= ratio;
    }
    if (t < 1.0) break;
    times.push_back(t);
  }
  std::reverse(times.begin(), times.end());
  return times;
}

void finalize_config(SimulationConfig& config) {
  if (config.species.empty()) throw ConfigError("at least one [species] block is required");
  for (const auto& s : config.species) {
    const std::string who = "species '" + s.name + "': ";
    if (!(s.mass > 0.0)) throw ConfigError(who + "mass must be > 0");
    if (!std::isfinite(s.charge)) throw ConfigError(who + "charge must be finite");
    if (s.count < 1) throw ConfigError(who + "count must be >= 1");
    const auto& r = s.init;
    if (!(r.radius_x > 0.0)) throw ConfigError(who + "radius_x must be > 0");
    if (!(r.total_number > 0.0)) throw ConfigError(who + "total_number must be > 0");
    const bool gaussian_v =
        r.kind == RecipeKind::TruncatedGaussian || r.kind == RecipeKind::ShiftedBeam;
    if (gaussian_v) {
      if (!r.sigma_v || !(*r.sigma_v > 0.0))
        throw ConfigError(who + to_string(r.kind) + " requires sigma_v > 0");
    } else if (!r.radius_v || !(*r.radius_v > 0.0)) {
      throw ConfigError(who + to_string(r.kind) + " requires radius_v > 0");
    }
    if (r.radius_v && !(*r.radius_v > 0.0)) throw ConfigError(who + "radius_v must be > 0");
  }
  if (config.engine == EngineKind::SphericalShell) {
    if (config.species.size() != 1)
      throw ConfigError("spherical-shell requires one species");
    if (!config.species.front().init.spherically_symmetric())
      throw ConfigError(
          "spherical-shell requires a spherically symmetric recipe centred at the origin "
          "(uniform-ball, truncated-gaussian or spherical-shellset)");
  }
  if (config.softening && !(*config.softening >= 0.0))
    throw ConfigError("softening must be >= 0");
  if (!(config.dt_initial > 0.0)) throw ConfigError("dt_initial must be > 0");
  if (!(config.t_end >= 1.0)) throw ConfigError("t_end must be >= 1");
  if (!(config.courant > 0.0)) throw ConfigError("courant must be > 0");
  if (config.velocity_bandwidth && !(*config.velocity_bandwidth > 0.0))
    throw ConfigError("velocity_bandwidth must be > 0");
  if (config.limit_softening && !(*config.limit_softening > 0.0))
    throw ConfigError("limit_softening must be > 0");
  if (config.probe_grid < 2) throw ConfigError("probe_grid must be >= 2");
  if (config.velocity_cells < 2) throw ConfigError("velocity_cells must be >= 2");

  if (config.schedule != SnapshotSchedule::Explicit) {
    config.snapshot_times = geometric_snapshot_times(config.t_end, config.schedule);
  }
  if (config.snapshot_times.empty()) throw ConfigError("snapshot_times must not be empty");
  for (std::size_t k = 0; k < config.snapshot_times.size(); ++k) {
    const double t = config.snapshot_times[k];
    if (!(t >= 1.0 && t <= config.t_end))
      throw ConfigError("snapshot_times must lie in [1, t_end]");
    if (k > 0 && !(t > config.snapshot_times[k - 1]))
      throw ConfigError("snapshot_times must be strictly increasing");
  }
  if (config.snapshot_times.back() != config.t_end) config.snapshot_times.push_back(config.t_end);
}

double effective_softening(const SimulationConfig& config) {
  if (config.softening) return *config.softening;
  double volume = 0.0;
  double count = 0.0;
  for (const auto& s : config.species) {
    volume += 4.0 / 3.0 * std::numbers::pi * std::pow(s.init.radius_x, 3);
    count += static_cast<double>(s.count);
  }
  return 0.05 * std::cbrt(volume / count);
}

std::size_t ParticleEnsemble::total_count() const {
  std::size_t n = 0;
  for (const auto& s : species) n += s.size();
  return n;
}

ShellCoordinates shell_coordinates(const SpeciesState& state) {
  ShellCoordinates c;
  const std::size_t n = state.size();
  c.r.resize(n);
  c.w.resize(n);
  c.ell.resize(n);
  c.weight = state.weight;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = norm(state.x[i]);
    c.r[i] = r;
    c.w[i] = r > 0.0 ? dot(state.x[i], state.v[i]) / r : norm(state.v[i]);
    c.ell[i] = norm2(cross(state.x[i], state.v[i]));
  }
  return c;
}

ParticleEnsemble sample_initial(const SimulationConfig& config) {
  ParticleEnsemble ensemble;
  for (const auto& spec : config.species) {
    if (spec.count == 0) throw ConfigError("species '" + spec.name + "': count must be >= 1");
    if (config.engine == EngineKind::SphericalShell && !spec.init.spherically_symmetric())
      throw ConfigError("recipe " + to_string(spec.init.kind) +
                        " is not supported by the spherical-shell engine");
    ensemble.species.push_back(sample_species(spec));
  }
  return ensemble;
}

double species_number(const SpeciesState& state) {
  double total = 0.0;
  for (double w : state.weight) total += w;
  return total;
}

double net_charge(const ParticleEnsemble& ensemble, std::span<const SpeciesSpec> species) {
  double total = 0.0;
  for (std::size_t a = 0; a < ensemble.species.size() && a < species.size(); ++a) {
    total += species[a].charge * species_number(ensemble.species[a]);
  }
  return total;
}

std::string to_string(RecipeKind kind) {
  switch (kind) {
    case RecipeKind::UniformBall: return "uniform-ball";
    case RecipeKind::TruncatedGaussian: return "truncated-gaussian";
    case RecipeKind::ShiftedBeam: return "shifted-beam";
    case RecipeKind::SphericalShellset: return "spherical-shellset";
  }
  return "?";
}

std::string to_string(EngineKind kind) {
  return kind == EngineKind::SphericalShell ? "spherical-shell" : "direct-3d";
}

std::string to_string(ForceSign sign) {
  return sign == ForceSign::Plasma ? "plasma" : "gravitational";
}

std::string to_string(ZPrefactor prefactor) {
  return prefactor == ZPrefactor::ChargeOverMass ? "charge-over-mass" : "charge";
}

std::string to_string(SnapshotSchedule schedule) {
  switch (schedule) {
    case SnapshotSchedule::Dyadic: return "dyadic";
    case SnapshotSchedule::HalfDyadic: return "half-dyadic";
    case SnapshotSchedule::Explicit: return "explicit";
  }
  return "?";
}

}  // namespace vsl
