#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vsl/vec3.hpp"

namespace vsl {

enum class RecipeKind { UniformBall, TruncatedGaussian, ShiftedBeam, SphericalShellset };
enum class EngineKind { SphericalShell, Direct3d };
enum class ForceSign { Plasma, Gravitational };
enum class ZPrefactor { ChargeOverMass, Charge };
enum class SnapshotSchedule { Dyadic, HalfDyadic, Explicit };

/// Compactly supported initial distribution of one species.
///
/// uniform-ball: x uniform in ball(center_x, radius_x), v uniform in ball(center_v, radius_v).
/// truncated-gaussian: x gaussian with sigma radius_x/3 cut at radius_x, v gaussian sigma_v
///   cut at the velocity support radius.
/// shifted-beam: x uniform in ball(center_x, radius_x), v gaussian sigma_v around center_v
///   cut at the velocity support radius.
/// spherical-shellset: uniform ball in x and v with stratified radii (one sample per
///   equal-mass radial stratum) and isotropic directions.
struct DistributionRecipe {
  RecipeKind kind{RecipeKind::UniformBall};
  Vec3 center_x{};
  Vec3 center_v{};
  double radius_x{1.0};
  std::optional<double> radius_v;
  std::optional<double> sigma_v;
  double total_number{1.0};

  /// Radius of the velocity ball that contains every sample.
  double velocity_support_radius() const;
  bool spherically_symmetric() const;

  friend bool operator==(const DistributionRecipe&, const DistributionRecipe&) = default;
};

struct SpeciesSpec {
  std::string name{"species"};
  double charge{1.0};
  double mass{1.0};
  std::uint64_t count{1};
  DistributionRecipe init{};
  std::uint64_t seed{1};

  double charge_over_mass() const { return charge / mass; }

  friend bool operator==(const SpeciesSpec&, const SpeciesSpec&) = default;
};

struct SimulationConfig {
  std::vector<SpeciesSpec> species;
  EngineKind engine{EngineKind::Direct3d};
  ForceSign force_sign{ForceSign::Plasma};
  /// Plummer length for the direct engine; empty means 0.05 x interparticle spacing.
  std::optional<double> softening;
  double dt_initial{0.01};
  double t_end{1000.0};
  SnapshotSchedule schedule{SnapshotSchedule::HalfDyadic};
  std::vector<double> snapshot_times;  // filled by finalize_config
  int thread_hint{0};

  // Step-size control and analysis settings.
  double courant{0.1};
  std::optional<double> velocity_bandwidth;
  std::optional<double> limit_softening;
  ZPrefactor z_prefactor{ZPrefactor::ChargeOverMass};
  int probe_grid{10};
  int velocity_cells{24};

  double force_sign_factor() const { return force_sign == ForceSign::Plasma ? 1.0 : -1.0; }

  friend bool operator==(const SimulationConfig&, const SimulationConfig&) = default;
};

/// Times t_end * ratio^{-k} that are >= 1, ascending; ratio 2 (dyadic) or sqrt 2.
std::vector<double> geometric_snapshot_times(double t_end, SnapshotSchedule schedule);

/// Fills snapshot_times from the schedule and checks every invariant; throws ConfigError.
void finalize_config(SimulationConfig& config);

/// Plummer length the direct engine uses for this configuration.
double effective_softening(const SimulationConfig& config);

struct SpeciesState {
  std::vector<std::uint64_t> id;
  std::vector<Vec3> x;
  std::vector<Vec3> v;
  std::vector<double> weight;

  std::size_t size() const { return id.size(); }
  friend bool operator==(const SpeciesState&, const SpeciesState&) = default;
};

/// Weighted empirical measure per species. Weights are fixed at sampling time.
struct ParticleEnsemble {
  std::vector<SpeciesState> species;

  std::size_t total_count() const;
  friend bool operator==(const ParticleEnsemble&, const ParticleEnsemble&) = default;
};

/// Radial view of a species for the spherical engine: r=|x|, w=x.v/r, ell=|x cross v|^2.
struct ShellCoordinates {
  std::vector<double> r;
  std::vector<double> w;
  std::vector<double> ell;
  std::vector<double> weight;
};

ShellCoordinates shell_coordinates(const SpeciesState& state);

/// Ensemble state at one output time.
struct Snapshot {
  double t{0.0};
  ParticleEnsemble ensemble;

  friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

ParticleEnsemble sample_initial(const SimulationConfig& config);

/// Net charge sum_a q_a sum_i w_i, species summed in order.
double net_charge(const ParticleEnsemble& ensemble, std::span<const SpeciesSpec> species);

double species_number(const SpeciesState& state);

std::string to_string(RecipeKind kind);
std::string to_string(EngineKind kind);
std::string to_string(ForceSign sign);
std::string to_string(ZPrefactor prefactor);
std::string to_string(SnapshotSchedule schedule);

}  // namespace vsl
