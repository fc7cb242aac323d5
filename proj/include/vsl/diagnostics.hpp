#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "vsl/core_model.hpp"
#include "vsl/dynamics.hpp"
#include "vsl/field_kernel.hpp"
#include "vsl/fit.hpp"

namespace vsl {

// ---------------------------------------------------------------------------
// Velocity densities

/// Uniform cubic-cell grid in velocity space; cell (i,j,k) spans origin + [i,i+1) h.
struct VelocityGrid {
  Vec3 origin{};
  double h{1.0};
  std::array<std::size_t, 3> dims{1, 1, 1};

  std::size_t cells() const { return dims[0] * dims[1] * dims[2]; }
  std::size_t flat(std::size_t i, std::size_t j, std::size_t k) const {
    return (k * dims[1] + j) * dims[0] + i;
  }
  Vec3 center(std::size_t i, std::size_t j, std::size_t k) const;
};

/// Grid covering every velocity of the given ensembles with `cells` cells along the
/// widest axis and one guard cell on each side.
VelocityGrid covering_velocity_grid(std::span<const ParticleEnsemble* const> ensembles, int cells);

enum class Deposit { NearestCell, CloudInCell };

/// Spatial averages F^a(t, v) and the net density P = sum_a q_a F^a on a velocity grid.
/// `number` holds the particle number per cell; F = number / h^3.
struct VelocityDensity {
  VelocityGrid grid;
  std::vector<std::vector<double>> number;  // [species][cell]
  std::vector<double> net;                  // P per cell (already divided by h^3)

  double F(std::size_t species, std::size_t cell) const {
    return number[species][cell] / (grid.h * grid.h * grid.h);
  }
  /// sum_cells F^a h^3
  double species_mass(std::size_t species) const;
};

/// Throws DomainError naming the offending velocity extent if a particle is off the grid.
VelocityDensity spatial_average(const ParticleEnsemble& ensemble, std::span<const SpeciesSpec> species,
                                const VelocityGrid& grid, Deposit deposit = Deposit::NearestCell);

/// max over species and cells of |F^a(1) - F^a(2)|.
double max_species_deviation(const VelocityDensity& a, const VelocityDensity& b);
/// max over cells of |F^1 - F^2| between two species of one density.
double max_cross_species_deviation(const VelocityDensity& d, std::size_t s1, std::size_t s2);

// ---------------------------------------------------------------------------
// Asymptotic profile

struct Box {
  Vec3 lo{};
  Vec3 hi{};
  double volume() const { return (hi.x - lo.x) * (hi.y - lo.y) * (hi.z - lo.z); }
  double diameter() const { return norm(hi - lo); }
};

Box bounding_box(std::span<const Vec3> points);

/// How E_inf is evaluated when it multiplies ln t in Z.
/// Softened: Plummer sum over the atoms with eps_v.
/// Spherical: enclosed charge in |v|, the velocity-space analogue of the shell engine's field.
enum class LimitFieldMode { Softened, Spherical };

/// Empirical limit of a run: V_inf ~ V(t_end) with charge weights q_a w_i.
struct AsymptoticProfile {
  double t_end{0.0};
  std::vector<std::vector<Vec3>> v_inf;    // [species][particle]
  std::vector<std::vector<double>> charge;  // q_a w_i
  std::vector<std::vector<double>> weight;  // w_i
  std::vector<double> species_charge;       // q_a
  std::vector<std::vector<Vec3>> z_inf;    // Z(t_end)
  std::vector<Box> omega_v;
  std::vector<Box> omega_z;
  double eps_v{0.0};  // Plummer length in velocity space
  double h_v{0.0};    // smoothing bandwidth in velocity space
  LimitFieldMode mode{LimitFieldMode::Softened};
  std::vector<double> charge_over_mass;
  std::vector<double> z_prefactor;

  std::vector<SourceBlock> blocks() const;
  /// sum_a q_a sum_i w_i computed as in net_charge.
  double charge_sum() const;
  /// Union of the species' Omega_v boxes.
  Box velocity_box() const;

  /// E_inf(v) with the profile's mode.
  std::vector<Vec3> field(std::span<const Vec3> v) const;
  /// E_inf at velocities of species a, atom (a, i) removed for query i.
  std::vector<Vec3> field_excluding_self(std::size_t species, std::span<const Vec3> v) const;
  /// Plummer-softened E_inf and grad E_inf (matched to the co-moving field estimate).
  std::vector<Vec3> softened_field(std::span<const Vec3> v) const;
  std::vector<Mat3> softened_gradient(std::span<const Vec3> v) const;
  /// Kernel-smoothed P_inf with bandwidth h_v.
  std::vector<double> smoothed_density(std::span<const Vec3> v) const;
};

/// Profile from the final snapshot. eps_v and h_v default to 0.05 and 0.15 of the
/// velocity-support diameter; the spherical engine uses the spherical E_inf.
AsymptoticProfile build_profile(const Snapshot& final_snapshot, const SimulationConfig& config);

// ---------------------------------------------------------------------------
// Fields on a probe set

/// Field quantities at query points at one time.
/// E is the engine's own field, except that the direct engine's Plummer length is raised
/// to t*eps_v so that close pairs do not dominate the maximum; grad E, rho and j use the
/// co-moving estimators with Plummer length t*eps_v and kernel bandwidth t*h_v.
struct FieldSnapshot {
  double t{0.0};
  std::vector<Vec3> query_points;
  std::vector<Vec3> E;
  std::vector<Mat3> gradE;
  std::vector<double> rho;
  std::vector<Vec3> j;
  double softening{0.0};
  double bandwidth{0.0};
};

/// Regular n^3 grid over a box (n >= 2).
std::vector<Vec3> probe_grid(const Box& box, int n);

/// Query set for sup-norm estimates: the probe grid over the particles' bounding box plus
/// at most `max_particles` particle positions (evenly strided).
std::vector<Vec3> sup_query_points(const ParticleEnsemble& ensemble, int grid_n,
                                   std::size_t max_particles = 2048);

FieldSnapshot evaluate_fields(const Snapshot& snap, const ForceModel& force,
                              std::span<const Vec3> query_points, double eps_v, double h_v);

struct SupNorms {
  double E{0.0};
  double gradE{0.0};
  double rho{0.0};
  double j{0.0};
};

SupNorms sup_norms(const FieldSnapshot& fields);

struct Residuals {
  double E{0.0};
  double gradE{0.0};
  double rho{0.0};
  double j{0.0};
};

/// max over probes v of |t^2 E(t, tv) - E_inf(v)|, |t^3 grad E(t, tv) - grad E_inf(v)|,
/// |t^3 rho(t, tv) - P_inf(v)|, |t^3 j(t, tv) - v P_inf(v)| with matched smoothing on
/// both sides (Plummer t*eps_v against eps_v, bandwidth t*h_v against h_v).
Residuals self_similar_residuals(const Snapshot& snap, std::span<const SpeciesSpec> species,
                                 const AsymptoticProfile& profile, std::span<const Vec3> probes_v);

// ---------------------------------------------------------------------------
// Conservation and supports

struct ConservationRecord {
  double t{0.0};
  std::vector<double> species_number;  // M^a
  double net_charge{0.0};              // M
  Vec3 momentum{};                     // J = sum_a m_a J^a
  double kinetic{0.0};
  double potential{0.0};
  double total{0.0};  // E_VP

  friend bool operator==(const ConservationRecord&, const ConservationRecord&) = default;
};

ConservationRecord conservation_report(const Snapshot& snap, std::span<const SpeciesSpec> species,
                                       const ForceModel& force);

struct SupportExtents {
  double vel_diameter{0.0};  // max over species of max pairwise |v_i - v_j|
  double mu{0.0};            // bounding-box volume of {Y_i(t)} over all species
};

SupportExtents support_extents(const Snapshot& snap);

// ---------------------------------------------------------------------------
// Trajectories

/// X, V, Y, Z of every particle at one time (t >= 1).
struct TrajectoryFrame {
  double t{0.0};
  std::vector<std::vector<Vec3>> X, V, Y, Z;  // [species][particle]
};

TrajectoryFrame make_frame(const Snapshot& snap, const AsymptoticProfile& profile);

/// One particle's record across frames.
TrajectoryRecord trajectory_record(std::span<const TrajectoryFrame> frames, std::size_t species,
                                   std::size_t index, std::uint64_t id);

struct CauchyRow {
  double t{0.0};
  double d_V{0.0};
  double d_Y{0.0};
  double d_Z{0.0};
};

/// d_Q(t) = max_i |Q_i(2t) - Q_i(t)| for Q in {V, Y, Z} and the fitted log-log slopes over
/// t >= t_min. Requires at least 4 frames forming a doubling chain; reports only.
struct CauchyTable {
  std::vector<CauchyRow> rows;
  double slope_V{0.0};
  double slope_Y{0.0};
  double slope_Z{0.0};
};

CauchyTable convergence_probe(std::span<const TrajectoryFrame> frames, double t_min = 10.0);

struct ScatteringRow {
  double t{0.0};
  double combined{0.0};
  std::vector<double> per_species;
};

/// s(t) = max_i |(Z_i, V_i)(t) - (Z_i, V_i)(t_end)| (Euclidean norm in R^6).
std::vector<ScatteringRow> scattering_residual(std::span<const TrajectoryFrame> frames);

// ---------------------------------------------------------------------------
// Whole-run analysis

struct DiagnosticsRow {
  double t{0.0};
  double sup_E{0.0}, sup_rho{0.0}, sup_j{0.0}, sup_gradE{0.0};
  double mu{0.0}, vel_diam{0.0};
  double res_E{0.0}, res_gradE{0.0}, res_rho{0.0}, res_j{0.0};
  ConservationRecord conservation;
};

/// Per-time convergence quantities that are not part of the diagnostics row.
struct ConvergenceRow {
  double t{0.0};
  double d_V{0.0}, d_Y{0.0}, d_Z{0.0};  // NaN when 2t is not a snapshot
  double scatter{0.0};
  double F_dev{0.0};  // max_a ||F^a(t) - F^a(t_end)||_inf, cloud-in-cell deposit
  double P_sup{0.0};  // ||P(t)||_inf, cloud-in-cell deposit
};

struct DiagnosticsSeries {
  std::vector<std::string> species_names;
  ConservationRecord initial;
  std::vector<DiagnosticsRow> rows;
  std::vector<ConvergenceRow> convergence;
  double max_limit_field{0.0};  // max over residual probes of |E_inf| (softened)
};

struct RunAnalysis {
  AsymptoticProfile profile;
  DiagnosticsSeries series;
  CauchyTable cauchy;
  VelocityDensity final_density;  // cloud-in-cell F(t_end)
};

/// Full diagnostics from snapshots sorted by time; a t = 0 snapshot (if present) is used
/// as the conservation baseline, every snapshot with t >= 1 gets a row.
RunAnalysis analyze_run(const SimulationConfig& config, std::span<const Snapshot> snapshots);

/// |E(t) - E(0)| / |E(0)| maximised over the rows.
double relative_energy_drift(const DiagnosticsSeries& series);

}  // namespace vsl
