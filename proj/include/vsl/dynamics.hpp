#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "vsl/core_model.hpp"
#include "vsl/field_kernel.hpp"

namespace vsl {

/// Source blocks (positions, q_a w_i) for every species of an ensemble.
/// The returned blocks point into `charges` and `ensemble`; both must outlive them.
std::vector<SourceBlock> charge_blocks(const ParticleEnsemble& ensemble,
                                       std::span<const SpeciesSpec> species,
                                       std::vector<std::vector<double>>& charges);

/// Field generated by the ensemble. The sign flag is applied by the integrator,
/// potential_energy includes it.
class ForceModel {
 public:
  ForceModel(std::vector<SpeciesSpec> species, ForceSign sign)
      : species_(std::move(species)), sign_(sign) {}
  virtual ~ForceModel() = default;

  /// E at every particle without self-interaction, indexed [species][particle].
  virtual std::vector<std::vector<Vec3>> field_at_particles(const ParticleEnsemble& e) const = 0;
  /// E generated by the ensemble at arbitrary points.
  virtual std::vector<Vec3> field_at(const ParticleEnsemble& e, std::span<const Vec3> points) const = 0;
  /// Field felt by tracers; defaults to field_at.
  virtual std::vector<Vec3> tracer_field(const ParticleEnsemble& e, std::span<const Vec3> points) const {
    return field_at(e, points);
  }
  /// Interaction energy consistent with the force, force sign included.
  virtual double potential_energy(const ParticleEnsemble& e) const = 0;
  /// Largest |q/m| |grad E| scale over the particles; sets the step size.
  virtual double tidal_scale(const ParticleEnsemble& e) const = 0;

  std::span<const SpeciesSpec> species() const { return species_; }
  double sign_factor() const { return sign_ == ForceSign::Plasma ? 1.0 : -1.0; }

 protected:
  std::vector<SpeciesSpec> species_;
  ForceSign sign_;
};

/// Exact field of a spherically symmetric ensemble: particle k feels the charge of all
/// particles strictly inside its radius, Q_in/(4 pi r^2) along x/|x|. Particles are
/// integrated in Cartesian coordinates, so r, w and ell follow from (x, v).
/// Tracers feel the enclosed charge smoothed in s = r^3 with a gaussian of width
/// kTracerSmoothing * max s, mirrored at s = 0.
class SphericalShellForce final : public ForceModel {
 public:
  static constexpr double kTracerSmoothing = 0.02;

  using ForceModel::ForceModel;
  std::vector<std::vector<Vec3>> field_at_particles(const ParticleEnsemble& e) const override;
  std::vector<Vec3> field_at(const ParticleEnsemble& e, std::span<const Vec3> points) const override;
  std::vector<Vec3> tracer_field(const ParticleEnsemble& e, std::span<const Vec3> points) const override;
  double potential_energy(const ParticleEnsemble& e) const override;
  double tidal_scale(const ParticleEnsemble& e) const override;
};

/// Plummer-softened direct sum over all particles.
class DirectSoftenedForce final : public ForceModel {
 public:
  DirectSoftenedForce(std::vector<SpeciesSpec> species, ForceSign sign, double eps)
      : ForceModel(std::move(species), sign), eps_(eps) {}
  std::vector<std::vector<Vec3>> field_at_particles(const ParticleEnsemble& e) const override;
  std::vector<Vec3> field_at(const ParticleEnsemble& e, std::span<const Vec3> points) const override;
  double potential_energy(const ParticleEnsemble& e) const override;
  double tidal_scale(const ParticleEnsemble& e) const override;
  double softening() const { return eps_; }

 private:
  double eps_;
};

std::unique_ptr<ForceModel> make_force_model(const SimulationConfig& config);

/// Massless test point carried along by the flow; feels the ensemble's field only.
struct Tracer {
  Vec3 x;
  Vec3 v;
  double charge_over_mass{1.0};
};

/// Kick-drift-kick leapfrog. Caches the end-of-step field for the next step; the cache
/// is a pure function of positions so dropping it never changes results.
class LeapfrogIntegrator {
 public:
  explicit LeapfrogIntegrator(const ForceModel& force) : force_(&force) {}

  void step(ParticleEnsemble& ensemble, std::span<Tracer> tracers, double dt);
  void invalidate() { cached_ = false; }

 private:
  void compute(const ParticleEnsemble& ensemble, std::span<const Tracer> tracers);
  void kick(ParticleEnsemble& ensemble, std::span<Tracer> tracers, double h) const;

  const ForceModel* force_;
  bool cached_{false};
  std::vector<std::vector<Vec3>> accel_;
  std::vector<Vec3> tracer_accel_;
};

/// One KDK step of x' = v, v' = sigma (q/m) E(t, x) with the given force model.
void step_characteristics_3d(ParticleEnsemble& ensemble, const ForceModel& force, double dt);

/// One KDK step of the spherically symmetric system (exact enclosed-charge field).
void step_spherical(ParticleEnsemble& ensemble, std::span<const SpeciesSpec> species,
                    ForceSign sign, double dt);

struct StepPlan {
  std::size_t steps{0};
  double dt{0.0};
};

/// Uniform step for [t_a, t_b]: dt <= dt_initial max(1, t_a) and dt <= courant/sqrt(G),
/// shrunk so that an integer number of steps lands exactly on t_b.
StepPlan plan_interval(const SimulationConfig& config, const ForceModel& force,
                       const ParticleEnsemble& ensemble, double t_a, double t_b);

/// Advances ensemble and tracers from t_a to t_b with plan_interval's step.
StepPlan advance_interval(const SimulationConfig& config, LeapfrogIntegrator& integrator,
                          const ForceModel& force, ParticleEnsemble& ensemble,
                          std::span<Tracer> tracers, double t_a, double t_b);

/// Y = X - t V pointwise.
std::vector<Vec3> compute_Y(std::span<const double> times, std::span<const Vec3> X,
                            std::span<const Vec3> V);
Vec3 compute_Y(double t, const Vec3& X, const Vec3& V);

using LimitFieldFn = std::function<std::vector<Vec3>(std::span<const Vec3>)>;

/// Z = Y + prefactor ln(t) E_inf(V); throws DomainError if any t < 1.
std::vector<Vec3> compute_Z(std::span<const double> times, std::span<const Vec3> Y,
                            std::span<const Vec3> V, double prefactor, const LimitFieldFn& e_inf);

/// Prefactor of the logarithmic correction for a species.
double z_prefactor(const SpeciesSpec& species, ZPrefactor mode);

/// One particle's characteristic sampled at snapshot times.
struct TrajectoryRecord {
  std::uint64_t id{0};
  std::vector<double> times;
  std::vector<Vec3> X;
  std::vector<Vec3> V;
  std::vector<Vec3> Y;
  std::vector<Vec3> Z;
};

/// det of the central-difference Jacobian of (y, v) -> (Y, V) at time t for a 6D cube of
/// half-edge delta around (x0, v0) at time 0, flowed as tracers of species `species_index`
/// through the configured engine. 12 tracers, error O(delta^2).
double flow_jacobian_probe(const SimulationConfig& config, const ParticleEnsemble& initial,
                           std::size_t species_index, const Vec3& x0, const Vec3& v0, double delta,
                           double t);

}  // namespace vsl
