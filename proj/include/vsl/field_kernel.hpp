#pragma once

#include <span>
#include <vector>

#include "vsl/vec3.hpp"

namespace vsl {

/// One species' contribution to a field: points with signed charge weights c_i = q_a w_i.
/// `velocity` is only read by current_estimate.
///
/// All sums below are reduced per block in a fixed pairwise order and the block partials
/// are added in block order, so two blocks with identical points and opposite charges
/// cancel exactly.
struct SourceBlock {
  std::span<const Vec3> position;
  std::span<const double> charge;
  std::span<const Vec3> velocity{};
};

using Sources = std::span<const SourceBlock>;

inline constexpr double kInvFourPi = 0.07957747154594767;

/// Charge inside a sphere for a spherically symmetric configuration.
class RadialCharge {
 public:
  RadialCharge() = default;
  RadialCharge(std::span<const double> radii, std::span<const double> charges);

  /// Sum of charges with radius <= r (right-continuous). Throws DomainError for r <= 0.
  double enclosed(double r) const;
  /// Sum of charges with radius strictly below r.
  double enclosed_below(double r) const;
  double total() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }
  std::span<const double> sorted_radii() const { return radii_; }

 private:
  std::vector<double> radii_;
  std::vector<double> cumulative_;
};

/// enclosed_charge for radii already sorted ascending and per-shell weights times charge q.
double enclosed_charge(std::span<const double> sorted_radii, std::span<const double> weights,
                       double charge, double r);

/// Radial field Q/(4 pi r^2), positive outward. Throws DomainError for r <= 0.
double spherical_field(double enclosed, double r);

/// E(x) = 1/(4 pi) sum_s c_s (x - y_s) / (|x - y_s|^2 + eps^2)^{3/2}.
/// Throws SingularityError for a coincident target/source when eps == 0.
std::vector<Vec3> softened_field_sum(std::span<const Vec3> targets, Sources sources, double eps);

/// Jacobian dE_i/dx_j of softened_field_sum.
std::vector<Mat3> softened_gradient_sum(std::span<const Vec3> targets, Sources sources, double eps);

/// Field at every source point with its own contribution removed, blocks concatenated.
std::vector<Vec3> field_at_sources(Sources sources, double eps);
/// Gradient at every source point with its own contribution removed, blocks concatenated.
std::vector<Mat3> gradient_at_sources(Sources sources, double eps);

/// 1/2 sum_{i != j} c_i c_j / (4 pi sqrt(|y_i - y_j|^2 + eps^2)).
double softened_pair_energy(Sources sources, double eps);

/// Normalized cubic-spline smoothing kernel with support radius h.
double smoothing_kernel(double r, double h);

/// rho_h(x) = sum_s c_s K_h(x - y_s). Throws DomainError for h <= 0.
std::vector<double> density_estimate(std::span<const Vec3> targets, Sources sources, double h);

/// j_h(x) = sum_s c_s u_s K_h(x - y_s) with u_s the source velocities.
std::vector<Vec3> current_estimate(std::span<const Vec3> targets, Sources sources, double h);

/// Velocity-space field induced by the weighted limiting velocities.
inline std::vector<Vec3> limiting_field(std::span<const Vec3> velocities, Sources profile, double eps) {
  return softened_field_sum(velocities, profile, eps);
}

}  // namespace vsl
