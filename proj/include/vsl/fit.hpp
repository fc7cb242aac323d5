#pragma once

#include <optional>
#include <span>
#include <string>

namespace vsl {

enum class FitModel { Power, PowerLog };

std::string to_string(FitModel model);
FitModel fit_model_from_string(const std::string& text);

/// Fit of y ~ A t^{-p} (power) or y ~ A t^{-p} ln^m t (power-log) in log space.
struct FitResult {
  FitModel model{FitModel::Power};
  double exponent{0.0};   // p_hat; y decays like t^{-p_hat}
  double log_power{0.0};  // m_hat, power-log only
  double amplitude{0.0};
  double t_a{0.0};
  double t_b{0.0};
  double rms{0.0};         // of ln y residuals
  double confidence{0.0};  // 95% half-width of p_hat
  std::size_t points{0};
};

inline constexpr std::size_t kMinFitPoints = 5;

/// Least squares on ln y = ln A - p ln t (+ m ln ln t) over t in [t_a, t_b].
/// `fixed_log_power` pins m for the power-log model. Throws DomainError for nonpositive
/// values in the window, fewer than kMinFitPoints points, or t <= 1 with the power-log model.
FitResult fit_decay(std::span<const double> t, std::span<const double> y, FitModel model, double t_a,
                    double t_b, std::optional<double> fixed_log_power = std::nullopt);

/// Slope of ln y against ln t over the window (the negative of the power exponent),
/// without the minimum point count; used for short Cauchy tables.
double log_log_slope(std::span<const double> t, std::span<const double> y, double t_a, double t_b);

}  // namespace vsl
