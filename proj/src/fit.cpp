#include "vsl/fit.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>
#include <vector>

#include "vsl/errors.hpp"

namespace vsl {

std::string to_string(FitModel model) { return model == FitModel::Power ? "power" : "power-log"; }

FitModel fit_model_from_string(const std::string& text) {
  if (text == "power") return FitModel::Power;
  if (text == "power-log") return FitModel::PowerLog;
  throw std::invalid_argument("unknown fit model '" + text + "'");
}

FitResult fit_decay(std::span<const double> t, std::span<const double> y, FitModel model, double t_a,
                    double t_b, std::optional<double> fixed_log_power) {
  if (t.size() != y.size()) throw std::invalid_argument("fit_decay: length mismatch");
  if (!(t_b > t_a)) throw DomainError("degenerate fit window");
  std::vector<double> lt, lly, ly;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] < t_a || t[k] > t_b) continue;
    if (!(y[k] > 0.0) || !std::isfinite(y[k]))
      throw DomainError("fit_decay: nonpositive value at t = " + std::to_string(t[k]));
    if (model == FitModel::PowerLog && !(t[k] > 1.0))
      throw DomainError("power-log model needs t > 1");
    lt.push_back(std::log(t[k]));
    lly.push_back(model == FitModel::PowerLog ? std::log(std::log(t[k])) : 0.0);
    ly.push_back(std::log(y[k]));
  }
  const std::size_t n = lt.size();
  if (n < kMinFitPoints)
    throw DomainError("degenerate fit window: " + std::to_string(n) + " points, need " +
                      std::to_string(kMinFitPoints));

  const bool free_m = model == FitModel::PowerLog && !fixed_log_power;
  const double m_fixed = model == FitModel::PowerLog ? fixed_log_power.value_or(0.0) : 0.0;
  const Eigen::Index cols = free_m ? 3 : 2;
  Eigen::MatrixXd a(static_cast<Eigen::Index>(n), cols);
  Eigen::VectorXd b(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    a(r, 0) = 1.0;
    a(r, 1) = -lt[k];
    if (free_m) a(r, 2) = lly[k];
    b(r) = ly[k] - m_fixed * lly[k];
  }
  const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(b);
  const Eigen::VectorXd resid = b - a * coef;

  FitResult fit;
  fit.model = model;
  fit.amplitude = std::exp(coef(0));
  fit.exponent = coef(1);
  fit.log_power = free_m ? coef(2) : m_fixed;
  fit.t_a = t_a;
  fit.t_b = t_b;
  fit.points = n;
  fit.rms = std::sqrt(resid.squaredNorm() / static_cast<double>(n));

  const auto dof = static_cast<double>(n) - static_cast<double>(cols);
  if (dof > 0.0) {
    const double sigma2 = resid.squaredNorm() / dof;
    const Eigen::MatrixXd cov = sigma2 * (a.transpose() * a).inverse();
    const boost::math::students_t dist(dof);
    fit.confidence = boost::math::quantile(boost::math::complement(dist, 0.025)) * std::sqrt(cov(1, 1));
  } else {
    fit.confidence = std::numeric_limits<double>::infinity();
  }
  return fit;
}

double log_log_slope(std::span<const double> t, std::span<const double> y, double t_a, double t_b) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  double n = 0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] < t_a || t[k] > t_b) continue;
    if (!(y[k] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    const double lx = std::log(t[k]);
    const double lyv = std::log(y[k]);
    sx += lx;
    sy += lyv;
    sxx += lx * lx;
    sxy += lx * lyv;
    n += 1.0;
  }
  if (n < 2.0) return std::numeric_limits<double>::quiet_NaN();
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace vsl
