#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>

namespace llg {

/// Least-squares slope of log(error) against log(step).
inline double fit_order(std::span<const double> steps, std::span<const double> errors) {
  if (steps.size() != errors.size()) throw std::invalid_argument("fit_order: size mismatch");
  if (steps.size() < 2) throw std::invalid_argument("fit_order: need at least two points");
  const double n = static_cast<double>(steps.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (!(steps[i] > 0.0) || !(errors[i] > 0.0) || !std::isfinite(steps[i]) || !std::isfinite(errors[i]))
      throw std::invalid_argument("fit_order: steps and errors must be positive and finite");
    const double x = std::log(steps[i]), y = std::log(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = n * sxx - sx * sx;
  if (!(std::abs(denom) > 1e-300)) throw std::invalid_argument("fit_order: steps are all equal");
  return (n * sxy - sx * sy) / denom;
}

}  // namespace llg
