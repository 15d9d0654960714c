#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gaborwave/errors.hpp"

namespace gaborwave {

/// Central finite-difference gradient (f(p + h e_j) - f(p - h e_j)) / 2h.
inline std::vector<double> finite_difference_grad(const std::function<double(std::span<const double>)>& f,
                                                  std::span<const double> p, double step) {
  if (!(step > 0.0)) throw ParameterError("finite_difference_grad: step must be positive");
  std::vector<double> x(p.begin(), p.end());
  std::vector<double> grad(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double saved = x[j];
    x[j] = saved + step;
    const double fp = f(x);
    x[j] = saved - step;
    const double fm = f(x);
    x[j] = saved;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NumericError("finite_difference_grad: non-finite function value at coordinate " + std::to_string(j));
    }
    grad[j] = (fp - fm) / (2.0 * step);
  }
  return grad;
}

/// |a - b| / max(|a|, |b|, floor). The floor keeps near-zero partials from
/// reporting large relative errors caused by rounding alone.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

}  // namespace gaborwave
