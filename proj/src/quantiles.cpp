#include "qlscm/quantiles.hpp"

#include <algorithm>
#include <cmath>

#include "qlscm/errors.hpp"

namespace qlscm {

double empirical_quantile(std::span<double> values, double p) {
  if (values.empty()) throw DomainError("empirical_quantile: empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("empirical_quantile: p outside [0,1]");
  const std::size_t n = values.size();
  const double h = p * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const double frac = h - static_cast<double>(lo);

  std::nth_element(values.begin(), values.begin() + lo, values.end());
  const double v_lo = values[lo];
  if (frac == 0.0 || lo + 1 >= n) return v_lo;
  // element after the pivot: minimum of the upper partition
  const double v_hi = *std::min_element(values.begin() + lo + 1, values.end());
  return v_lo + frac * (v_hi - v_lo);
}

double empirical_quantile(std::span<const double> values, double p) {
  std::vector<double> copy(values.begin(), values.end());
  return empirical_quantile(std::span<double>(copy), p);
}

}  // namespace qlscm
