#pragma once

#include <span>
#include <vector>

namespace qlscm {

/// Empirical p-quantile with linear interpolation between order statistics
/// (R type 7). Partially reorders `values`.
double empirical_quantile(std::span<double> values, double p);

/// Convenience overload that copies.
double empirical_quantile(std::span<const double> values, double p);

}  // namespace qlscm
