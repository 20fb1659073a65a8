#pragma once

#include <Eigen/Core>
#include <span>
#include <string>
#include <vector>

#include "qlscm/estimators.hpp"
#include "qlscm/rng.hpp"
#include "qlscm/stgrid.hpp"

namespace qlscm {

struct BootstrapSpec {
  int replicates = 250;
  double expected_block = 5.0;
  double level = 0.99;
  RngSeed seed{0};
};

/// Which spatial effect a bootstrap resamples.
struct EstimatorSpec {
  enum class Kind { kQpe, kAce };
  Kind kind = Kind::kQpe;
  double tau = 0.5;

  static EstimatorSpec qpe(double tau) { return {Kind::kQpe, tau}; }
  static EstimatorSpec ace() { return {Kind::kAce, 0.5}; }

  std::string label() const;
};

struct BootstrapResult {
  Eigen::MatrixXd estimates;  // replicates x d resampled slopes
  Eigen::VectorXd point;      // original-data estimate
  Eigen::VectorXd ci_lower;   // percentile interval
  Eigen::VectorXd ci_upper;
  std::vector<bool> significant;  // per exposure: CI excludes 0
  double level = 0.99;
  std::vector<std::string> warnings;
};

/// Geometric block length with mean expected_block (support 1, 2, ...);
/// expected_block = 1 degenerates to constant length 1.
int geometric_block_length(double expected_block, Rng& rng);

/// Politis-Romano stationary bootstrap index sequence: blocks with uniform
/// random starts and geometric lengths, wrapped modulo m, truncated to m.
std::vector<int> stationary_bootstrap_indices(int m, double expected_block, Rng& rng);
std::vector<int> stationary_bootstrap_indices(int m, double expected_block, RngSeed seed);

/// Resamples each site's time series independently (per-site sub-streams of
/// spec.seed), re-estimates the spatial effect per replicate, and forms
/// percentile confidence intervals. Replicates whose estimation fails are
/// redrawn from fresh sub-streams, up to 10x the replicate budget.
/// Deterministic for fixed inputs under any thread count.
BootstrapResult bootstrap_effect(const PanelDataset& data, const EstimatorSpec& estimator,
                                 const BootstrapSpec& spec,
                                 std::span<const double> weights = {});

struct ZeroEffectVerdict {
  bool reject = false;  // reject H0 of no effect iff CI excludes 0
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  double level = 0.99;
};

/// Per-exposure zero-effect verdicts; an endpoint exactly at 0 counts as
/// containing 0 (conservative closed-interval convention).
std::vector<ZeroEffectVerdict> test_zero_effect(const BootstrapResult& result);

/// Hill tail-index estimate from the k largest order statistics of the
/// strictly positive subsample: mean log-spacing above the (k+1)-th largest.
double hill_estimator(std::span<const double> data, int k);

}  // namespace qlscm
