#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "qlscm/rng.hpp"
#include "qlscm/stgrid.hpp"

namespace qlscm {

/// Stationary zero-mean Gaussian field with exponential covariance
/// c(si, sj) = exp(-decay * ||si - sj||_2).
struct GpSpec {
  double decay = 0.5;
  double mean = 0.0;
};

/// Holds the Cholesky factor of the grid covariance so repeated field draws
/// cost one matrix-vector product. The factorization adds diagonal jitter
/// 1e-8, doubling up to 1e-4 before giving up with a NumericalError.
class GpFieldSampler {
 public:
  GpFieldSampler(const Grid& grid, const GpSpec& spec = {});

  Eigen::VectorXd sample(Rng& rng) const;
  double jitter_used() const { return jitter_; }
  Eigen::Index size() const { return chol_.rows(); }

 private:
  Eigen::MatrixXd chol_;  // lower-triangular factor
  double mean_;
  double jitter_ = 0.0;
};

/// One draw of the field on `grid`; convenience wrapper over GpFieldSampler.
Eigen::VectorXd sample_gp_field(const Grid& grid, const GpSpec& spec, RngSeed seed);

/// Known ground truth of a simulation case.
struct SimTruth {
  enum class Kind { kConstant, kZero, kTauFunction };
  Kind kind = Kind::kZero;
  double beta1 = 0.0;  // constant/zero kinds; mean-effect value otherwise
  double beta0 = 0.0;  // informational
  std::map<double, double> tau_table;  // tau -> marginal effect (kTauFunction)
  std::string description;

  /// Truth for a qpe(tau) estimate, NaN when not defined.
  double qpe_truth(double tau) const;
  /// Truth for the ACE estimate, NaN when not defined.
  double ace_truth() const;
};

/// Simulated panel plus its ground truth. `hidden` carries the realized
/// time-invariant confounder components per site, for diagnostics only --
/// estimators never see it. Empty when the case exposes its confounder as a
/// W column (example1).
struct SimOutput {
  PanelDataset data;
  SimTruth truth;
  std::vector<std::vector<double>> hidden;
  RngSeed seed;
};

/// Constant-effect case under explicit confounding:
///   H = (gamma, xi/2 + sqrt(3)/2 * phi), all unit exponential-cov fields;
///   X = exp(-||s||^2/1000) + (0.2 + 0.1 sin(2 pi t/100)) H1 H2 + 0.5 xi_t;
///   Y = (1.5 + H1 H2) X + H1^2 + |H2| delta_t.
/// True marginal effect 1.5, intercept 1.
SimOutput gen_case1(const Grid& grid, int m, RngSeed seed);

/// Null-effect case with heavy-tailed noise (GEV shape 1.2, infinite mean):
///   H uniform(10,20) via Gaussian copula; X = 1 + 5 sin(2 pi t/100) + xi_t;
///   Y = 50 + 2 N(-0.5 X + H, 0.5) + X + 2 H + 2 eps.
/// The X terms cancel: the true marginal effect is exactly zero.
SimOutput gen_case2(const Grid& grid, int m, RngSeed seed);

/// Heterogeneous-effect case:
///   H uniform(50,100); X = 5[exp(-||s||/1000) + 1 + 5 sin(2 pi t/100) + xi_t];
///   Y = 4 + 2 N(-0.5 X + H, 0.5) + 2 Gamma(0.005 (X+H), 0.01).
/// The mean effect is zero while the tau-effect rises with tau; with
/// with_truth_table the tau_table holds oracle values on tau = 0.1..0.9.
SimOutput gen_case3(const Grid& grid, int m, RngSeed seed, bool with_truth_table = true);

/// Single-site panel of n replicates:
///   H ~ U(10,15) (exposed as confounder column w1), X = H + U(0.1,1),
///   Y = 0.5 N(-X/2 + H, 0.5) + 0.5 Gamma((X+H)/20, 0.1) + 0.1 t_3.
/// Conditional-mean slope in X is zero; the upper-tail slope is positive.
SimOutput gen_example1(int n, RngSeed seed);

inline constexpr int kOracleDefaultMc = 200000;
inline constexpr RngSeed kOracleDefaultSeed{1729};

/// Brute-force benchmark for the case-3 tau-effect: empirical conditional
/// quantiles of Y | (x, h) on a 21-point h grid and a unit-spaced x grid
/// spanning the case-3 exposure range, differentiated centrally in x and
/// averaged over the grids.
double oracle_case3_qpe(double tau, int mc = kOracleDefaultMc,
                        RngSeed seed = kOracleDefaultSeed);

/// Same draws evaluated at several tau levels at once.
std::vector<double> oracle_case3_qpe_table(const std::vector<double>& taus,
                                           int mc = kOracleDefaultMc,
                                           RngSeed seed = kOracleDefaultSeed);

/// Process-wide memoized truth table for case 3 at tau = 0.1, ..., 0.9 with
/// the default oracle settings.
const std::map<double, double>& case3_truth_table();

/// Draws Y from `model` with the exposure pinned at x (all other mechanisms
/// untouched) and returns the empirical tau-quantile of mc draws.
double mc_interventional_quantile(const std::function<double(double, Rng&)>& model,
                                  double x, double tau, int mc, RngSeed seed);

}  // namespace qlscm
