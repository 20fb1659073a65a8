#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace qlscm {

/// Regression design: one intercept column plus exposure and confounder
/// columns. Construct via make_design, which checks finiteness and m >= p.
struct DesignMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> col_names;  // empty or one name per column
};

DesignMatrix make_design(Eigen::MatrixXd values, std::vector<std::string> col_names = {});

/// rho_tau(u) = u * (tau - 1{u < 0}).
double pinball_loss(double u, double tau);

struct QuantileFitOptions {
  double tol = 1e-8;  // duality-gap tolerance, relative to 1 + |objective|
  int max_iter = 100;
};

struct QuantileFit {
  double tau = 0.5;
  Eigen::VectorXd coefficients;
  double objective = 0.0;  // sum of pinball losses at the solution
  int iterations = 0;
  bool converged = false;
  // residual sign tally; at an optimum neg_count <= tau*m and
  // pos_count <= (1-tau)*m
  int neg_count = 0;
  int zero_count = 0;
  int pos_count = 0;
};

/// Linear quantile regression by a primal-dual interior-point method on the
/// LP formulation (Mehrotra predictor-corrector), followed by exact
/// coordinate-wise line searches that settle the iterate onto a vertex.
/// Throws SingularDesignError when the design is rank deficient.
QuantileFit fit_quantile(const DesignMatrix& design, const Eigen::VectorXd& y,
                         double tau, const QuantileFitOptions& opts = {});

struct OlsFit {
  Eigen::VectorXd coefficients;
  double residual_sum_squares = 0.0;
};

/// Least squares via Householder QR (no normal equations).
OlsFit fit_ols(const DesignMatrix& design, const Eigen::VectorXd& y);

}  // namespace qlscm
