#include "qlscm/qreg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "qlscm/errors.hpp"

namespace qlscm {

DesignMatrix make_design(Eigen::MatrixXd values, std::vector<std::string> col_names) {
  if (values.rows() < values.cols())
    throw DataError("design matrix needs at least as many rows as columns");
  if (!values.allFinite()) throw DataError("design matrix has non-finite entries");
  if (!col_names.empty() &&
      static_cast<Eigen::Index>(col_names.size()) != values.cols())
    throw DataError("design matrix column-name count mismatch");
  return DesignMatrix{std::move(values), std::move(col_names)};
}

double pinball_loss(double u, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw DomainError("pinball_loss: tau must be in (0,1)");
  return u >= 0.0 ? u * tau : u * (tau - 1.0);
}

namespace {

std::string column_label(const DesignMatrix& design, Eigen::Index j) {
  if (!design.col_names.empty()) return design.col_names[j];
  return "column " + std::to_string(j);
}

// Throws SingularDesignError naming the dependent columns; rank is decided
// on singular values with relative threshold 1e-10.
void check_full_rank(const DesignMatrix& design) {
  const auto& X = design.values;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(X);
  const Eigen::VectorXd sv = svd.singularValues();
  const double cutoff = 1e-10 * sv(0);
  if (sv(sv.size() - 1) > cutoff) return;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  const auto rank = qr.rank();
  const auto perm = qr.colsPermutation().indices();
  std::string cols;
  for (Eigen::Index j = rank; j < X.cols(); ++j) {
    if (!cols.empty()) cols += ", ";
    cols += column_label(design, perm(j));
  }
  throw SingularDesignError("rank-deficient design; dependent columns: " + cols);
}

double total_pinball(const Eigen::VectorXd& r, double tau) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i)
    sum += r[i] >= 0.0 ? r[i] * tau : r[i] * (tau - 1.0);
  return sum;
}

// Exact minimizer of delta -> sum_i rho_tau(r_i - delta * a_i). The
// objective is convex piecewise linear; the derivative gains |a_i| at each
// breakpoint r_i/a_i, so we walk breakpoints until it crosses zero.
double line_search_pinball(const Eigen::VectorXd& r, const Eigen::VectorXd& a,
                           double tau) {
  double slope = 0.0;  // right-derivative at -infinity
  std::vector<std::pair<double, double>> brk;  // (breakpoint, |a_i|)
  brk.reserve(r.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    const double ai = a[i];
    if (ai == 0.0) continue;
    slope -= ai * tau;
    if (ai < 0.0) slope += ai;
    brk.emplace_back(r[i] / ai, std::abs(ai));
  }
  if (brk.empty()) return 0.0;
  std::sort(brk.begin(), brk.end());
  for (const auto& [point, jump] : brk) {
    slope += jump;
    if (slope >= 0.0) return point;
  }
  return brk.back().first;
}

// Re-solve the basic system defined by the p smallest residuals (first p
// independent rows) and adopt the exact vertex when it does not worsen the
// objective. Keeps transformed problems (scaled/shifted y) on bit-identical
// bases.
void snap_to_basis(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double tau,
                   Eigen::VectorXd& beta) {
  const Eigen::Index m = X.rows();
  const Eigen::Index p = X.cols();
  const Eigen::VectorXd r = y - X * beta;

  std::vector<Eigen::Index> order(m);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(r[a]) < std::abs(r[b]);
  });

  Eigen::MatrixXd basis(p, p);
  Eigen::VectorXd rhs(p);
  Eigen::Index got = 0;
  for (Eigen::Index pos = 0; pos < m && got < p; ++pos) {
    basis.row(got) = X.row(order[pos]);
    rhs[got] = y[order[pos]];
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(basis.topRows(got + 1));
    if (qr.rank() == got + 1) ++got;
  }
  if (got < p) return;

  const Eigen::VectorXd candidate =
      Eigen::FullPivLU<Eigen::MatrixXd>(basis).solve(rhs);
  double obj_candidate = 0.0;
  double obj_current = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    obj_candidate += pinball_loss(y[i] - X.row(i).dot(candidate), tau);
    obj_current += pinball_loss(r[i], tau);
  }
  if (obj_candidate <= obj_current) beta = candidate;
}

// Settle the interior-point iterate onto a vertex: cycle exact coordinate
// line searches while they strictly reduce the objective.
void polish_to_vertex(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      double tau, Eigen::VectorXd& beta) {
  Eigen::VectorXd r = y - X * beta;
  double obj = total_pinball(r, tau);
  const int max_sweeps = 50;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool improved = false;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      const double delta = line_search_pinball(r, X.col(j), tau);
      if (delta == 0.0) continue;
      const Eigen::VectorXd r_new = r - delta * X.col(j);
      const double obj_new = total_pinball(r_new, tau);
      if (obj_new < obj) {
        beta[j] += delta;
        r = r_new;
        obj = obj_new;
        improved = true;
      }
    }
    if (!improved) return;
  }
}

}  // namespace

QuantileFit fit_quantile(const DesignMatrix& design, const Eigen::VectorXd& y,
                         double tau, const QuantileFitOptions& opts) {
  if (!(tau > 0.0 && tau < 1.0)) throw DomainError("fit_quantile: tau must be in (0,1)");
  const auto& X = design.values;
  if (y.size() != X.rows()) throw DataError("fit_quantile: y length mismatch");
  check_full_rank(design);

  const Eigen::Index m = X.rows();
  const double md = static_cast<double>(m);

  // Dual-bounded LP: max y'a subject to X'a = (1-tau) X'1, a in [0,1]^m.
  // Primal coefficients b are the equality multipliers; u/w hold the
  // positive/negative residual parts paired with s = 1-a and a.
  Eigen::VectorXd a = Eigen::VectorXd::Constant(m, 1.0 - tau);
  Eigen::VectorXd s = Eigen::VectorXd::Constant(m, tau);
  const Eigen::VectorXd c = (1.0 - tau) * (X.transpose() * Eigen::VectorXd::Ones(m));

  Eigen::VectorXd beta = X.householderQr().solve(y);
  Eigen::VectorXd r = y - X * beta;

  const double pad = 1e-3 * (1.0 + r.cwiseAbs().mean());
  Eigen::VectorXd u = r.cwiseMax(0.0).array() + pad;  // pairs with s
  Eigen::VectorXd v = (-r).cwiseMax(0.0).array() + pad;  // pairs with a

  QuantileFit fit;
  fit.tau = tau;

  const double step_damp = 0.9995;
  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    r = y - X * beta;
    const double objective = total_pinball(r, tau);
    const double gap = u.dot(s) + v.dot(a);
    if (gap <= opts.tol * (1.0 + std::abs(objective))) {
      fit.converged = true;
      break;
    }

    const Eigen::VectorXd rho_p = c - X.transpose() * a;
    const Eigen::ArrayXd d =
        1.0 / (u.array() / s.array() + v.array() / a.array());

    auto solve_direction = [&](const Eigen::VectorXd& hu, const Eigen::VectorXd& hv,
                               Eigen::VectorXd& db, Eigen::VectorXd& da,
                               Eigen::VectorXd& du, Eigen::VectorXd& dv) {
      const Eigen::VectorXd g =
          r.array() - hu.array() / s.array() + hv.array() / a.array();
      const Eigen::MatrixXd xdx =
          X.transpose() * (d.matrix().asDiagonal() * X);
      const Eigen::VectorXd rhs = X.transpose() * (d * g.array()).matrix() - rho_p;
      db = Eigen::LDLT<Eigen::MatrixXd>(xdx).solve(rhs);
      da = (d * (g - X * db).array()).matrix();
      du = -u.array() + (hu.array() + u.array() * da.array()) / s.array();
      dv = -v.array() + (hv.array() - v.array() * da.array()) / a.array();
    };

    auto max_step = [&](const Eigen::VectorXd& da, const Eigen::VectorXd& du,
                        const Eigen::VectorXd& dv) {
      double ap = std::numeric_limits<double>::infinity();
      double ad = ap;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (da[i] < 0.0) ap = std::min(ap, -a[i] / da[i]);
        if (da[i] > 0.0) ap = std::min(ap, s[i] / da[i]);
        if (du[i] < 0.0) ad = std::min(ad, -u[i] / du[i]);
        if (dv[i] < 0.0) ad = std::min(ad, -v[i] / dv[i]);
      }
      return std::pair{std::min(1.0, step_damp * ap), std::min(1.0, step_damp * ad)};
    };

    // Affine predictor.
    const Eigen::VectorXd zero_h = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd db_aff, da_aff, du_aff, dv_aff;
    solve_direction(zero_h, zero_h, db_aff, da_aff, du_aff, dv_aff);
    const auto [ap_aff, ad_aff] = max_step(da_aff, du_aff, dv_aff);

    const double mu = gap / (2.0 * md);
    const double gap_aff = (u + ad_aff * du_aff).dot(s - ap_aff * da_aff) +
                           (v + ad_aff * dv_aff).dot(a + ap_aff * da_aff);
    const double mu_aff = gap_aff / (2.0 * md);
    double sigma = mu_aff / mu;
    sigma = std::clamp(sigma * sigma * sigma, 0.0, 1.0);

    // Mehrotra corrector; ds = -da.
    const Eigen::VectorXd hu =
        (sigma * mu + (da_aff.array() * du_aff.array())).matrix();
    const Eigen::VectorXd hv =
        (sigma * mu - (da_aff.array() * dv_aff.array())).matrix();
    Eigen::VectorXd db, da, du, dv;
    solve_direction(hu, hv, db, da, du, dv);
    const auto [ap, ad] = max_step(da, du, dv);

    a += ap * da;
    s -= ap * da;
    u += ad * du;
    v += ad * dv;
    beta += ad * db;
  }
  fit.iterations = iter;

  polish_to_vertex(X, y, tau, beta);
  snap_to_basis(X, y, tau, beta);
  polish_to_vertex(X, y, tau, beta);
  fit.coefficients = beta;

  r = y - X * beta;
  fit.objective = total_pinball(r, tau);

  const double scale = std::max(1.0, y.cwiseAbs().maxCoeff());
  const double sign_tol = 1e-9 * scale;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (r[i] > sign_tol) {
      ++fit.pos_count;
    } else if (r[i] < -sign_tol) {
      ++fit.neg_count;
    } else {
      ++fit.zero_count;
    }
  }
  return fit;
}

OlsFit fit_ols(const DesignMatrix& design, const Eigen::VectorXd& y) {
  const auto& X = design.values;
  if (y.size() != X.rows()) throw DataError("fit_ols: y length mismatch");
  check_full_rank(design);

  OlsFit fit;
  fit.coefficients = X.householderQr().solve(y);
  fit.residual_sum_squares = (y - X * fit.coefficients).squaredNorm();
  return fit;
}

}  // namespace qlscm
