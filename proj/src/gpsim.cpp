#include "qlscm/gpsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>

#include "qlscm/distributions.hpp"
#include "qlscm/errors.hpp"
#include "qlscm/parallel.hpp"
#include "qlscm/quantiles.hpp"

namespace qlscm {

namespace {

// Sub-stream keys; one per independent randomness source of a generator.
constexpr std::uint64_t kGammaField = 1;
constexpr std::uint64_t kPhiField = 2;
constexpr std::uint64_t kXiStaticField = 3;
constexpr std::uint64_t kXiTimeField = 4;
constexpr std::uint64_t kDeltaTimeField = 5;
constexpr std::uint64_t kSiteNoise = 6;

double site_norm(const Site& s) {
  return std::hypot(s.coords[0], s.coords[1]);
}

double seasonal(int t) { return std::sin(2.0 * std::numbers::pi * t / 100.0); }

PanelDataset assemble_panel(const Grid& grid, const Eigen::MatrixXd& x,
                            const Eigen::MatrixXd& y,
                            std::vector<std::string> exposure_names) {
  // x, y are n_sites x m
  const int m = static_cast<int>(x.cols());
  std::vector<PanelSite> sites(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    PanelSite ps;
    ps.times.resize(m);
    for (int t = 0; t < m; ++t) ps.times[t] = t + 1;
    ps.y = y.row(i).transpose();
    ps.x = x.row(i).transpose();
    ps.w.resize(m, 0);
    sites[i] = std::move(ps);
  }
  return PanelDataset(grid, std::move(sites), std::move(exposure_names), {});
}

}  // namespace

GpFieldSampler::GpFieldSampler(const Grid& grid, const GpSpec& spec)
    : mean_(spec.mean) {
  if (grid.size() == 0) throw DomainError("GpFieldSampler: empty grid");
  const auto n = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd cov(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& si = grid.site(i).coords;
    cov(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto& sj = grid.site(j).coords;
      const double dist = std::hypot(si[0] - sj[0], si[1] - sj[1]);
      cov(i, j) = cov(j, i) = std::exp(-spec.decay * dist);
    }
  }

  for (double jitter = 1e-8; jitter <= 1e-4; jitter *= 2.0) {
    Eigen::MatrixXd work = cov;
    work.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(work);
    if (llt.info() == Eigen::Success) {
      chol_ = llt.matrixL();
      jitter_ = jitter;
      return;
    }
  }
  // crude conditioning figure from Gershgorin bounds
  double max_row = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) max_row = std::max(max_row, cov.row(i).cwiseAbs().sum());
  throw NumericalError(
      "GP covariance factorization failed at jitter 1e-4; Gershgorin upper "
      "eigenvalue bound " + std::to_string(max_row));
}

Eigen::VectorXd GpFieldSampler::sample(Rng& rng) const {
  Eigen::VectorXd z(chol_.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  Eigen::VectorXd field = chol_.triangularView<Eigen::Lower>() * z;
  field.array() += mean_;
  return field;
}

Eigen::VectorXd sample_gp_field(const Grid& grid, const GpSpec& spec, RngSeed seed) {
  GpFieldSampler sampler(grid, spec);
  Rng rng(seed);
  return sampler.sample(rng);
}

double SimTruth::qpe_truth(double tau) const {
  switch (kind) {
    case Kind::kConstant:
      return beta1;
    case Kind::kZero:
      return 0.0;
    case Kind::kTauFunction:
      for (const auto& [key, value] : tau_table)
        if (std::abs(key - tau) < 1e-12) return value;
      return std::numeric_limits<double>::quiet_NaN();
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double SimTruth::ace_truth() const {
  switch (kind) {
    case Kind::kConstant:
      return beta1;
    case Kind::kZero:
      return 0.0;
    case Kind::kTauFunction:
      return beta1;  // mean effect recorded separately from the tau curve
  }
  return std::numeric_limits<double>::quiet_NaN();
}

SimOutput gen_case1(const Grid& grid, int m, RngSeed seed) {
  if (m < 10) throw DomainError("gen_case1: m must be >= 10");
  const auto n = static_cast<Eigen::Index>(grid.size());
  GpFieldSampler sampler(grid);
  Rng master(seed);

  Rng rng_gamma = master.split(kGammaField);
  Rng rng_phi = master.split(kPhiField);
  Rng rng_xi_static = master.split(kXiStaticField);
  const Eigen::VectorXd h1 = sampler.sample(rng_gamma);
  const Eigen::VectorXd phi = sampler.sample(rng_phi);
  const Eigen::VectorXd xi_static = sampler.sample(rng_xi_static);
  const Eigen::VectorXd h2 = 0.5 * xi_static + (std::sqrt(3.0) / 2.0) * phi;

  Eigen::MatrixXd x(n, m);
  Eigen::MatrixXd y(n, m);
  for (int t = 1; t <= m; ++t) {
    Rng rng_xi = master.split(kXiTimeField, static_cast<std::uint64_t>(t));
    Rng rng_delta = master.split(kDeltaTimeField, static_cast<std::uint64_t>(t));
    const Eigen::VectorXd xi_t = sampler.sample(rng_xi);
    const Eigen::VectorXd delta_t = sampler.sample(rng_delta);
    const double season = 0.2 + 0.1 * seasonal(t);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double hh = h1[i] * h2[i];
      const double ns = site_norm(grid.site(i));
      const double xv = std::exp(-ns * ns / 1000.0) + season * hh + 0.5 * xi_t[i];
      x(i, t - 1) = xv;
      y(i, t - 1) = (1.5 + hh) * xv + h1[i] * h1[i] + std::abs(h2[i]) * delta_t[i];
    }
  }

  SimOutput out;
  out.data = assemble_panel(grid, x, y, {"x1"});
  out.truth.kind = SimTruth::Kind::kConstant;
  out.truth.beta1 = 1.5;
  out.truth.beta0 = 1.0;
  out.truth.description = "constant marginal effect under explicit confounding";
  out.hidden.resize(grid.size());
  for (Eigen::Index i = 0; i < n; ++i) out.hidden[i] = {h1[i], h2[i]};
  out.seed = seed;
  return out;
}

SimOutput gen_case2(const Grid& grid, int m, RngSeed seed) {
  if (m < 10) throw DomainError("gen_case2: m must be >= 10");
  const auto n = static_cast<Eigen::Index>(grid.size());
  GpFieldSampler sampler(grid);
  Rng master(seed);

  Rng rng_gamma = master.split(kGammaField);
  const Eigen::VectorXd gamma = sampler.sample(rng_gamma);
  Eigen::VectorXd h(n);
  for (Eigen::Index i = 0; i < n; ++i) h[i] = uniform_from_gaussian(gamma[i], 10.0, 20.0);

  Eigen::MatrixXd xi(n, m);
  for (int t = 1; t <= m; ++t) {
    Rng rng_xi = master.split(kXiTimeField, static_cast<std::uint64_t>(t));
    xi.col(t - 1) = sampler.sample(rng_xi);
  }

  const GevParams gev(0.0, 1.0, 1.2);
  const double sd = std::sqrt(0.5);
  Eigen::MatrixXd x(n, m);
  Eigen::MatrixXd y(n, m);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    Rng site_rng = master.split(kSiteNoise, i);
    for (int t = 1; t <= m; ++t) {
      const double xv = 1.0 + 5.0 * seasonal(t) + xi(i, t - 1);
      const double z = site_rng.normal();
      const double eps = gev_sample_one(gev, site_rng);
      const double normal_part = (-0.5 * xv + h[i]) + sd * z;
      x(i, t - 1) = xv;
      y(i, t - 1) = 50.0 + 2.0 * normal_part + xv + 2.0 * h[i] + 2.0 * eps;
    }
  });

  SimOutput out;
  out.data = assemble_panel(grid, x, y, {"x1"});
  out.truth.kind = SimTruth::Kind::kZero;
  out.truth.beta1 = 0.0;
  out.truth.beta0 = 0.0;
  out.truth.description = "null marginal effect with heavy-tailed errors";
  out.hidden.resize(grid.size());
  for (Eigen::Index i = 0; i < n; ++i) out.hidden[i] = {h[i]};
  out.seed = seed;
  return out;
}

SimOutput gen_case3(const Grid& grid, int m, RngSeed seed, bool with_truth_table) {
  if (m < 10) throw DomainError("gen_case3: m must be >= 10");
  const auto n = static_cast<Eigen::Index>(grid.size());
  GpFieldSampler sampler(grid);
  Rng master(seed);

  Rng rng_gamma = master.split(kGammaField);
  const Eigen::VectorXd gamma = sampler.sample(rng_gamma);
  Eigen::VectorXd h(n);
  for (Eigen::Index i = 0; i < n; ++i) h[i] = uniform_from_gaussian(gamma[i], 50.0, 100.0);

  Eigen::MatrixXd xi(n, m);
  for (int t = 1; t <= m; ++t) {
    Rng rng_xi = master.split(kXiTimeField, static_cast<std::uint64_t>(t));
    xi.col(t - 1) = sampler.sample(rng_xi);
  }

  const double sd = std::sqrt(0.5);
  Eigen::MatrixXd x(n, m);
  Eigen::MatrixXd y(n, m);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    Rng site_rng = master.split(kSiteNoise, i);
    const double ns = site_norm(grid.site(i));
    for (int t = 1; t <= m; ++t) {
      const double xv =
          5.0 * (std::exp(-ns / 1000.0) + (1.0 + 5.0 * seasonal(t)) + xi(i, t - 1));
      const double z = site_rng.normal();
      const double g =
          gamma_sample_one(GammaParams(0.005 * (xv + h[i]), 0.01), site_rng);
      const double normal_part = (-0.5 * xv + h[i]) + sd * z;
      x(i, t - 1) = xv;
      y(i, t - 1) = 4.0 + 2.0 * normal_part + 2.0 * g;
    }
  });

  SimOutput out;
  out.data = assemble_panel(grid, x, y, {"x1"});
  out.truth.kind = SimTruth::Kind::kTauFunction;
  out.truth.beta1 = 0.0;  // the mean effect: 2*(-0.5) + 2*(0.005/0.01) = 0
  out.truth.beta0 = 0.0;
  out.truth.description = "tau-dependent marginal effect, zero mean effect";
  if (with_truth_table) out.truth.tau_table = case3_truth_table();
  out.hidden.resize(grid.size());
  for (Eigen::Index i = 0; i < n; ++i) out.hidden[i] = {h[i]};
  out.seed = seed;
  return out;
}

SimOutput gen_example1(int n, RngSeed seed) {
  if (n < 100) throw DomainError("gen_example1: n must be >= 100");
  Grid grid = make_regular_grid(1, 1);
  Rng master(seed);
  Rng rng = master.split(kSiteNoise, 0);

  const double sd = std::sqrt(0.5);
  PanelSite ps;
  ps.times.resize(n);
  ps.y.resize(n);
  ps.x.resize(n, 1);
  ps.w.resize(n, 1);
  for (int t = 0; t < n; ++t) {
    const double hv = rng.uniform(10.0, 15.0);
    const double e1 = rng.uniform(0.1, 1.0);
    const double xv = hv + e1;
    const double z1 = (-xv / 2.0 + hv) + sd * rng.normal();
    const double z2 = gamma_sample_one(GammaParams((xv + hv) / 20.0, 0.1), rng);
    const double e2 = student_t_sample_one(3.0, rng);
    ps.times[t] = t + 1;
    ps.x(t, 0) = xv;
    ps.w(t, 0) = hv;
    ps.y[t] = 0.5 * z1 + 0.5 * z2 + 0.1 * e2;
  }

  SimOutput out;
  out.data = PanelDataset(std::move(grid), {std::move(ps)}, {"x1"}, {"w1"});
  out.truth.kind = SimTruth::Kind::kZero;
  out.truth.beta1 = 0.0;
  out.truth.beta0 = 0.0;
  out.truth.description =
      "zero conditional-mean slope; upper-tail slope positive";
  out.seed = seed;
  return out;
}

namespace {

// case-3 exposure range covered by the oracle's unit-spaced x grid
constexpr int kOracleXMin = -30;
constexpr int kOracleXMax = 50;
constexpr int kOracleHPoints = 21;

}  // namespace

std::vector<double> oracle_case3_qpe_table(const std::vector<double>& taus, int mc,
                                           RngSeed seed) {
  for (double tau : taus)
    if (!(tau > 0.0 && tau < 1.0))
      throw DomainError("oracle_case3_qpe: tau must be in (0,1)");
  if (mc < 100) throw DomainError("oracle_case3_qpe: mc too small");

  const int nx = kOracleXMax - kOracleXMin + 1;
  const int nh = kOracleHPoints;
  const std::size_t n_cells = static_cast<std::size_t>(nx) * nh;
  const std::size_t n_taus = taus.size();
  const double sd = std::sqrt(0.5);

  // conditional tau-quantiles of Y | (x, h) per grid cell
  std::vector<double> q(n_cells * n_taus);
  Rng master(seed);
  parallel_for(n_cells, [&](std::size_t cell) {
    const int hi = static_cast<int>(cell) / nx;
    const int xi = static_cast<int>(cell) % nx;
    const double h = 50.0 + 50.0 * hi / (nh - 1.0);
    const double x = static_cast<double>(kOracleXMin + xi);
    Rng rng = master.split(cell + 1);
    const GammaParams gp(0.005 * (x + h), 0.01);
    std::vector<double> draws(mc);
    for (int r = 0; r < mc; ++r) {
      const double normal_part = (-0.5 * x + h) + sd * rng.normal();
      draws[r] = 4.0 + 2.0 * normal_part + 2.0 * gamma_sample_one(gp, rng);
    }
    for (std::size_t ti = 0; ti < n_taus; ++ti)
      q[cell * n_taus + ti] = empirical_quantile(std::span<double>(draws), taus[ti]);
  });

  // central differences in x, averaged over the h grid and interior x points
  std::vector<double> out(n_taus, 0.0);
  const std::size_t n_terms = static_cast<std::size_t>(nh) * (nx - 2);
  for (std::size_t ti = 0; ti < n_taus; ++ti) {
    double sum = 0.0;
    for (int hi = 0; hi < nh; ++hi) {
      for (int xi = 1; xi + 1 < nx; ++xi) {
        const std::size_t right = (static_cast<std::size_t>(hi) * nx + xi + 1) * n_taus + ti;
        const std::size_t left = (static_cast<std::size_t>(hi) * nx + xi - 1) * n_taus + ti;
        sum += (q[right] - q[left]) / 2.0;
      }
    }
    out[ti] = sum / static_cast<double>(n_terms);
  }
  return out;
}

double oracle_case3_qpe(double tau, int mc, RngSeed seed) {
  return oracle_case3_qpe_table({tau}, mc, seed)[0];
}

const std::map<double, double>& case3_truth_table() {
  static std::map<double, double> table;
  static std::once_flag flag;
  std::call_once(flag, [] {
    std::vector<double> taus;
    for (int i = 1; i <= 9; ++i) taus.push_back(i / 10.0);
    const std::vector<double> values = oracle_case3_qpe_table(taus);
    for (std::size_t i = 0; i < taus.size(); ++i) table.emplace(taus[i], values[i]);
  });
  return table;
}

double mc_interventional_quantile(const std::function<double(double, Rng&)>& model,
                                  double x, double tau, int mc, RngSeed seed) {
  if (!(tau > 0.0 && tau < 1.0))
    throw DomainError("mc_interventional_quantile: tau must be in (0,1)");
  if (mc < 10000)
    throw DomainError("mc_interventional_quantile: mc must be >= 10000");
  Rng rng(seed);
  std::vector<double> draws(mc);
  for (int r = 0; r < mc; ++r) draws[r] = model(x, rng);
  return empirical_quantile(std::span<double>(draws), tau);
}

}  // namespace qlscm
