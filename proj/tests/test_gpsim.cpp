#include <doctest.h>

#include <cmath>

#include "qlscm/distributions.hpp"
#include "qlscm/errors.hpp"
#include "qlscm/gpsim.hpp"
#include "test_oracles.hpp"

using namespace qlscm;

TEST_CASE("single-site field is a standard normal draw") {
  const Grid grid = make_regular_grid(1, 1);
  GpFieldSampler sampler(grid);
  Rng rng(RngSeed{1});
  const int n = 20000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = sampler.sample(rng)[0];
    sum += v;
    sumsq += v * v;
  }
  const double mean = sum / n;
  CHECK(std::abs(mean) < 0.03);
  CHECK(sumsq / n - mean * mean == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("two sites at distance 2 correlate like exp(-1)") {
  Grid grid({Site{"a", {0.0, 0.0}, 1.0, std::nullopt},
             Site{"b", {2.0, 0.0}, 1.0, std::nullopt}});
  GpFieldSampler sampler(grid);
  Rng rng(RngSeed{2});
  const int n = 100000;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd f = sampler.sample(rng);
    sxy += f[0] * f[1];
    sxx += f[0] * f[0];
    syy += f[1] * f[1];
  }
  const double corr = sxy / std::sqrt(sxx * syy);
  CHECK(corr == doctest::Approx(std::exp(-1.0)).epsilon(0.03));
}

TEST_CASE("field variance at a fixed site stays near one") {
  const Grid grid = make_regular_grid(4, 3);
  GpFieldSampler sampler(grid);
  Rng rng(RngSeed{3});
  const int n = 10000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = sampler.sample(rng)[5];
    sum += v;
    sumsq += v * v;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(var > 0.95);
  CHECK(var < 1.05);
}

TEST_CASE("sample_gp_field is deterministic in the seed") {
  const Grid grid = make_regular_grid(3, 3);
  const Eigen::VectorXd a = sample_gp_field(grid, {}, RngSeed{17});
  const Eigen::VectorXd b = sample_gp_field(grid, {}, RngSeed{17});
  CHECK(a == b);
}

TEST_CASE("case 1 carries its ground truth and hidden components") {
  const SimOutput sim = gen_case1(make_regular_grid(6, 4), 20, RngSeed{5});
  CHECK(sim.truth.kind == SimTruth::Kind::kConstant);
  CHECK(sim.truth.beta1 == 1.5);
  CHECK(sim.truth.beta0 == 1.0);
  CHECK(sim.truth.qpe_truth(0.5) == 1.5);
  CHECK(sim.truth.ace_truth() == 1.5);
  CHECK(sim.hidden.size() == 24);
  for (const auto& h : sim.hidden) CHECK(h.size() == 2);
  CHECK(sim.data.d() == 1);
  CHECK(sim.data.k() == 0);
  CHECK(sim.data.site(0).rows() == 20);
  CHECK_THROWS_AS(gen_case1(make_regular_grid(2, 2), 5, RngSeed{5}), DomainError);
}

TEST_CASE("generators are deterministic in the seed") {
  const Grid grid = make_regular_grid(4, 3);
  const SimOutput a = gen_case2(grid, 15, RngSeed{7});
  const SimOutput b = gen_case2(grid, 15, RngSeed{7});
  CHECK(a.data.equals(b.data));
  const SimOutput c = gen_case2(grid, 15, RngSeed{8});
  CHECK_FALSE(c.data.equals(a.data));
}

TEST_CASE("case 2 hidden field lies in (10,20) and truth is zero") {
  const SimOutput sim = gen_case2(make_regular_grid(6, 4), 20, RngSeed{9});
  CHECK(sim.truth.kind == SimTruth::Kind::kZero);
  CHECK(sim.truth.qpe_truth(0.9) == 0.0);
  for (const auto& h : sim.hidden) {
    CHECK(h[0] > 10.0);
    CHECK(h[0] < 20.0);
  }
}

TEST_CASE("case 2 pooled outcome is heavy tailed like its GEV noise") {
  // The outcome is GEV noise shifted by ~50+4H, so tail equivalence with the
  // raw noise only holds deep in the tail; k = 0.5% of n is deep enough,
  // while at k = 5% the location shift drags the estimate to ~0.7.
  const SimOutput sim = gen_case2(make_regular_grid(50, 20), 100, RngSeed{10});
  std::vector<double> pooled;
  for (std::size_t i = 0; i < sim.data.n_sites(); ++i) {
    const auto& y = sim.data.site(i).y;
    pooled.insert(pooled.end(), y.begin(), y.end());
  }
  const int k = static_cast<int>(0.005 * pooled.size());
  double top_sum = 0.0;
  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  for (int i = 0; i < k; ++i) top_sum += std::log(sorted[i] / sorted[k]);
  const double hill = top_sum / k;
  CHECK(hill > 0.9);
  CHECK(hill < 1.5);
}

TEST_CASE("case 3 hidden field lies in (50,100); zero mean effect") {
  const SimOutput sim = gen_case3(make_regular_grid(6, 4), 20, RngSeed{11}, false);
  CHECK(sim.truth.kind == SimTruth::Kind::kTauFunction);
  CHECK(sim.truth.ace_truth() == 0.0);
  CHECK(sim.truth.tau_table.empty());
  for (const auto& h : sim.hidden) {
    CHECK(h[0] > 50.0);
    CHECK(h[0] < 100.0);
  }
}

TEST_CASE("example 1 panel exposes the confounder and bounds the exposure") {
  const SimOutput sim = gen_example1(5000, RngSeed{12});
  CHECK(sim.data.n_sites() == 1);
  CHECK(sim.data.d() == 1);
  CHECK(sim.data.k() == 1);
  CHECK(sim.truth.ace_truth() == 0.0);
  const auto& site = sim.data.site(0);
  for (int t = 0; t < 5000; ++t) {
    CHECK(site.x(t, 0) > 10.1);
    CHECK(site.x(t, 0) < 16.0);
    CHECK(site.w(t, 0) > 10.0);
    CHECK(site.w(t, 0) < 15.0);
  }
  CHECK_THROWS_AS(gen_example1(50, RngSeed{12}), DomainError);
}

TEST_CASE("interventional quantile of a degenerate model is x + z_tau") {
  auto model = [](double x, Rng& rng) { return x + rng.normal(); };
  for (double tau : {0.1, 0.5, 0.9}) {
    const double q = mc_interventional_quantile(model, 2.0, tau, 100000, RngSeed{13});
    CHECK(q == doctest::Approx(2.0 + normal_quantile(tau)).epsilon(0.02));
  }
  CHECK_THROWS_AS(mc_interventional_quantile(model, 0.0, 0.5, 100, RngSeed{13}),
                  DomainError);
}

TEST_CASE("interventional equals conditional quantile on case 2 sites") {
  const SimOutput sim = gen_case2(make_regular_grid(5, 4), 20, RngSeed{14});
  const double x_pin = 3.0;
  const int mc = 40000;
  const GevParams gev(0.0, 1.0, 1.2);
  const double sd = std::sqrt(0.5);

  for (std::size_t site : {0ul, 9ul}) {
    const double h = sim.hidden[site][0];
    // route A: library op on the full structural mechanism with X pinned
    auto mechanism = [&](double x, Rng& rng) {
      const double z = rng.normal();
      const double eps = gev_sample_one(gev, rng);
      return 50.0 + 2.0 * ((-0.5 * x + h) + sd * z) + x + 2.0 * h + 2.0 * eps;
    };
    for (double tau : {0.1, 0.5, 0.9}) {
      const double q_int =
          mc_interventional_quantile(mechanism, x_pin, tau, mc, RngSeed{15});
      // route B: direct conditional sampling from Y | (X=x, H=h)
      Rng rng(RngSeed{16});
      std::vector<double> draws(mc);
      for (int r = 0; r < mc; ++r)
        draws[r] = 50.0 + 4.0 * h + 2.0 * sd * rng.normal() +
                   2.0 * gev_sample_one(gev, rng);
      const auto [q_cond, se] = oracles::quantile_with_se(draws, tau);
      CHECK(std::abs(q_int - q_cond) <= 3.0 * std::sqrt(2.0) * se);
    }
  }
}

TEST_CASE("reduced-size case 3 oracle: reproducible, ordered, zero mean analogue") {
  const int mc = 2000;
  const auto a = oracle_case3_qpe_table({0.1, 0.5, 0.9}, mc, RngSeed{20});
  const auto b = oracle_case3_qpe_table({0.1, 0.5, 0.9}, mc, RngSeed{20});
  CHECK(a == b);
  CHECK(oracle_case3_qpe(0.5, mc, RngSeed{20}) == a[1]);

  // effect strengthens with the quantile level
  CHECK(a[2] > a[0]);

  // mean-based analogue of the same construction cancels to zero
  Rng rng(RngSeed{21});
  const double sd = std::sqrt(0.5);
  double deriv_sum = 0.0;
  int terms = 0;
  for (double h : {50.0, 75.0, 100.0}) {
    std::vector<double> means;
    for (double x = -20.0; x <= 40.0; x += 10.0) {
      double acc = 0.0;
      const int n = 40000;
      for (int r = 0; r < n; ++r) {
        const double z = rng.normal();
        const double g = gamma_sample_one(GammaParams(0.005 * (x + h), 0.01), rng);
        acc += 4.0 + 2.0 * ((-0.5 * x + h) + sd * z) + 2.0 * g;
      }
      means.push_back(acc / n);
    }
    for (std::size_t j = 1; j + 1 < means.size(); ++j) {
      deriv_sum += (means[j + 1] - means[j - 1]) / 20.0;
      ++terms;
    }
  }
  CHECK(std::abs(deriv_sum / terms) < 0.05);
}
