#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "qlscm/distributions.hpp"
#include "qlscm/errors.hpp"
#include "qlscm/gpsim.hpp"
#include "qlscm/inference.hpp"
#include "qlscm/parallel.hpp"

using namespace qlscm;

namespace {

PanelDataset noiseless_panel(int n_sites, int m) {
  Rng rng(RngSeed{50});
  std::vector<Site> sites;
  std::vector<PanelSite> panel;
  for (int i = 0; i < n_sites; ++i) {
    sites.push_back({"s" + std::to_string(i), {static_cast<double>(i), 0.0}, 1.0,
                     std::nullopt});
    PanelSite ps;
    ps.times.resize(m);
    std::iota(ps.times.begin(), ps.times.end(), 1);
    ps.x.resize(m, 1);
    ps.w.resize(m, 0);
    ps.y.resize(m);
    for (int t = 0; t < m; ++t) {
      ps.x(t, 0) = rng.normal();
      ps.y[t] = 2.0 * ps.x(t, 0);
    }
    panel.push_back(std::move(ps));
  }
  return PanelDataset(Grid(std::move(sites)), std::move(panel), {"x1"}, {});
}

}  // namespace

TEST_CASE("geometric block lengths have the requested mean") {
  Rng rng(RngSeed{51});
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const int len = geometric_block_length(5.0, rng);
    CHECK(len >= 1);
    sum += len;
  }
  CHECK(sum / n == doctest::Approx(5.0).epsilon(0.01));

  // expected_block = 1 degenerates to constant blocks of one
  for (int i = 0; i < 1000; ++i) CHECK(geometric_block_length(1.0, rng) == 1);
  CHECK_THROWS_AS(geometric_block_length(0.5, rng), DomainError);
}

TEST_CASE("bootstrap indices stay in range and reproduce from the seed") {
  const auto a = stationary_bootstrap_indices(37, 5.0, RngSeed{52});
  CHECK(a.size() == 37);
  for (int idx : a) {
    CHECK(idx >= 0);
    CHECK(idx < 37);
  }
  CHECK(a == stationary_bootstrap_indices(37, 5.0, RngSeed{52}));
  CHECK(a != stationary_bootstrap_indices(37, 5.0, RngSeed{53}));
  CHECK_THROWS_AS(stationary_bootstrap_indices(1, 5.0, RngSeed{52}), DomainError);
}

TEST_CASE("expected_block=1 resampling is uniform over indices") {
  const int m = 10;
  const int reps = 10000;
  std::vector<long> counts(m, 0);
  Rng rng(RngSeed{54});
  for (int r = 0; r < reps; ++r)
    for (int idx : stationary_bootstrap_indices(m, 1.0, rng)) ++counts[idx];

  const double expected = static_cast<double>(reps);  // m*reps draws over m bins
  double chi2 = 0.0;
  for (long c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // chi-square critical value, df = 9, upper tail 0.001
  CHECK(chi2 < 27.877);
}

TEST_CASE("noise-free panel collapses the bootstrap interval at the truth") {
  const PanelDataset data = noiseless_panel(4, 20);
  BootstrapSpec spec;
  spec.replicates = 60;
  spec.seed = RngSeed{55};
  const BootstrapResult res = bootstrap_effect(data, EstimatorSpec::qpe(0.5), spec);
  CHECK(res.point[0] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(res.ci_lower[0] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(res.ci_upper[0] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(res.significant[0]);
  // zero-width interval is flagged, not fatal
  bool warned = false;
  for (const auto& w : res.warnings)
    if (w.find("zero-width") != std::string::npos) warned = true;
  CHECK(warned);
}

TEST_CASE("bootstrap is deterministic under any thread count") {
  const SimOutput sim = gen_case2(make_regular_grid(4, 3), 20, RngSeed{56});
  BootstrapSpec spec;
  spec.replicates = 40;
  spec.seed = RngSeed{57};

  set_max_threads(1);
  const BootstrapResult serial = bootstrap_effect(sim.data, EstimatorSpec::ace(), spec);
  set_max_threads(4);
  const BootstrapResult threaded = bootstrap_effect(sim.data, EstimatorSpec::ace(), spec);
  set_max_threads(0);

  CHECK(serial.estimates == threaded.estimates);
  CHECK(serial.ci_lower == threaded.ci_lower);
  CHECK(serial.ci_upper == threaded.ci_upper);
}

TEST_CASE("wider level nests the narrower interval on the same replicates") {
  const SimOutput sim = gen_case2(make_regular_grid(4, 3), 25, RngSeed{58});
  BootstrapSpec spec99;
  spec99.replicates = 80;
  spec99.seed = RngSeed{59};
  spec99.level = 0.99;
  BootstrapSpec spec90 = spec99;
  spec90.level = 0.90;

  const BootstrapResult wide = bootstrap_effect(sim.data, EstimatorSpec::qpe(0.5), spec99);
  const BootstrapResult narrow = bootstrap_effect(sim.data, EstimatorSpec::qpe(0.5), spec90);
  CHECK(wide.estimates == narrow.estimates);  // same seed, same replicates
  CHECK(wide.ci_lower[0] <= narrow.ci_lower[0]);
  CHECK(wide.ci_upper[0] >= narrow.ci_upper[0]);
}

TEST_CASE("failing replicates are redrawn deterministically") {
  // single site whose x column has one distinct value among three records;
  // many resamples are rank deficient and must be retried
  std::vector<Site> sites{{"s", {0.0, 0.0}, 1.0, std::nullopt}};
  PanelSite ps;
  ps.times = {1, 2, 3};
  ps.x.resize(3, 1);
  ps.x << 0.0, 0.0, 1.0;
  ps.w.resize(3, 0);
  ps.y.resize(3);
  ps.y << 0.0, 0.0, 2.0;
  const PanelDataset data(Grid(std::move(sites)), {ps}, {"x1"}, {});

  BootstrapSpec spec;
  spec.replicates = 30;
  spec.expected_block = 1.0;
  spec.seed = RngSeed{60};
  const BootstrapResult res = bootstrap_effect(data, EstimatorSpec::qpe(0.5), spec);
  CHECK(res.estimates.rows() == 30);
  CHECK(res.estimates.allFinite());
  const BootstrapResult rerun = bootstrap_effect(data, EstimatorSpec::qpe(0.5), spec);
  CHECK(res.estimates == rerun.estimates);
}

TEST_CASE("bootstrap preconditions") {
  const PanelDataset data = noiseless_panel(2, 1);
  BootstrapSpec spec;
  CHECK_THROWS_AS(bootstrap_effect(data, EstimatorSpec::ace(), spec), DataError);

  const PanelDataset ok = noiseless_panel(2, 10);
  BootstrapSpec bad = spec;
  bad.replicates = 1;
  CHECK_THROWS_AS(bootstrap_effect(ok, EstimatorSpec::ace(), bad), DomainError);
  bad = spec;
  bad.level = 1.0;
  CHECK_THROWS_AS(bootstrap_effect(ok, EstimatorSpec::ace(), bad), DomainError);
}

TEST_CASE("zero-effect verdicts use the closed-interval convention") {
  BootstrapResult res;
  res.level = 0.99;
  res.point.resize(3);
  res.point << 0.5, 0.1, -0.2;
  res.ci_lower.resize(3);
  res.ci_upper.resize(3);
  res.ci_lower << 0.2, -0.1, -0.4;
  res.ci_upper << 0.9, 0.3, 0.0;
  res.significant = {true, false, false};

  const auto verdicts = test_zero_effect(res);
  REQUIRE(verdicts.size() == 3);
  CHECK(verdicts[0].reject);
  CHECK_FALSE(verdicts[1].reject);
  CHECK_FALSE(verdicts[2].reject);  // boundary zero counts as containing zero
}

TEST_CASE("hill estimator closed forms and invariances") {
  // exact geometric sequence 2^1..2^10, k = 4
  std::vector<double> geometric;
  for (int i = 1; i <= 10; ++i) geometric.push_back(std::pow(2.0, i));
  CHECK(hill_estimator(geometric, 4) ==
        doctest::Approx(2.5 * std::log(2.0)).epsilon(1e-10));

  // exact Pareto(1) quantile grid
  const int n = 10000;
  std::vector<double> pareto(n);
  for (int i = 1; i <= n; ++i) pareto[i - 1] = 1.0 / (1.0 - i / (n + 1.0));
  const double est = hill_estimator(pareto, 500);
  CHECK(est == doctest::Approx(1.0).epsilon(0.1));

  // scale invariance
  std::vector<double> scaled = geometric;
  for (auto& v : scaled) v *= 37.5;
  CHECK(std::abs(hill_estimator(scaled, 4) - hill_estimator(geometric, 4)) < 1e-12);

  // ties produce a zero estimate rather than an error
  const std::vector<double> ties{5.0, 5.0, 5.0, 5.0};
  CHECK(hill_estimator(ties, 2) == 0.0);

  // error paths
  const std::vector<double> few{1.0, -1.0, 0.0};
  CHECK_THROWS_AS(hill_estimator(few, 1), DomainError);  // one positive value
  CHECK_THROWS_AS(hill_estimator(geometric, 0), DomainError);
  CHECK_THROWS_AS(hill_estimator(geometric, 10), DomainError);
}

TEST_CASE("hill estimate recovers the GEV tail index on raw noise") {
  const auto draws = gev_sample(100000, GevParams(0.0, 1.0, 1.2), RngSeed{61});
  const double est = hill_estimator(draws, 5000);
  CHECK(est == doctest::Approx(1.2).epsilon(0.25));
}
