#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "qlscm/errors.hpp"
#include "qlscm/estimators.hpp"
#include "qlscm/gpsim.hpp"
#include "qlscm/rng.hpp"

using namespace qlscm;

namespace {

// site with exact linear outcome y = intercept + slope * x (+ confounder)
PanelSite linear_site(double intercept, double slope, int m, Rng& rng) {
  PanelSite ps;
  ps.times.resize(m);
  std::iota(ps.times.begin(), ps.times.end(), 1);
  ps.x.resize(m, 1);
  ps.w.resize(m, 0);
  ps.y.resize(m);
  for (int t = 0; t < m; ++t) {
    ps.x(t, 0) = rng.normal();
    ps.y[t] = intercept + slope * ps.x(t, 0);
  }
  return ps;
}

PanelDataset two_site_panel(double slope_a, double slope_b, double area_a,
                            double area_b) {
  Rng rng(RngSeed{31});
  std::vector<Site> sites{{"a", {0.0, 0.0}, area_a, std::nullopt},
                          {"b", {1.0, 0.0}, area_b, std::nullopt}};
  std::vector<PanelSite> panel;
  panel.push_back(linear_site(0.0, slope_a, 25, rng));
  panel.push_back(linear_site(0.0, slope_b, 25, rng));
  return PanelDataset(Grid(std::move(sites)), std::move(panel), {"x1"}, {});
}

}  // namespace

TEST_CASE("site_qpe recovers an exact linear model with a confounder") {
  Rng rng(RngSeed{32});
  const int m = 40;
  PanelSite ps;
  ps.times.resize(m);
  std::iota(ps.times.begin(), ps.times.end(), 1);
  ps.x.resize(m, 1);
  ps.w.resize(m, 1);
  ps.y.resize(m);
  for (int t = 0; t < m; ++t) {
    ps.x(t, 0) = rng.normal();
    ps.w(t, 0) = rng.normal();
    ps.y[t] = 3.0 * ps.x(t, 0) + ps.w(t, 0);
  }
  const SiteEffect eff = site_qpe(ps, 0.5);
  CHECK(eff.slopes[0] == doctest::Approx(3.0).epsilon(1e-7));
  CHECK(eff.intercept == doctest::Approx(0.0).epsilon(1e-7));
}

TEST_CASE("confounder cancellation: regression on X with W included") {
  // Y = X + W with W = -X + noise; identified slope on X is 1
  Rng rng(RngSeed{33});
  const int m = 60;
  PanelSite ps;
  ps.times.resize(m);
  std::iota(ps.times.begin(), ps.times.end(), 1);
  ps.x.resize(m, 1);
  ps.w.resize(m, 1);
  ps.y.resize(m);
  for (int t = 0; t < m; ++t) {
    ps.x(t, 0) = rng.normal();
    ps.w(t, 0) = -ps.x(t, 0) + 0.5 * rng.normal();
    ps.y[t] = ps.x(t, 0) + ps.w(t, 0);
  }
  CHECK(site_qpe(ps, 0.5).slopes[0] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(site_ace(ps).slopes[0] == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("example 1 upper-tail slope is positive when H is controlled") {
  const SimOutput sim = gen_example1(8000, RngSeed{34});
  const SiteEffect qr = site_qpe(sim.data.site(0), 0.9);
  CHECK(qr.slopes[0] > 0.05);
  // while the mean-based slope stays near zero
  const SiteEffect ols = site_ace(sim.data.site(0));
  CHECK(std::abs(ols.slopes[0]) < qr.slopes[0]);
}

TEST_CASE("spatial aggregation is the weighted mean of site slopes") {
  const PanelDataset equal = two_site_panel(1.0, 3.0, 1.0, 1.0);
  const SpatialEffect qpe = spatial_qpe(equal, 0.5);
  CHECK(qpe.slopes[0] == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(qpe.n_used == 2);

  const PanelDataset weighted = two_site_panel(1.0, 3.0, 1.0, 3.0);
  const SpatialEffect ace = spatial_ace(weighted);
  CHECK(ace.slopes[0] == doctest::Approx(2.5).epsilon(1e-8));

  // explicit weights override the grid areas
  const std::vector<double> w{3.0, 1.0};
  CHECK(spatial_ace(equal, w).slopes[0] == doctest::Approx(1.5).epsilon(1e-8));
}

TEST_CASE("reported slopes recompute from site slopes and weights") {
  const SimOutput sim = gen_case2(make_regular_grid(5, 4), 20, RngSeed{35});
  const SpatialEffect eff = spatial_qpe(sim.data, 0.5);
  double num = 0.0, den = 0.0;
  for (int i = 0; i < eff.n_used; ++i) {
    num += eff.weights[i] * eff.site_slopes(i, 0);
    den += eff.weights[i];
  }
  CHECK(std::abs(eff.slopes[0] - num / den) < 1e-12);
}

TEST_CASE("site order and weight scaling do not move the estimate") {
  const SimOutput sim = gen_case2(make_regular_grid(5, 4), 25, RngSeed{36});
  const SpatialEffect base = spatial_qpe(sim.data, 0.5);

  // reversed site order
  std::vector<int> order(sim.data.n_sites());
  std::iota(order.begin(), order.end(), 0);
  std::reverse(order.begin(), order.end());
  const SpatialEffect reversed = spatial_qpe(sim.data.subset(order), 0.5);
  CHECK(std::abs(base.slopes[0] - reversed.slopes[0]) <= 1e-12);

  // scaled weights
  std::vector<double> w(sim.data.n_sites(), 7.5);
  const SpatialEffect scaled = spatial_qpe(sim.data, 0.5, w);
  CHECK(std::abs(base.slopes[0] - scaled.slopes[0]) <= 1e-12);
}

TEST_CASE("sites with degenerate designs are skipped and reported") {
  Rng rng(RngSeed{37});
  std::vector<Site> sites{{"good", {0.0, 0.0}, 1.0, std::nullopt},
                          {"flat", {1.0, 0.0}, 1.0, std::nullopt}};
  std::vector<PanelSite> panel;
  panel.push_back(linear_site(0.5, 2.0, 25, rng));
  PanelSite flat = linear_site(0.5, 2.0, 25, rng);
  flat.x.setConstant(1.0);  // collinear with the intercept
  panel.push_back(std::move(flat));
  const PanelDataset data(Grid(std::move(sites)), std::move(panel), {"x1"}, {});

  const SpatialEffect eff = spatial_ace(data);
  CHECK(eff.n_used == 1);
  REQUIRE(eff.skipped.size() == 1);
  CHECK(eff.skipped[0].site_id == "flat");
  CHECK(eff.slopes[0] == doctest::Approx(2.0).epsilon(1e-8));

  // every site unusable -> estimation error
  std::vector<Site> only{{"flat", {0.0, 0.0}, 1.0, std::nullopt}};
  std::vector<PanelSite> bad;
  PanelSite f2 = linear_site(0.5, 2.0, 25, rng);
  f2.x.setConstant(1.0);
  bad.push_back(std::move(f2));
  const PanelDataset broken(Grid(std::move(only)), std::move(bad), {"x1"}, {});
  CHECK_THROWS_AS(spatial_ace(broken), EstimationError);
}

TEST_CASE("too-short sites are skipped via the degrees-of-freedom floor") {
  Rng rng(RngSeed{38});
  std::vector<Site> sites{{"long", {0.0, 0.0}, 1.0, std::nullopt},
                          {"short", {1.0, 0.0}, 1.0, std::nullopt}};
  std::vector<PanelSite> panel;
  panel.push_back(linear_site(0.0, 1.0, 25, rng));
  panel.push_back(linear_site(0.0, 9.0, 2, rng));  // below d+k+2 = 3
  const PanelDataset data(Grid(std::move(sites)), std::move(panel), {"x1"}, {});
  const SpatialEffect eff = spatial_qpe(data, 0.5);
  CHECK(eff.n_used == 1);
  CHECK(eff.skipped.size() == 1);
  CHECK(eff.slopes[0] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("regional effects: partition identities") {
  const SimOutput sim = gen_case2(make_regular_grid(4, 3), 20, RngSeed{39});
  const std::vector<double> taus{0.5};

  // one region holding every site equals the global estimate
  RegionMap all;
  for (const auto& s : sim.data.grid().sites()) all[s.id] = "everything";
  const RegionReport one = regional_effects(sim.data, all, taus);
  REQUIRE(one.regions.count("everything") == 1);
  const SpatialEffect global = spatial_qpe(sim.data, 0.5);
  CHECK(one.regions.at("everything")[0].slopes[0] ==
        doctest::Approx(global.slopes[0]).epsilon(1e-12));
  CHECK(one.unlabeled_sites == 0);

  // two disjoint halves equal their subset estimates
  RegionMap halves;
  const auto& sites = sim.data.grid().sites();
  for (std::size_t i = 0; i < sites.size(); ++i)
    halves[sites[i].id] = i < sites.size() / 2 ? "left" : "right";
  const RegionReport two = regional_effects(sim.data, halves, taus);
  std::vector<int> left_idx;
  for (std::size_t i = 0; i < sites.size() / 2; ++i) left_idx.push_back(i);
  const SpatialEffect left = spatial_qpe(sim.data.subset(left_idx), 0.5);
  CHECK(two.regions.at("left")[0].slopes[0] ==
        doctest::Approx(left.slopes[0]).epsilon(1e-12));

  // unknown sites and empty regions produce warnings, not failures
  RegionMap ghost;
  ghost["no_such_site"] = "ghost";
  const RegionReport g = regional_effects(sim.data, ghost, taus);
  CHECK(g.regions.empty());
  CHECK(g.warnings.size() == 2);  // unknown site + omitted region
  CHECK(g.unlabeled_sites == static_cast<int>(sim.data.n_sites()));
}

TEST_CASE("region map csv loader") {
  const auto path = std::filesystem::temp_directory_path() / "qlscm_regions.csv";
  {
    std::ofstream out(path);
    out << "site_id,region\na,west\nb,east\n";
  }
  const RegionMap map = load_region_map_csv(path);
  CHECK(map.at("a") == "west");
  CHECK(map.at("b") == "east");
  std::filesystem::remove(path);
}
