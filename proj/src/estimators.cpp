#include "qlscm/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>

#include "qlscm/errors.hpp"
#include "qlscm/parallel.hpp"

namespace qlscm {

namespace {

// Neumaier compensated sum; keeps aggregation drift below 1e-12 so site
// order and thread count cannot move the reported numbers.
class CompensatedSum {
 public:
  void add(double value) {
    const double t = sum_ + value;
    if (std::abs(sum_) >= std::abs(value)) {
      comp_ += (sum_ - t) + value;
    } else {
      comp_ += (value - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

DesignMatrix site_design(const PanelSite& site) {
  const Eigen::Index m = site.rows();
  const Eigen::Index d = site.x.cols();
  const Eigen::Index k = site.w.cols();
  if (m < d + k + 2)
    throw DataError("site has too few records for estimation (" +
                    std::to_string(m) + " < " + std::to_string(d + k + 2) + ")");
  Eigen::MatrixXd design(m, 1 + d + k);
  design.col(0).setOnes();
  design.middleCols(1, d) = site.x;
  if (k > 0) design.middleCols(1 + d, k) = site.w;
  std::vector<std::string> names;
  names.reserve(1 + d + k);
  names.emplace_back("intercept");
  for (Eigen::Index j = 0; j < d; ++j) names.push_back("x" + std::to_string(j + 1));
  for (Eigen::Index j = 0; j < k; ++j) names.push_back("w" + std::to_string(j + 1));
  return make_design(std::move(design), std::move(names));
}

SiteEffect split_coefficients(const Eigen::VectorXd& coef, Eigen::Index d) {
  SiteEffect eff;
  eff.intercept = coef[0];
  eff.slopes = coef.segment(1, d);
  return eff;
}

struct SiteOutcome {
  std::optional<SiteEffect> effect;
  std::string failure;
};

SpatialEffect aggregate(const PanelDataset& data, std::span<const double> weights,
                        SpatialEffect::Kind kind, double tau,
                        const std::function<SiteEffect(const PanelSite&)>& fit_site) {
  const std::size_t n = data.n_sites();
  std::vector<double> w(n);
  if (weights.empty()) {
    for (std::size_t i = 0; i < n; ++i) w[i] = data.grid().site(i).area;
  } else {
    if (weights.size() != n)
      throw DomainError("spatial aggregation: weight count != site count");
    std::copy(weights.begin(), weights.end(), w.begin());
  }
  for (double v : w)
    if (!(v > 0.0)) throw DomainError("spatial aggregation: weights must be > 0");

  std::vector<SiteOutcome> outcomes(n);
  parallel_for(n, [&](std::size_t i) {
    try {
      outcomes[i].effect = fit_site(data.site(i));
    } catch (const Error& e) {
      outcomes[i].failure = e.what();
    }
  });

  SpatialEffect out;
  out.kind = kind;
  out.tau = tau;
  const int d = data.d();

  std::vector<std::size_t> used;
  for (std::size_t i = 0; i < n; ++i) {
    if (outcomes[i].effect) {
      used.push_back(i);
    } else {
      out.skipped.push_back({data.grid().site(i).id, outcomes[i].failure});
    }
  }
  if (used.empty())
    throw EstimationError("no usable site: every site fit failed or was skipped");

  out.n_used = static_cast<int>(used.size());
  out.site_slopes.resize(out.n_used, d);
  out.weights.reserve(used.size());
  out.site_ids.reserve(used.size());

  CompensatedSum weight_sum;
  CompensatedSum intercept_sum;
  std::vector<CompensatedSum> slope_sums(d);
  for (std::size_t row = 0; row < used.size(); ++row) {
    const std::size_t i = used[row];
    const SiteEffect& eff = *outcomes[i].effect;
    out.site_slopes.row(row) = eff.slopes.transpose();
    out.weights.push_back(w[i]);
    out.site_ids.push_back(data.grid().site(i).id);
    weight_sum.add(w[i]);
    intercept_sum.add(w[i] * eff.intercept);
    for (int j = 0; j < d; ++j) slope_sums[j].add(w[i] * eff.slopes[j]);
  }

  const double total = weight_sum.value();
  out.slopes.resize(d);
  for (int j = 0; j < d; ++j) out.slopes[j] = slope_sums[j].value() / total;
  out.intercept = intercept_sum.value() / total;
  return out;
}

}  // namespace

SiteEffect site_qpe(const PanelSite& site, double tau, const QuantileFitOptions& opts) {
  const DesignMatrix design = site_design(site);
  const QuantileFit fit = fit_quantile(design, site.y, tau, opts);
  if (!fit.converged)
    throw EstimationError("quantile fit did not converge in " +
                          std::to_string(fit.iterations) + " iterations");
  return split_coefficients(fit.coefficients, site.x.cols());
}

SiteEffect site_ace(const PanelSite& site) {
  const DesignMatrix design = site_design(site);
  const OlsFit fit = fit_ols(design, site.y);
  return split_coefficients(fit.coefficients, site.x.cols());
}

SpatialEffect spatial_qpe(const PanelDataset& data, double tau,
                          std::span<const double> weights) {
  if (!(tau > 0.0 && tau < 1.0)) throw DomainError("spatial_qpe: tau must be in (0,1)");
  return aggregate(data, weights, SpatialEffect::Kind::kQpe, tau,
                   [tau](const PanelSite& s) { return site_qpe(s, tau); });
}

SpatialEffect spatial_ace(const PanelDataset& data, std::span<const double> weights) {
  return aggregate(data, weights, SpatialEffect::Kind::kAce, 0.5,
                   [](const PanelSite& s) { return site_ace(s); });
}

RegionMap load_region_map_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open region map '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty region map");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  auto split2 = [](const std::string& s) -> std::pair<std::string, std::string> {
    const auto pos = s.find(',');
    if (pos == std::string::npos) throw ParseError("region map rows need 2 fields");
    return {s.substr(0, pos), s.substr(pos + 1)};
  };

  auto [c1, c2] = split2(line);
  if (c1 != "site_id" || c2 != "region")
    throw SchemaError("region map header must be 'site_id,region'");

  RegionMap map;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto [site, region] = split2(line);
    map[site] = region;
  }
  return map;
}

RegionMap region_map_from_grid(const Grid& grid) {
  RegionMap map;
  for (const auto& s : grid.sites())
    if (s.region) map[s.id] = *s.region;
  return map;
}

RegionReport regional_effects(const PanelDataset& data, const RegionMap& region_map,
                              const std::vector<double>& taus,
                              std::span<const double> weights) {
  RegionReport report;

  std::map<std::string, std::vector<int>> members;
  std::set<std::string> requested;
  for (const auto& [site_id, region] : region_map) {
    requested.insert(region);
    const int idx = data.grid().find(site_id);
    if (idx < 0) {
      report.warnings.push_back("region map references unknown site '" + site_id + "'");
      continue;
    }
    members[region].push_back(idx);
  }
  for (const auto& region : requested)
    if (!members.count(region))
      report.warnings.push_back("region '" + region + "' omitted: no sites in dataset");
  for (std::size_t i = 0; i < data.n_sites(); ++i)
    if (!region_map.count(data.grid().site(i).id)) ++report.unlabeled_sites;

  for (auto& [region, indices] : members) {
    std::sort(indices.begin(), indices.end());
    const PanelDataset subset = data.subset(indices);
    std::vector<double> sub_weights;
    if (!weights.empty()) {
      sub_weights.reserve(indices.size());
      for (int idx : indices) sub_weights.push_back(weights[idx]);
    }
    std::vector<SpatialEffect> effects;
    try {
      for (double tau : taus)
        effects.push_back(spatial_qpe(subset, tau, sub_weights));
      effects.push_back(spatial_ace(subset, sub_weights));
    } catch (const EstimationError& e) {
      report.warnings.push_back("region '" + region + "' omitted: " + e.what());
      continue;
    }
    report.regions.emplace(region, std::move(effects));
  }
  return report;
}

}  // namespace qlscm
