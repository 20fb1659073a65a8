#include "qlscm/inference.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "qlscm/errors.hpp"
#include "qlscm/parallel.hpp"
#include "qlscm/quantiles.hpp"

namespace qlscm {

std::string EstimatorSpec::label() const {
  if (kind == Kind::kAce) return "ace";
  std::ostringstream os;
  os << "qpe(" << tau << ")";
  return os.str();
}

int geometric_block_length(double expected_block, Rng& rng) {
  if (!(expected_block >= 1.0))
    throw DomainError("geometric_block_length: expected_block must be >= 1");
  if (expected_block == 1.0) return 1;
  const double p = 1.0 / expected_block;
  const double u = rng.next_double();
  return 1 + static_cast<int>(std::floor(std::log(u) / std::log1p(-p)));
}

std::vector<int> stationary_bootstrap_indices(int m, double expected_block, Rng& rng) {
  if (m < 2) throw DomainError("stationary_bootstrap_indices: m must be >= 2");
  std::vector<int> out;
  out.reserve(m);
  while (static_cast<int>(out.size()) < m) {
    const int start = static_cast<int>(rng.next_double() * m);
    const int len = geometric_block_length(expected_block, rng);
    for (int j = 0; j < len && static_cast<int>(out.size()) < m; ++j)
      out.push_back((start + j) % m);
  }
  return out;
}

std::vector<int> stationary_bootstrap_indices(int m, double expected_block, RngSeed seed) {
  Rng rng(seed);
  return stationary_bootstrap_indices(m, expected_block, rng);
}

namespace {

PanelSite resample_site(const PanelSite& site, const std::vector<int>& indices) {
  PanelSite out;
  const auto m = static_cast<Eigen::Index>(indices.size());
  out.times.resize(indices.size());
  out.y.resize(m);
  out.x.resize(m, site.x.cols());
  out.w.resize(m, site.w.cols());
  for (Eigen::Index r = 0; r < m; ++r) {
    const int idx = indices[r];
    out.times[r] = static_cast<int>(r) + 1;  // resampled series gets fresh clock
    out.y[r] = site.y[idx];
    out.x.row(r) = site.x.row(idx);
    out.w.row(r) = site.w.row(idx);
  }
  return out;
}

Eigen::VectorXd run_estimator(const PanelDataset& data, const EstimatorSpec& est,
                              std::span<const double> weights) {
  const SpatialEffect eff = est.kind == EstimatorSpec::Kind::kQpe
                                ? spatial_qpe(data, est.tau, weights)
                                : spatial_ace(data, weights);
  return eff.slopes;
}

}  // namespace

BootstrapResult bootstrap_effect(const PanelDataset& data, const EstimatorSpec& estimator,
                                 const BootstrapSpec& spec,
                                 std::span<const double> weights) {
  if (spec.replicates < 2) throw DomainError("bootstrap_effect: replicates must be >= 2");
  if (!(spec.level > 0.0 && spec.level < 1.0))
    throw DomainError("bootstrap_effect: level must be in (0,1)");
  if (!(spec.expected_block >= 1.0))
    throw DomainError("bootstrap_effect: expected_block must be >= 1");
  for (std::size_t i = 0; i < data.n_sites(); ++i)
    if (data.site(i).rows() < 2)
      throw DataError("bootstrap_effect: site '" + data.grid().site(i).id +
                      "' has fewer than 2 records");

  BootstrapResult result;
  result.level = spec.level;
  result.point = run_estimator(data, estimator, weights);
  const int d = static_cast<int>(result.point.size());
  const int wanted = spec.replicates;

  Rng master(spec.seed);
  auto replicate_estimate = [&](std::uint64_t attempt) -> std::optional<Eigen::VectorXd> {
    Rng attempt_rng = master.split(attempt);
    std::vector<PanelSite> resampled(data.n_sites());
    for (std::size_t i = 0; i < data.n_sites(); ++i) {
      Rng site_rng = attempt_rng.split(i);
      const auto indices = stationary_bootstrap_indices(
          static_cast<int>(data.site(i).rows()), spec.expected_block, site_rng);
      resampled[i] = resample_site(data.site(i), indices);
    }
    PanelDataset panel(data.grid(), std::move(resampled), data.exposure_names(),
                       data.confounder_names());
    try {
      return run_estimator(panel, estimator, weights);
    } catch (const Error&) {
      return std::nullopt;
    }
  };

  // Attempts are numbered deterministically; we keep the first `wanted`
  // successes in attempt order, so thread count cannot change the result.
  std::vector<Eigen::VectorXd> kept;
  kept.reserve(wanted);
  const std::uint64_t budget = 10ULL * static_cast<std::uint64_t>(wanted);
  std::uint64_t next_attempt = 0;
  while (static_cast<int>(kept.size()) < wanted && next_attempt < budget) {
    const std::uint64_t missing = wanted - kept.size();
    const std::uint64_t batch = std::min<std::uint64_t>(missing, budget - next_attempt);
    std::vector<std::optional<Eigen::VectorXd>> outcomes(batch);
    parallel_for(batch, [&](std::size_t j) {
      outcomes[j] = replicate_estimate(next_attempt + j);
    });
    for (auto& o : outcomes)
      if (o && static_cast<int>(kept.size()) < wanted) kept.push_back(std::move(*o));
    next_attempt += batch;
  }
  if (static_cast<int>(kept.size()) < wanted)
    throw EstimationError("bootstrap_effect: exceeded retry budget (" +
                          std::to_string(budget) + " attempts) with only " +
                          std::to_string(kept.size()) + " usable replicates");

  result.estimates.resize(wanted, d);
  for (int r = 0; r < wanted; ++r) result.estimates.row(r) = kept[r].transpose();

  const double alpha = 1.0 - spec.level;
  result.ci_lower.resize(d);
  result.ci_upper.resize(d);
  result.significant.resize(d);
  for (int j = 0; j < d; ++j) {
    std::vector<double> column(wanted);
    for (int r = 0; r < wanted; ++r) column[r] = result.estimates(r, j);
    result.ci_lower[j] = empirical_quantile(std::span<double>(column), alpha / 2.0);
    result.ci_upper[j] = empirical_quantile(std::span<double>(column), 1.0 - alpha / 2.0);
    result.significant[j] = result.ci_upper[j] < 0.0 || result.ci_lower[j] > 0.0;

    std::ostringstream tag;
    tag << "exposure " << j + 1;
    if (result.ci_lower[j] == result.ci_upper[j])
      result.warnings.push_back(tag.str() + ": zero-width confidence interval "
                                            "(degenerate replicate distribution)");
    if (result.point[j] < result.ci_lower[j] || result.point[j] > result.ci_upper[j])
      result.warnings.push_back(tag.str() + ": point estimate outside the percentile "
                                            "interval (skewed replicate distribution)");
  }
  return result;
}

std::vector<ZeroEffectVerdict> test_zero_effect(const BootstrapResult& result) {
  std::vector<ZeroEffectVerdict> verdicts;
  verdicts.reserve(result.significant.size());
  for (std::size_t j = 0; j < result.significant.size(); ++j) {
    ZeroEffectVerdict v;
    v.ci_lower = result.ci_lower[static_cast<Eigen::Index>(j)];
    v.ci_upper = result.ci_upper[static_cast<Eigen::Index>(j)];
    v.level = result.level;
    v.reject = v.ci_upper < 0.0 || v.ci_lower > 0.0;
    verdicts.push_back(v);
  }
  return verdicts;
}

double hill_estimator(std::span<const double> data, int k) {
  if (k < 1) throw DomainError("hill_estimator: k must be >= 1");
  std::vector<double> positive;
  positive.reserve(data.size());
  for (double v : data)
    if (v > 0.0) positive.push_back(v);
  if (static_cast<int>(positive.size()) < k + 1)
    throw DomainError("hill_estimator: needs more than k strictly positive values");

  std::partial_sort(positive.begin(), positive.begin() + k + 1, positive.end(),
                    std::greater<double>());
  const double threshold = positive[k];  // the (k+1)-th largest
  double sum = 0.0;
  for (int i = 0; i < k; ++i) sum += std::log(positive[i] / threshold);
  return sum / static_cast<double>(k);
}

}  // namespace qlscm
