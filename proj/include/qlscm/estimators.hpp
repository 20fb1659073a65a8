#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "qlscm/qreg.hpp"
#include "qlscm/stgrid.hpp"

namespace qlscm {

/// One site's fitted marginal effect: exposure slope block plus intercept.
struct SiteEffect {
  Eigen::VectorXd slopes;  // d entries
  double intercept = 0.0;
};

struct SkippedSite {
  std::string site_id;
  std::string reason;
};

/// Area-weighted aggregate of per-site marginal effects. slopes is exactly
/// the weighted mean of site_slopes rows; the intercept average carries no
/// causal meaning and is reported for reference only.
struct SpatialEffect {
  enum class Kind { kQpe, kAce };
  Kind kind = Kind::kQpe;
  double tau = 0.5;  // meaningful for kQpe only
  Eigen::VectorXd slopes;
  double intercept = 0.0;
  Eigen::MatrixXd site_slopes;        // n_used x d
  std::vector<double> weights;        // n_used, all > 0
  std::vector<std::string> site_ids;  // n_used
  int n_used = 0;
  std::vector<SkippedSite> skipped;
};

/// Quantile-regression marginal effect at one site: fits [1, X, W] and
/// returns the exposure-slope block (the x-derivative of the linear fit).
/// Throws on rank deficiency or too few records.
SiteEffect site_qpe(const PanelSite& site, double tau,
                    const QuantileFitOptions& opts = {});

/// Least-squares analogue of site_qpe.
SiteEffect site_ace(const PanelSite& site);

/// Area-weighted spatial aggregate of site_qpe over all usable sites.
/// `weights`: one positive weight per site; empty uses the grid cell areas.
/// Sites whose fits fail are skipped and reported, never imputed.
SpatialEffect spatial_qpe(const PanelDataset& data, double tau,
                          std::span<const double> weights = {});

/// Mean-based baseline: spatial aggregate of per-site OLS slopes.
SpatialEffect spatial_ace(const PanelDataset& data,
                          std::span<const double> weights = {});

using RegionMap = std::map<std::string, std::string>;  // site_id -> region

/// CSV with columns site_id, region.
RegionMap load_region_map_csv(const std::filesystem::path& path);

/// Region labels carried by the grid's sites.
RegionMap region_map_from_grid(const Grid& grid);

struct RegionReport {
  // region label -> QPE per requested tau (in order) followed by the ACE
  std::map<std::string, std::vector<SpatialEffect>> regions;
  int unlabeled_sites = 0;
  std::vector<std::string> warnings;
};

/// Runs spatial_qpe per tau and spatial_ace within each region's site subset
/// independently. Regions with no usable site are omitted with a warning.
RegionReport regional_effects(const PanelDataset& data, const RegionMap& region_map,
                              const std::vector<double>& taus,
                              std::span<const double> weights = {});

}  // namespace qlscm
