#pragma once

#include <Eigen/Core>
#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace qlscm {

/// One grid cell: identifier, center coordinates (x/longitude, y/latitude),
/// cell area and an optional region label.
struct Site {
  std::string id;
  std::array<double, 2> coords{0.0, 0.0};
  double area = 1.0;
  std::optional<std::string> region;
};

/// Lattice metadata for regular grids: coords must equal
/// origin + index * spacing (within 1e-9) along each axis.
struct LatticeSpec {
  std::array<double, 2> origin{0.0, 0.0};
  std::array<double, 2> spacing{1.0, 1.0};
};

/// Ordered collection of sites with unique ids, pairwise-distinct coords
/// and strictly positive areas. Immutable after construction.
class Grid {
 public:
  Grid() = default;
  explicit Grid(std::vector<Site> sites,
                std::optional<LatticeSpec> lattice = std::nullopt);

  const std::vector<Site>& sites() const { return sites_; }
  std::size_t size() const { return sites_.size(); }
  const Site& site(std::size_t i) const { return sites_[i]; }
  const std::optional<LatticeSpec>& lattice() const { return lattice_; }

  /// Index of a site id, or -1.
  int find(const std::string& id) const;

 private:
  std::vector<Site> sites_;
  std::optional<LatticeSpec> lattice_;
};

/// Integer lattice (1..nx) x (1..ny), unit spacing and unit areas; the
/// geometry used by all simulation cases.
Grid make_regular_grid(int nx, int ny);

/// Per-site time series block. x is m x d, w is m x k (k may be 0).
struct PanelSite {
  std::vector<int> times;
  Eigen::VectorXd y;
  Eigen::MatrixXd x;
  Eigen::MatrixXd w;

  Eigen::Index rows() const { return y.size(); }
};

/// Gridded spatio-temporal panel: one PanelSite per grid site, time-sorted
/// within site. Immutable after construction; safe to share across threads.
class PanelDataset {
 public:
  PanelDataset() = default;
  PanelDataset(Grid grid, std::vector<PanelSite> sites,
               std::vector<std::string> exposure_names,
               std::vector<std::string> confounder_names);

  const Grid& grid() const { return grid_; }
  std::size_t n_sites() const { return sites_.size(); }
  const PanelSite& site(std::size_t i) const { return sites_[i]; }
  const std::vector<PanelSite>& sites() const { return sites_; }
  int d() const { return d_; }
  int k() const { return k_; }
  const std::vector<std::string>& exposure_names() const { return exposure_names_; }
  const std::vector<std::string>& confounder_names() const { return confounder_names_; }

  /// Minimum records per site required for estimation: intercept + d + k
  /// coefficients plus one residual degree of freedom.
  int min_records() const { return d_ + k_ + 2; }

  /// Copy restricted to the given site indices (order preserved).
  PanelDataset subset(const std::vector<int>& site_indices) const;

  /// Copy keeping only records whose time's month is in `months`; times are
  /// interpreted as YYYYMMDD or YYYYMM integers, month = (t/100) % 100.
  PanelDataset filter_months(const std::vector<int>& months) const;

  bool equals(const PanelDataset& other) const;

 private:
  Grid grid_;
  std::vector<PanelSite> sites_;
  std::vector<std::string> exposure_names_;
  std::vector<std::string> confounder_names_;
  int d_ = 0;
  int k_ = 0;
};

/// Column-name mapping for CSV ingestion. Defaults follow the canonical
/// layout: site_id, lon, lat, time, y, x1..xd, w1..wk [, area] [, region].
struct CsvSchema {
  std::string site_id = "site_id";
  std::string lon = "lon";
  std::string lat = "lat";
  std::string time = "time";
  std::string outcome = "y";
  std::vector<std::string> exposures;    // empty: auto-detect x1..xd
  std::vector<std::string> confounders;  // empty: auto-detect w1..wk
  std::optional<std::string> area = std::nullopt;    // default: "area" if present
  std::optional<std::string> region = std::nullopt;  // default: "region" if present
};

/// Reads a long/tidy CSV (one row per (site,time)). Rows are grouped by
/// site and time-sorted. Empty numeric cells become NaN for validate_panel
/// to deal with. Areas default to 1.0 when no area column is mapped.
PanelDataset load_panel_csv(const std::filesystem::path& path,
                            const CsvSchema& schema = {});

/// Writes the canonical layout with shortest round-trip float formatting;
/// load_panel_csv(write_panel_csv(ds)) reproduces ds exactly.
void write_panel_csv(const PanelDataset& data, const std::filesystem::path& path);

enum class MissingPolicy { kDrop, kError };

struct ValidationReport {
  // (site_id, time) records removed for non-finite values.
  std::vector<std::pair<std::string, int>> dropped_records;
  // sites removed for falling below the degrees-of-freedom floor.
  std::vector<std::string> dropped_sites;

  bool clean() const { return dropped_records.empty() && dropped_sites.empty(); }
};

/// Under kDrop, removes records with non-finite entries, then removes sites
/// with fewer than d+k+2 remaining records. Under kError, throws
/// ValidationError at the first non-finite value. Idempotent.
std::pair<PanelDataset, ValidationReport> validate_panel(
    const PanelDataset& data, MissingPolicy policy = MissingPolicy::kDrop);

enum class AreaScheme { kUniform, kCosLatitude };

/// Aggregation weights per site. kUniform: all 1. kCosLatitude: proportional
/// to cos(latitude), normalized to mean 1; requires |lat| < 90.
std::vector<double> cell_areas(const Grid& grid, AreaScheme scheme);

}  // namespace qlscm
