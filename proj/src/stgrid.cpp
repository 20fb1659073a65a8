#include "qlscm/stgrid.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "qlscm/errors.hpp"
#include "qlscm/format.hpp"

namespace qlscm {

namespace {

bool same_value(double a, double b) {
  return a == b || (std::isnan(a) && std::isnan(b));
}

double parse_double(std::string_view cell, std::size_t row, const std::string& col) {
  if (cell.empty()) return std::numeric_limits<double>::quiet_NaN();
  double v;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size())
    throw ParseError("row " + std::to_string(row) + ", column '" + col +
                     "': cannot parse '" + std::string(cell) + "' as a number");
  return v;
}

int parse_int(std::string_view cell, std::size_t row, const std::string& col) {
  int v;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size())
    throw ParseError("row " + std::to_string(row) + ", column '" + col +
                     "': cannot parse '" + std::string(cell) + "' as an integer");
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

}  // namespace

Grid::Grid(std::vector<Site> sites, std::optional<LatticeSpec> lattice)
    : sites_(std::move(sites)), lattice_(lattice) {
  std::unordered_set<std::string> ids;
  for (const auto& s : sites_) {
    if (!(s.area > 0.0))
      throw DataError("Grid: site '" + s.id + "' has non-positive area");
    if (!ids.insert(s.id).second)
      throw DataError("Grid: duplicate site id '" + s.id + "'");
  }
  std::vector<std::size_t> order(sites_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sites_[a].coords < sites_[b].coords;
  });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (sites_[order[i - 1]].coords == sites_[order[i]].coords)
      throw DataError("Grid: sites '" + sites_[order[i - 1]].id + "' and '" +
                      sites_[order[i]].id + "' share coordinates");
  }
  if (lattice_) {
    for (const auto& s : sites_) {
      for (int axis = 0; axis < 2; ++axis) {
        const double r =
            (s.coords[axis] - lattice_->origin[axis]) / lattice_->spacing[axis];
        const double snapped =
            lattice_->origin[axis] + std::round(r) * lattice_->spacing[axis];
        if (std::abs(s.coords[axis] - snapped) > 1e-9)
          throw DataError("Grid: site '" + s.id + "' is off the declared lattice");
      }
    }
  }
}

int Grid::find(const std::string& id) const {
  for (std::size_t i = 0; i < sites_.size(); ++i)
    if (sites_[i].id == id) return static_cast<int>(i);
  return -1;
}

Grid make_regular_grid(int nx, int ny) {
  if (nx < 1 || ny < 1) throw DomainError("make_regular_grid: dimensions must be >= 1");
  std::vector<Site> sites;
  sites.reserve(static_cast<std::size_t>(nx) * ny);
  for (int i = 1; i <= nx; ++i) {
    for (int j = 1; j <= ny; ++j) {
      Site s;
      s.id = "s" + std::to_string(i) + "_" + std::to_string(j);
      s.coords = {static_cast<double>(i), static_cast<double>(j)};
      s.area = 1.0;
      sites.push_back(std::move(s));
    }
  }
  return Grid(std::move(sites), LatticeSpec{{1.0, 1.0}, {1.0, 1.0}});
}

PanelDataset::PanelDataset(Grid grid, std::vector<PanelSite> sites,
                           std::vector<std::string> exposure_names,
                           std::vector<std::string> confounder_names)
    : grid_(std::move(grid)),
      sites_(std::move(sites)),
      exposure_names_(std::move(exposure_names)),
      confounder_names_(std::move(confounder_names)),
      d_(static_cast<int>(exposure_names_.size())),
      k_(static_cast<int>(confounder_names_.size())) {
  if (sites_.size() != grid_.size())
    throw DataError("PanelDataset: one PanelSite per grid site required");
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    const auto& ps = sites_[i];
    const auto m = static_cast<Eigen::Index>(ps.times.size());
    if (ps.y.size() != m || ps.x.rows() != m || ps.w.rows() != m)
      throw DataError("PanelDataset: series length mismatch at site '" +
                      grid_.site(i).id + "'");
    if (ps.x.cols() != d_ || ps.w.cols() != k_)
      throw DataError("PanelDataset: column count mismatch at site '" +
                      grid_.site(i).id + "'");
    for (std::size_t t = 1; t < ps.times.size(); ++t) {
      if (ps.times[t] <= ps.times[t - 1])
        throw DuplicationError("PanelDataset: times not strictly increasing at site '" +
                               grid_.site(i).id + "'");
    }
  }
}

PanelDataset PanelDataset::subset(const std::vector<int>& site_indices) const {
  std::vector<Site> gsites;
  std::vector<PanelSite> psites;
  gsites.reserve(site_indices.size());
  psites.reserve(site_indices.size());
  for (int idx : site_indices) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= sites_.size())
      throw DomainError("PanelDataset::subset: site index out of range");
    gsites.push_back(grid_.site(idx));
    psites.push_back(sites_[idx]);
  }
  return PanelDataset(Grid(std::move(gsites)), std::move(psites), exposure_names_,
                      confounder_names_);
}

PanelDataset PanelDataset::filter_months(const std::vector<int>& months) const {
  auto keep_month = [&](int t) {
    const int month = (t / 100) % 100;
    return std::find(months.begin(), months.end(), month) != months.end();
  };
  std::vector<PanelSite> out(sites_.size());
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    const auto& ps = sites_[i];
    std::vector<Eigen::Index> keep;
    for (Eigen::Index t = 0; t < ps.rows(); ++t)
      if (keep_month(ps.times[t])) keep.push_back(t);
    PanelSite ns;
    ns.times.reserve(keep.size());
    ns.y.resize(keep.size());
    ns.x.resize(keep.size(), d_);
    ns.w.resize(keep.size(), k_);
    for (std::size_t r = 0; r < keep.size(); ++r) {
      ns.times.push_back(ps.times[keep[r]]);
      ns.y[r] = ps.y[keep[r]];
      ns.x.row(r) = ps.x.row(keep[r]);
      ns.w.row(r) = ps.w.row(keep[r]);
    }
    out[i] = std::move(ns);
  }
  return PanelDataset(grid_, std::move(out), exposure_names_, confounder_names_);
}

bool PanelDataset::equals(const PanelDataset& other) const {
  if (n_sites() != other.n_sites() || d_ != other.d_ || k_ != other.k_) return false;
  if (exposure_names_ != other.exposure_names_) return false;
  if (confounder_names_ != other.confounder_names_) return false;
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    const Site& ga = grid_.site(i);
    const Site& gb = other.grid_.site(i);
    if (ga.id != gb.id || ga.coords != gb.coords || ga.area != gb.area ||
        ga.region != gb.region)
      return false;
    const auto& a = sites_[i];
    const auto& b = other.sites_[i];
    if (a.times != b.times) return false;
    for (Eigen::Index t = 0; t < a.rows(); ++t) {
      if (!same_value(a.y[t], b.y[t])) return false;
      for (int j = 0; j < d_; ++j)
        if (!same_value(a.x(t, j), b.x(t, j))) return false;
      for (int j = 0; j < k_; ++j)
        if (!same_value(a.w(t, j), b.w(t, j))) return false;
    }
  }
  return true;
}

namespace {

struct ColumnIndex {
  int site_id, lon, lat, time;
  int outcome;
  std::vector<int> exposures;
  std::vector<int> confounders;
  int area = -1;    // -1: absent
  int region = -1;
  std::vector<std::string> exposure_names;
  std::vector<std::string> confounder_names;
};

int require_column(const std::unordered_map<std::string, int>& header,
                   const std::string& name) {
  auto it = header.find(name);
  if (it == header.end())
    throw SchemaError("missing required column '" + name + "'");
  return it->second;
}

ColumnIndex resolve_columns(const std::vector<std::string>& header_fields,
                            const CsvSchema& schema) {
  std::unordered_map<std::string, int> header;
  for (std::size_t i = 0; i < header_fields.size(); ++i)
    header.emplace(header_fields[i], static_cast<int>(i));

  ColumnIndex cols;
  cols.site_id = require_column(header, schema.site_id);
  cols.lon = require_column(header, schema.lon);
  cols.lat = require_column(header, schema.lat);
  cols.time = require_column(header, schema.time);
  cols.outcome = require_column(header, schema.outcome);

  if (!schema.exposures.empty()) {
    for (const auto& name : schema.exposures) {
      cols.exposures.push_back(require_column(header, name));
      cols.exposure_names.push_back(name);
    }
  } else {
    for (int j = 1;; ++j) {
      const std::string name = "x" + std::to_string(j);
      auto it = header.find(name);
      if (it == header.end()) break;
      cols.exposures.push_back(it->second);
      cols.exposure_names.push_back(name);
    }
  }
  if (!schema.confounders.empty()) {
    for (const auto& name : schema.confounders) {
      cols.confounders.push_back(require_column(header, name));
      cols.confounder_names.push_back(name);
    }
  } else {
    for (int j = 1;; ++j) {
      const std::string name = "w" + std::to_string(j);
      auto it = header.find(name);
      if (it == header.end()) break;
      cols.confounders.push_back(it->second);
      cols.confounder_names.push_back(name);
    }
  }

  if (schema.area) {
    cols.area = require_column(header, *schema.area);
  } else if (auto it = header.find("area"); it != header.end()) {
    cols.area = it->second;
  }
  if (schema.region) {
    cols.region = require_column(header, *schema.region);
  } else if (auto it = header.find("region"); it != header.end()) {
    cols.region = it->second;
  }
  return cols;
}

struct RawRecord {
  int time;
  double y;
  std::vector<double> x;
  std::vector<double> w;
};

}  // namespace

PanelDataset load_panel_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty file '" + path.string() + "'");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const ColumnIndex cols = resolve_columns(split_csv_line(line), schema);
  const std::size_t n_fields = split_csv_line(line).size();

  std::vector<Site> site_order;
  std::unordered_map<std::string, std::size_t> site_index;
  std::vector<std::vector<RawRecord>> records;

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != n_fields)
      throw ParseError("row " + std::to_string(row) + ": expected " +
                       std::to_string(n_fields) + " fields, got " +
                       std::to_string(fields.size()));

    Site s;
    s.id = fields[cols.site_id];
    s.coords = {parse_double(fields[cols.lon], row, schema.lon),
                parse_double(fields[cols.lat], row, schema.lat)};
    if (cols.area >= 0) s.area = parse_double(fields[cols.area], row, "area");
    if (cols.region >= 0 && !fields[cols.region].empty())
      s.region = fields[cols.region];

    RawRecord rec;
    rec.time = parse_int(fields[cols.time], row, schema.time);
    rec.y = parse_double(fields[cols.outcome], row, schema.outcome);
    rec.x.reserve(cols.exposures.size());
    for (std::size_t j = 0; j < cols.exposures.size(); ++j)
      rec.x.push_back(parse_double(fields[cols.exposures[j]], row, cols.exposure_names[j]));
    rec.w.reserve(cols.confounders.size());
    for (std::size_t j = 0; j < cols.confounders.size(); ++j)
      rec.w.push_back(
          parse_double(fields[cols.confounders[j]], row, cols.confounder_names[j]));

    auto [it, inserted] = site_index.emplace(s.id, site_order.size());
    if (inserted) {
      site_order.push_back(s);
      records.emplace_back();
    } else {
      const Site& seen = site_order[it->second];
      if (seen.coords != s.coords)
        throw ParseError("row " + std::to_string(row) + ": site '" + s.id +
                         "' changes coordinates");
    }
    records[it->second].push_back(std::move(rec));
  }

  std::vector<PanelSite> panel(site_order.size());
  const int d = static_cast<int>(cols.exposures.size());
  const int k = static_cast<int>(cols.confounders.size());
  for (std::size_t i = 0; i < site_order.size(); ++i) {
    auto& recs = records[i];
    std::stable_sort(recs.begin(), recs.end(),
                     [](const RawRecord& a, const RawRecord& b) { return a.time < b.time; });
    for (std::size_t t = 1; t < recs.size(); ++t) {
      if (recs[t].time == recs[t - 1].time)
        throw DuplicationError("duplicate record for site '" + site_order[i].id +
                               "' at time " + std::to_string(recs[t].time));
    }
    PanelSite ps;
    const auto m = static_cast<Eigen::Index>(recs.size());
    ps.times.reserve(recs.size());
    ps.y.resize(m);
    ps.x.resize(m, d);
    ps.w.resize(m, k);
    for (Eigen::Index t = 0; t < m; ++t) {
      ps.times.push_back(recs[t].time);
      ps.y[t] = recs[t].y;
      for (int j = 0; j < d; ++j) ps.x(t, j) = recs[t].x[j];
      for (int j = 0; j < k; ++j) ps.w(t, j) = recs[t].w[j];
    }
    panel[i] = std::move(ps);
  }

  return PanelDataset(Grid(std::move(site_order)), std::move(panel),
                      cols.exposure_names, cols.confounder_names);
}

void write_panel_csv(const PanelDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");

  out << "site_id,lon,lat,time,y";
  for (const auto& name : data.exposure_names()) out << ',' << name;
  for (const auto& name : data.confounder_names()) out << ',' << name;
  out << ",area,region\n";

  for (std::size_t i = 0; i < data.n_sites(); ++i) {
    const Site& s = data.grid().site(i);
    const PanelSite& ps = data.site(i);
    for (Eigen::Index t = 0; t < ps.rows(); ++t) {
      out << s.id << ',' << format_double(s.coords[0]) << ','
          << format_double(s.coords[1]) << ',' << ps.times[t] << ','
          << format_double(ps.y[t]);
      for (int j = 0; j < data.d(); ++j) out << ',' << format_double(ps.x(t, j));
      for (int j = 0; j < data.k(); ++j) out << ',' << format_double(ps.w(t, j));
      out << ',' << format_double(s.area) << ',' << (s.region ? *s.region : "");
      out << '\n';
    }
  }
}

std::pair<PanelDataset, ValidationReport> validate_panel(const PanelDataset& data,
                                                         MissingPolicy policy) {
  ValidationReport report;
  std::vector<Site> keep_sites;
  std::vector<PanelSite> keep_panel;

  for (std::size_t i = 0; i < data.n_sites(); ++i) {
    const Site& s = data.grid().site(i);
    const PanelSite& ps = data.site(i);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index t = 0; t < ps.rows(); ++t) {
      bool finite = std::isfinite(ps.y[t]);
      for (int j = 0; finite && j < data.d(); ++j) finite = std::isfinite(ps.x(t, j));
      for (int j = 0; finite && j < data.k(); ++j) finite = std::isfinite(ps.w(t, j));
      if (finite) {
        keep.push_back(t);
      } else {
        if (policy == MissingPolicy::kError)
          throw ValidationError("non-finite value at site '" + s.id + "', time " +
                                std::to_string(ps.times[t]));
        report.dropped_records.emplace_back(s.id, ps.times[t]);
      }
    }
    if (static_cast<int>(keep.size()) < data.min_records()) {
      report.dropped_sites.push_back(s.id);
      continue;
    }
    if (keep.size() == static_cast<std::size_t>(ps.rows())) {
      keep_sites.push_back(s);
      keep_panel.push_back(ps);
      continue;
    }
    PanelSite ns;
    ns.times.reserve(keep.size());
    ns.y.resize(keep.size());
    ns.x.resize(keep.size(), data.d());
    ns.w.resize(keep.size(), data.k());
    for (std::size_t r = 0; r < keep.size(); ++r) {
      ns.times.push_back(ps.times[keep[r]]);
      ns.y[r] = ps.y[keep[r]];
      ns.x.row(r) = ps.x.row(keep[r]);
      ns.w.row(r) = ps.w.row(keep[r]);
    }
    keep_sites.push_back(s);
    keep_panel.push_back(std::move(ns));
  }

  PanelDataset cleaned(Grid(std::move(keep_sites)), std::move(keep_panel),
                       data.exposure_names(), data.confounder_names());
  return {std::move(cleaned), std::move(report)};
}

std::vector<double> cell_areas(const Grid& grid, AreaScheme scheme) {
  std::vector<double> out(grid.size(), 1.0);
  if (scheme == AreaScheme::kUniform) return out;

  double sum = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double lat = grid.site(i).coords[1];
    if (!(std::abs(lat) < 90.0))
      throw DomainError("cell_areas: |latitude| must be < 90 for cos_latitude");
    out[i] = std::cos(lat * std::numbers::pi / 180.0);
    sum += out[i];
  }
  const double mean = sum / static_cast<double>(grid.size());
  for (auto& v : out) v /= mean;
  return out;
}

}  // namespace qlscm
