#include "qlscm/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>

#include "qlscm/errors.hpp"
#include "qlscm/estimators.hpp"
#include "qlscm/format.hpp"
#include "qlscm/gpsim.hpp"
#include "qlscm/inference.hpp"
#include "qlscm/parallel.hpp"
#include "qlscm/quantiles.hpp"

namespace qlscm {

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
}

std::filesystem::path out_path(const RunConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out_dir);
  return std::filesystem::path(cfg.out_dir) / name;
}

std::vector<double> resolve_weights(const RunConfig& cfg, const Grid& grid) {
  if (cfg.weights == "uniform") return cell_areas(grid, AreaScheme::kUniform);
  if (cfg.weights == "coslat") return cell_areas(grid, AreaScheme::kCosLatitude);
  std::vector<double> areas;
  areas.reserve(grid.size());
  for (const auto& s : grid.sites()) areas.push_back(s.area);
  return areas;
}

Json truth_to_json(const SimTruth& truth) {
  Json j;
  switch (truth.kind) {
    case SimTruth::Kind::kConstant: j["kind"] = "constant"; break;
    case SimTruth::Kind::kZero: j["kind"] = "zero"; break;
    case SimTruth::Kind::kTauFunction: j["kind"] = "tau_function"; break;
  }
  j["beta1"] = truth.beta1;
  j["beta0"] = truth.beta0;
  if (!truth.tau_table.empty()) {
    Json table;
    for (const auto& [tau, value] : truth.tau_table)
      table[format_double(tau)] = value;
    j["tau_table"] = table;
  }
  j["description"] = truth.description;
  return j;
}

double median_of(std::vector<double> values) {
  return empirical_quantile(std::span<double>(values), 0.5);
}

struct EstimateRow {
  int rep;
  std::string estimator;  // "qpe" or "ace"
  double tau;             // NaN for ace
  double estimate;
  double truth;  // NaN when unknown
};

SimOutput generate_case(const RunConfig& cfg, RngSeed seed) {
  if (cfg.sim_case == "example1") return gen_example1(cfg.example1_n, seed);
  const Grid grid = make_regular_grid(cfg.grid_nx, cfg.grid_ny);
  if (cfg.sim_case == "case1") return gen_case1(grid, cfg.m, seed);
  if (cfg.sim_case == "case2") return gen_case2(grid, cfg.m, seed);
  if (cfg.sim_case == "case3") return gen_case3(grid, cfg.m, seed);
  throw ConfigError("unknown simulation case '" + cfg.sim_case + "'");
}

Json bootstrap_to_json(const BootstrapResult& bs, bool audit) {
  Json j;
  j["point"] = std::vector<double>(bs.point.begin(), bs.point.end());
  j["ci_lower"] = std::vector<double>(bs.ci_lower.begin(), bs.ci_lower.end());
  j["ci_upper"] = std::vector<double>(bs.ci_upper.begin(), bs.ci_upper.end());
  j["significant"] = bs.significant;
  j["level"] = bs.level;
  if (!bs.warnings.empty()) j["warnings"] = bs.warnings;
  if (audit) {
    Json reps = Json::array();
    for (Eigen::Index r = 0; r < bs.estimates.rows(); ++r) {
      Json row = Json::array();
      for (Eigen::Index c = 0; c < bs.estimates.cols(); ++c)
        row.push_back(bs.estimates(r, c));
      reps.push_back(row);
    }
    j["replicates"] = reps;
  }
  return j;
}

struct LoadedPanel {
  PanelDataset data;
  Json report;
};

LoadedPanel load_input(const RunConfig& cfg) {
  if (cfg.input.empty()) throw ConfigError("--input is required for this command");
  PanelDataset raw = load_panel_csv(cfg.input, cfg.schema);

  std::size_t rows_loaded = 0;
  for (std::size_t i = 0; i < raw.n_sites(); ++i) rows_loaded += raw.site(i).rows();

  std::size_t rows_after_months = rows_loaded;
  if (!cfg.months.empty()) {
    raw = raw.filter_months(cfg.months);
    rows_after_months = 0;
    for (std::size_t i = 0; i < raw.n_sites(); ++i) rows_after_months += raw.site(i).rows();
  }

  auto [cleaned, report] = validate_panel(raw, MissingPolicy::kDrop);
  std::size_t rows_final = 0;
  for (std::size_t i = 0; i < cleaned.n_sites(); ++i) rows_final += cleaned.site(i).rows();

  Json j;
  j["rows_loaded"] = rows_loaded;
  j["rows_after_month_filter"] = rows_after_months;
  j["rows_after_validation"] = rows_final;
  j["records_dropped"] = report.dropped_records.size();
  j["sites_dropped"] = report.dropped_sites;
  j["sites_used"] = cleaned.n_sites();
  return {std::move(cleaned), std::move(j)};
}

}  // namespace

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file '" + path.string() + "': " + e.what());
  }

  auto get = [&](const char* key, auto& target) {
    if (j.contains(key)) target = j.at(key).get<std::decay_t<decltype(target)>>();
  };
  get("case", cfg.sim_case);
  get("reps", cfg.reps);
  get("m", cfg.m);
  get("n", cfg.example1_n);
  get("save_panels", cfg.save_panels);
  get("taus", cfg.taus);
  get("seed", cfg.seed);
  get("out", cfg.out_dir);
  get("weights", cfg.weights);
  get("input", cfg.input);
  get("regions", cfg.regions);
  get("months", cfg.months);
  get("bootstrap_reps", cfg.bootstrap_reps);
  get("block", cfg.block);
  get("level", cfg.level);
  get("audit", cfg.audit_replicates);
  get("hill_k", cfg.hill_k);
  if (j.contains("grid")) {
    const std::string g = j.at("grid").get<std::string>();
    const auto pos = g.find('x');
    if (pos == std::string::npos) throw ConfigError("grid must look like '50x20'");
    cfg.grid_nx = std::stoi(g.substr(0, pos));
    cfg.grid_ny = std::stoi(g.substr(pos + 1));
  }
  if (j.contains("schema")) {
    const Json& s = j.at("schema");
    auto gets = [&](const char* key, std::string& target) {
      if (s.contains(key)) target = s.at(key).get<std::string>();
    };
    gets("site_id", cfg.schema.site_id);
    gets("lon", cfg.schema.lon);
    gets("lat", cfg.schema.lat);
    gets("time", cfg.schema.time);
    gets("outcome", cfg.schema.outcome);
    if (s.contains("exposures"))
      cfg.schema.exposures = s.at("exposures").get<std::vector<std::string>>();
    if (s.contains("confounders"))
      cfg.schema.confounders = s.at("confounders").get<std::vector<std::string>>();
    if (s.contains("area")) cfg.schema.area = s.at("area").get<std::string>();
    if (s.contains("region")) cfg.schema.region = s.at("region").get<std::string>();
  }
}

void validate_config(const RunConfig& cfg) {
  for (double tau : cfg.taus)
    if (!(tau > 0.0 && tau < 1.0))
      throw ConfigError("tau levels must lie strictly inside (0,1)");
  if (cfg.reps < 1) throw ConfigError("reps must be >= 1");
  if (cfg.grid_nx < 1 || cfg.grid_ny < 1) throw ConfigError("grid dimensions must be >= 1");
  if (!(cfg.level > 0.0 && cfg.level < 1.0)) throw ConfigError("level must be in (0,1)");
  if (cfg.block < 1.0) throw ConfigError("expected block must be >= 1");
  if (cfg.bootstrap_reps < 2) throw ConfigError("bootstrap replicates must be >= 2");
  if (cfg.weights != "uniform" && cfg.weights != "coslat" && cfg.weights != "area")
    throw ConfigError("weights must be one of: uniform, coslat, area");
  if (cfg.command == "simulate" && cfg.sim_case != "case1" && cfg.sim_case != "case2" &&
      cfg.sim_case != "case3" && cfg.sim_case != "example1")
    throw ConfigError("case must be one of: case1, case2, case3, example1");
  if (cfg.hill_k < 0) throw ConfigError("hill k must be >= 0");
}

Json config_echo(const RunConfig& cfg) {
  Json j;
  j["command"] = cfg.command;
  if (cfg.command == "simulate") {
    j["case"] = cfg.sim_case;
    j["reps"] = cfg.reps;
    if (cfg.sim_case == "example1") {
      j["n"] = cfg.example1_n;
    } else {
      j["grid"] = std::to_string(cfg.grid_nx) + "x" + std::to_string(cfg.grid_ny);
      j["m"] = cfg.m;
    }
    j["save_panels"] = cfg.save_panels;
  } else {
    j["input"] = cfg.input;
    if (!cfg.regions.empty()) j["regions"] = cfg.regions;
    if (!cfg.months.empty()) j["months"] = cfg.months;
  }
  j["taus"] = cfg.taus;
  j["seed"] = cfg.seed;
  j["weights"] = cfg.weights;
  if (cfg.command == "analyze" || cfg.command == "bootstrap-test") {
    j["bootstrap_reps"] = cfg.bootstrap_reps;
    j["block"] = cfg.block;
    j["level"] = cfg.level;
  }
  if (cfg.command == "hill") j["hill_k"] = cfg.hill_k;
  j["out"] = cfg.out_dir;
  return j;
}

Json cmd_simulate(const RunConfig& cfg) {
  validate_config(cfg);
  const RngSeed master{cfg.seed};

  std::vector<EstimateRow> rows;
  Json truth_json;
  for (int rep = 0; rep < cfg.reps; ++rep) {
    const RngSeed rep_seed = derive_seed(master, static_cast<std::uint64_t>(rep));
    const SimOutput sim = generate_case(cfg, rep_seed);
    if (rep == 0) truth_json = truth_to_json(sim.truth);
    const std::vector<double> weights = resolve_weights(cfg, sim.data.grid());

    for (double tau : cfg.taus) {
      const SpatialEffect eff = spatial_qpe(sim.data, tau, weights);
      rows.push_back({rep, "qpe", tau, eff.slopes[0], sim.truth.qpe_truth(tau)});
    }
    const SpatialEffect ace = spatial_ace(sim.data, weights);
    rows.push_back({rep, "ace", std::numeric_limits<double>::quiet_NaN(),
                    ace.slopes[0], sim.truth.ace_truth()});

    if (cfg.save_panels) {
      const std::string base = "panel_rep" + std::to_string(rep);
      write_panel_csv(sim.data, out_path(cfg, base + ".csv"));
      Json sidecar;
      sidecar["truth"] = truth_to_json(sim.truth);
      sidecar["seed"] = rep_seed.value;
      write_text(out_path(cfg, base + "_truth.json"), sidecar.dump(2) + "\n");
    }
  }

  std::ostringstream csv;
  csv << "rep,estimator,tau,estimate,truth,error,abs_error,log_abs_error\n";
  for (const auto& r : rows) {
    const double err = r.estimate - r.truth;
    csv << r.rep << ',' << r.estimator << ','
        << (std::isnan(r.tau) ? "" : format_double(r.tau)) << ','
        << format_double(r.estimate) << ',' << format_double(r.truth) << ','
        << format_double(err) << ',' << format_double(std::abs(err)) << ','
        << format_double(std::log(std::abs(err))) << '\n';
  }
  write_text(out_path(cfg, "simulate_replicates.csv"), csv.str());

  // summary per estimator label
  Json summaries;
  auto summarize = [&](const std::string& label, double tau_or_nan) {
    std::vector<double> estimates;
    std::vector<double> log_abs;
    double truth = std::numeric_limits<double>::quiet_NaN();
    for (const auto& r : rows) {
      const bool match = r.estimator == label &&
                         (std::isnan(tau_or_nan) ? std::isnan(r.tau)
                                                 : r.tau == tau_or_nan);
      if (!match) continue;
      estimates.push_back(r.estimate);
      truth = r.truth;
      if (!std::isnan(r.truth)) log_abs.push_back(std::log(std::abs(r.estimate - r.truth)));
    }
    Json s;
    s["n_reps"] = estimates.size();
    const double mean =
        std::accumulate(estimates.begin(), estimates.end(), 0.0) / estimates.size();
    s["mean"] = mean;
    if (estimates.size() > 1) {
      double ss = 0.0;
      for (double v : estimates) ss += (v - mean) * (v - mean);
      s["sd"] = std::sqrt(ss / (estimates.size() - 1.0));
    }
    s["truth"] = truth;
    if (!log_abs.empty()) {
      double mean_abs = 0.0;
      for (double v : log_abs) mean_abs += std::exp(v);
      s["mean_abs_error"] = mean_abs / log_abs.size();
      s["median_log_abs_error"] = median_of(log_abs);
    }
    return s;
  };
  for (double tau : cfg.taus) {
    std::ostringstream key;
    key << "qpe(" << format_double(tau) << ")";
    summaries[key.str()] = summarize("qpe", tau);
  }
  summaries["ace"] = summarize("ace", std::numeric_limits<double>::quiet_NaN());

  Json bundle;
  bundle["config"] = config_echo(cfg);
  bundle["truth"] = truth_json;
  bundle["estimators"] = summaries;
  write_text(out_path(cfg, "simulate_summary.json"), bundle.dump(2) + "\n");
  return bundle;
}

namespace {

Json analyze_region(const RunConfig& cfg, const PanelDataset& data,
                    std::span<const double> weights, RngSeed region_seed,
                    std::ostringstream& csv, const std::string& region_label) {
  Json out;
  std::uint64_t est_index = 0;
  auto run_one = [&](const EstimatorSpec& est, const std::string& name, double tau) {
    BootstrapSpec bspec;
    bspec.replicates = cfg.bootstrap_reps;
    bspec.expected_block = cfg.block;
    bspec.level = cfg.level;
    bspec.seed = derive_seed(region_seed, est_index++);
    const BootstrapResult bs = bootstrap_effect(data, est, bspec, weights);
    out[name] = bootstrap_to_json(bs, cfg.audit_replicates);

    for (int j = 0; j < static_cast<int>(bs.point.size()); ++j) {
      csv << region_label << ',' << (est.kind == EstimatorSpec::Kind::kQpe ? "qpe" : "ace")
          << ',' << (est.kind == EstimatorSpec::Kind::kQpe ? format_double(tau) : "")
          << ',' << data.exposure_names()[j] << ',' << format_double(bs.point[j]) << ','
          << format_double(bs.ci_lower[j]) << ',' << format_double(bs.ci_upper[j]) << ','
          << (bs.significant[j] ? "true" : "false") << ',' << data.n_sites() << '\n';
    }
  };
  for (double tau : cfg.taus) {
    std::ostringstream key;
    key << "qpe(" << format_double(tau) << ")";
    run_one(EstimatorSpec::qpe(tau), key.str(), tau);
  }
  run_one(EstimatorSpec::ace(), "ace", 0.0);
  return out;
}

}  // namespace

Json cmd_analyze(const RunConfig& cfg) {
  validate_config(cfg);
  LoadedPanel loaded = load_input(cfg);
  const PanelDataset& data = loaded.data;
  if (data.n_sites() == 0) throw DataError("no usable sites after validation");
  const std::vector<double> weights = resolve_weights(cfg, data.grid());

  RegionMap region_map;
  if (!cfg.regions.empty()) {
    region_map = load_region_map_csv(cfg.regions);
  } else {
    region_map = region_map_from_grid(data.grid());
  }

  Json bundle;
  bundle["config"] = config_echo(cfg);
  bundle["data"] = loaded.report;

  std::ostringstream csv;
  csv << "region,estimator,tau,exposure,estimate,ci_lo,ci_hi,significant,n_sites\n";

  const RngSeed master{cfg.seed};
  Json regions_json;
  if (region_map.empty()) {
    regions_json["all"] =
        analyze_region(cfg, data, weights, derive_seed(master, 0), csv, "all");
  } else {
    // group sites by label; unlabeled sites are excluded and counted
    std::map<std::string, std::vector<int>> members;
    std::vector<std::string> warnings;
    for (const auto& [site_id, region] : region_map) {
      const int idx = data.grid().find(site_id);
      if (idx < 0) {
        warnings.push_back("region map references unknown site '" + site_id + "'");
        continue;
      }
      members[region].push_back(idx);
    }
    int unlabeled = 0;
    for (std::size_t i = 0; i < data.n_sites(); ++i)
      if (!region_map.count(data.grid().site(i).id)) ++unlabeled;

    std::uint64_t region_index = 0;
    for (auto& [label, indices] : members) {
      std::sort(indices.begin(), indices.end());
      const PanelDataset subset = data.subset(indices);
      std::vector<double> sub_weights;
      sub_weights.reserve(indices.size());
      for (int idx : indices) sub_weights.push_back(weights[idx]);
      try {
        regions_json[label] = analyze_region(cfg, subset, sub_weights,
                                             derive_seed(master, region_index), csv, label);
      } catch (const EstimationError& e) {
        warnings.push_back("region '" + label + "' omitted: " + e.what());
      }
      ++region_index;
    }
    bundle["unlabeled_sites"] = unlabeled;
    if (!warnings.empty()) bundle["warnings"] = warnings;
  }
  bundle["regions"] = regions_json;

  write_text(out_path(cfg, "analysis.csv"), csv.str());
  write_text(out_path(cfg, "analysis.json"), bundle.dump(2) + "\n");
  return bundle;
}

Json cmd_bootstrap_test(const RunConfig& cfg) {
  validate_config(cfg);
  LoadedPanel loaded = load_input(cfg);
  const PanelDataset& data = loaded.data;
  if (data.n_sites() == 0) throw DataError("no usable sites after validation");
  const std::vector<double> weights = resolve_weights(cfg, data.grid());

  Json bundle;
  bundle["config"] = config_echo(cfg);
  bundle["data"] = loaded.report;

  std::ostringstream csv;
  csv << "estimator,tau,exposure,point,ci_lo,ci_hi,reject_zero_effect\n";

  const RngSeed master{cfg.seed};
  std::uint64_t est_index = 0;
  Json tests;
  auto run_one = [&](const EstimatorSpec& est, const std::string& name, double tau) {
    BootstrapSpec bspec;
    bspec.replicates = cfg.bootstrap_reps;
    bspec.expected_block = cfg.block;
    bspec.level = cfg.level;
    bspec.seed = derive_seed(master, est_index++);
    const BootstrapResult bs = bootstrap_effect(data, est, bspec, weights);
    const auto verdicts = test_zero_effect(bs);

    Json t = bootstrap_to_json(bs, cfg.audit_replicates);
    Json rejects = Json::array();
    for (const auto& v : verdicts) rejects.push_back(v.reject);
    t["reject_zero_effect"] = rejects;
    tests[name] = t;

    for (std::size_t j = 0; j < verdicts.size(); ++j) {
      csv << (est.kind == EstimatorSpec::Kind::kQpe ? "qpe" : "ace") << ','
          << (est.kind == EstimatorSpec::Kind::kQpe ? format_double(tau) : "") << ','
          << data.exposure_names()[j] << ','
          << format_double(bs.point[static_cast<Eigen::Index>(j)]) << ','
          << format_double(verdicts[j].ci_lower) << ','
          << format_double(verdicts[j].ci_upper) << ','
          << (verdicts[j].reject ? "true" : "false") << '\n';
    }
  };
  for (double tau : cfg.taus) {
    std::ostringstream key;
    key << "qpe(" << format_double(tau) << ")";
    run_one(EstimatorSpec::qpe(tau), key.str(), tau);
  }
  run_one(EstimatorSpec::ace(), "ace", 0.0);
  bundle["tests"] = tests;

  write_text(out_path(cfg, "bootstrap_test.csv"), csv.str());
  write_text(out_path(cfg, "bootstrap_test.json"), bundle.dump(2) + "\n");
  return bundle;
}

Json cmd_hill(const RunConfig& cfg) {
  validate_config(cfg);
  LoadedPanel loaded = load_input(cfg);
  const PanelDataset& data = loaded.data;

  std::vector<double> pooled;
  for (std::size_t i = 0; i < data.n_sites(); ++i) {
    const auto& y = data.site(i).y;
    pooled.insert(pooled.end(), y.begin(), y.end());
  }
  const auto n = static_cast<long>(pooled.size());
  long positive = 0;
  for (double v : pooled)
    if (v > 0.0) ++positive;
  if (positive < 2) throw DataError("hill: outcome has no positive values to rank");

  std::vector<int> ks;
  if (cfg.hill_k > 0) {
    ks.push_back(cfg.hill_k);
  } else {
    for (int pct = 1; pct <= 10; ++pct) {
      const int k = static_cast<int>(std::ceil(0.01 * pct * n));
      if (k >= 1 && k < positive && (ks.empty() || k != ks.back())) ks.push_back(k);
    }
    if (ks.empty()) throw DataError("hill: too few positive values for the k-grid");
  }

  std::ostringstream csv;
  csv << "k,fraction_of_n,estimate\n";
  Json estimates;
  for (int k : ks) {
    const double est = hill_estimator(pooled, k);
    csv << k << ',' << format_double(static_cast<double>(k) / n) << ','
        << format_double(est) << '\n';
    estimates[std::to_string(k)] = est;
  }

  Json bundle;
  bundle["config"] = config_echo(cfg);
  bundle["data"] = loaded.report;
  bundle["n_pooled"] = n;
  bundle["n_positive"] = positive;
  bundle["estimates"] = estimates;

  write_text(out_path(cfg, "hill.csv"), csv.str());
  write_text(out_path(cfg, "hill.json"), bundle.dump(2) + "\n");
  return bundle;
}

int run_cli(int argc, const char* const* argv) {
  if (const char* env = std::getenv("QLSCM_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) set_max_threads(static_cast<unsigned>(n));
  }

  RunConfig cfg;
  // --config is applied before flag parsing so flags win
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string_view(argv[i]) == "--config") {
      try {
        apply_config_file(cfg, argv[i + 1]);
      } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
      }
    }
  }

  CLI::App app{"Quantile-based spatial causal effects on gridded panels"};
  app.require_subcommand(1);
  std::string config_path;
  std::string grid_spec;
  app.add_option("--config", config_path, "JSON config file (flags override it)");

  auto add_shared = [&](CLI::App* sub) {
    // --config is consumed by the prescan; registered here so CLI11 accepts
    // it in subcommand position too
    sub->add_option("--config", config_path, "JSON config file (flags override it)");
    sub->add_option("--taus", cfg.taus, "quantile levels, comma separated")
        ->delimiter(',');
    sub->add_option("--seed", cfg.seed, "master RNG seed");
    sub->add_option("--out", cfg.out_dir, "output directory");
    sub->add_option("--weights", cfg.weights, "site weights: uniform|coslat|area");
  };
  auto add_input = [&](CLI::App* sub) {
    sub->add_option("--input", cfg.input, "panel CSV path");
    sub->add_option("--regions", cfg.regions, "region map CSV (site_id,region)");
    sub->add_option("--months", cfg.months,
                    "months filter (times read as YYYYMMDD or YYYYMM)")
        ->delimiter(',');
  };
  auto add_bootstrap = [&](CLI::App* sub) {
    sub->add_option("--bootstrap-reps", cfg.bootstrap_reps, "bootstrap replicates");
    sub->add_option("--block", cfg.block, "expected bootstrap block length");
    sub->add_option("--level", cfg.level, "confidence level");
    sub->add_flag("--audit", cfg.audit_replicates, "emit full replicate matrices");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "run a simulation case");
  simulate->add_option("--case", cfg.sim_case, "case1|case2|case3|example1");
  simulate->add_option("--reps", cfg.reps, "number of replicate experiments");
  simulate->add_option("--grid", grid_spec, "grid size, e.g. 50x20");
  simulate->add_option("--m", cfg.m, "time replicates per site");
  simulate->add_option("--n", cfg.example1_n, "sample size for example1");
  simulate->add_flag("--save-panels", cfg.save_panels, "persist generated panels");
  add_shared(simulate);

  CLI::App* analyze = app.add_subcommand("analyze", "estimate effects on a panel CSV");
  add_input(analyze);
  add_bootstrap(analyze);
  add_shared(analyze);

  CLI::App* btest = app.add_subcommand("bootstrap-test", "zero-effect hypothesis tests");
  add_input(btest);
  add_bootstrap(btest);
  add_shared(btest);

  CLI::App* hill = app.add_subcommand("hill", "tail-index diagnostic of the outcome");
  add_input(hill);
  hill->add_option("--k", cfg.hill_k, "upper order statistics (0: 1%..10% grid)");
  add_shared(hill);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (!grid_spec.empty()) {
    const auto pos = grid_spec.find('x');
    if (pos == std::string::npos) {
      std::cerr << "error: --grid must look like 50x20\n";
      return 2;
    }
    try {
      cfg.grid_nx = std::stoi(grid_spec.substr(0, pos));
      cfg.grid_ny = std::stoi(grid_spec.substr(pos + 1));
    } catch (const std::exception&) {
      std::cerr << "error: --grid must look like 50x20\n";
      return 2;
    }
  }

  Json bundle;
  try {
    const auto started = std::chrono::steady_clock::now();
    if (simulate->parsed()) {
      cfg.command = "simulate";
      bundle = cmd_simulate(cfg);
    } else if (analyze->parsed()) {
      cfg.command = "analyze";
      bundle = cmd_analyze(cfg);
    } else if (btest->parsed()) {
      cfg.command = "bootstrap-test";
      bundle = cmd_bootstrap_test(cfg);
    } else {
      cfg.command = "hill";
      bundle = cmd_hill(cfg);
    }
    const auto elapsed = std::chrono::duration<double>(
        std::chrono::steady_clock::now() - started);
    std::cerr << "done in " << elapsed.count() << " s\n";
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }

  std::cout << bundle.dump(2) << std::endl;
  return 0;
}

}  // namespace qlscm
