#include "tsx/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <limits>

#include "tsx/csv.hpp"
#include "tsx/date.hpp"
#include "tsx/explain.hpp"
#include "tsx/treeshap.hpp"

namespace tsx {

namespace fs = std::filesystem;

namespace {

const char* kForecastability = "forecastability.csv";
const char* kRolling = "rolling_sp.csv";
const char* kForecasts = "forecasts.csv";
const char* kModel = "model.json";
const char* kStats = "stats.csv";
const char* kFidelity = "fidelity.csv";
const char* kExplanations = "explanations.csv";

std::string artifact(const RunConfig& cfg, const char* name) {
  return cfg.out_dir + "/" + name;
}

void require_artifact(const RunConfig& cfg, const char* name,
                      const std::string& producing_stage) {
  if (!fs::exists(artifact(cfg, name))) {
    throw ValidationError("missing artifact '" + std::string(name) +
                          "' in " + cfg.out_dir + "; run '" + producing_stage +
                          "' first");
  }
}

double parse_double_field(const std::string& text, const std::string& at) {
  double v = 0.0;
  const char* first = text.data();
  const auto [ptr, ec] = std::from_chars(first, first + text.size(), v);
  if (ec != std::errc() || ptr != first + text.size()) {
    if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw ValidationError(at + ": invalid number '" + text + "'");
  }
  return v;
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return j;
}

std::map<std::string, std::string> load_grouping(const std::string& path) {
  const auto lines = csv::read_lines(path);
  if (lines.empty()) throw ValidationError("empty grouping file: " + path);
  const auto header = csv::split_line(lines[0]);
  if (header.size() != 2 || header[0] != "item_id" || header[1] != "group_id") {
    throw ValidationError(path + ": expected header 'item_id,group_id'");
  }
  std::map<std::string, std::string> grouping;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = csv::split_line(lines[i]);
    if (fields.size() != 2) {
      throw ValidationError(path + " line " + std::to_string(i + 1) +
                            ": expected 2 columns");
    }
    grouping[fields[0]] = fields[1];
  }
  return grouping;
}

struct ScoredLevel {
  std::string name;
  std::vector<ForecastabilityReport> reports;
};

void write_forecastability_csv(const std::string& path,
                               const std::vector<ForecastabilityReport>& reports) {
  csv::Writer w(path);
  w.raw_row("item_id,L,sp,noise_mean,noise_p95,forecastable");
  for (const ForecastabilityReport& r : reports) {
    w.raw_row(r.item_id + "," + std::to_string(r.length) + "," +
              csv::format_double(r.sp) + "," +
              csv::format_double(r.benchmark.mean) + "," +
              csv::format_double(r.benchmark.p95) + "," +
              (r.forecastable ? "1" : "0"));
  }
}

struct FidelityRow {
  std::string item_id;
  Metrics z;
  Metrics orig;
};

std::vector<std::string> corpus_item_ids(const SeriesSet& corpus) {
  std::vector<std::string> ids;
  for (const auto& [id, s] : corpus.items) ids.push_back(id);
  return ids;
}

// Per-item map of the forecastable flag from forecastability.csv.
std::map<std::string, bool> load_flags(const RunConfig& cfg) {
  const auto lines = csv::read_lines(artifact(cfg, kForecastability));
  std::map<std::string, bool> flags;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = csv::split_line(lines[i]);
    flags[f[0]] = f[5] == "1";
  }
  return flags;
}

std::map<std::string, std::pair<double, double>> load_sp_and_noise(
    const RunConfig& cfg) {
  const auto lines = csv::read_lines(artifact(cfg, kForecastability));
  std::map<std::string, std::pair<double, double>> sp;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = csv::split_line(lines[i]);
    sp[f[0]] = {parse_double_field(f[2], "forecastability.csv"),
                parse_double_field(f[3], "forecastability.csv")};
  }
  return sp;
}

std::vector<SeriesStats> load_stats(const RunConfig& cfg,
                                    const std::vector<ProcessedSeries>& items) {
  const auto lines = csv::read_lines(artifact(cfg, kStats));
  std::map<std::string, SeriesStats> by_id;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = csv::split_line(lines[i]);
    if (f.size() != 4) {
      throw ValidationError("stats.csv line " + std::to_string(i + 1) +
                            ": expected 4 columns");
    }
    SeriesStats s;
    s.item_id = f[0];
    s.mu = parse_double_field(f[1], "stats.csv");
    s.sigma = parse_double_field(f[2], "stats.csv");
    s.sigma_eff = parse_double_field(f[3], "stats.csv");
    by_id[s.item_id] = s;
  }
  std::vector<SeriesStats> stats;
  for (const ProcessedSeries& item : items) {
    const auto it = by_id.find(item.item_id);
    if (it == by_id.end()) {
      throw ValidationError("stats.csv: missing item " + item.item_id);
    }
    stats.push_back(it->second);
  }
  return stats;
}

ForecastSet load_forecast_artifact(const RunConfig& cfg,
                                   const SeriesSet& corpus) {
  return load_external_forecasts(artifact(cfg, kForecasts),
                                 cfg.settings.horizon,
                                 corpus_item_ids(corpus));
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
  return from_json(read_json(path));
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig cfg;
  try {
    cfg.data_path = j.at("data").get<std::string>();
    cfg.out_dir = j.value("out", cfg.out_dir);
    cfg.settings.horizon = j.value("horizon", cfg.settings.horizon);
    cfg.settings.seed = j.value("seed", cfg.settings.seed);
    cfg.settings.normalize_targets = j.value("normalize", true);
    cfg.calibrate = j.value("calibrate", false);

    if (j.contains("features")) {
      const auto& f = j.at("features");
      cfg.settings.features.lags =
          f.value("lags", cfg.settings.features.lags);
      cfg.settings.features.windows =
          f.value("windows", cfg.settings.features.windows);
      cfg.settings.features.pct_changes =
          f.value("pct_changes", cfg.settings.features.pct_changes);
      cfg.settings.features.period =
          f.value("period", cfg.settings.features.period);
    }
    if (j.contains("surrogate")) {
      const auto& s = j.at("surrogate");
      cfg.settings.train.n_trees = s.value("n_trees", cfg.settings.train.n_trees);
      cfg.settings.train.learning_rate =
          s.value("learning_rate", cfg.settings.train.learning_rate);
      cfg.settings.train.max_depth =
          s.value("max_depth", cfg.settings.train.max_depth);
      cfg.settings.train.min_samples_leaf =
          s.value("min_samples_leaf", cfg.settings.train.min_samples_leaf);
      cfg.settings.train.min_gain =
          s.value("min_gain", cfg.settings.train.min_gain);
      cfg.settings.train.seed = s.value("seed", cfg.settings.train.seed);
    }
    if (j.contains("blackbox")) {
      const auto& b = j.at("blackbox");
      if (b.contains("weights")) {
        const auto w = b.at("weights").get<std::vector<double>>();
        if (w.size() != 3) {
          throw ValidationError(
              "blackbox.weights must list [seasonal_naive, ses, damped]");
        }
        cfg.settings.ensemble.weight_seasonal_naive = w[0];
        cfg.settings.ensemble.weight_ses = w[1];
        cfg.settings.ensemble.weight_damped_trend = w[2];
      }
      cfg.settings.ensemble.seasonal_period =
          b.value("seasonal_period", cfg.settings.ensemble.seasonal_period);
      cfg.settings.ensemble.damping =
          b.value("damping", cfg.settings.ensemble.damping);
      if (b.contains("external_forecasts") &&
          !b.at("external_forecasts").is_null()) {
        cfg.external_forecasts = b.at("external_forecasts").get<std::string>();
      }
    }
    if (j.contains("forecastability")) {
      const auto& f = j.at("forecastability");
      cfg.forecastability.replicates =
          f.value("replicates", cfg.forecastability.replicates);
      cfg.forecastability.sparsity =
          f.value("sparsity", cfg.forecastability.sparsity);
      cfg.rolling_trace = f.value("rolling", cfg.rolling_trace);
      cfg.forecastability.rolling_window =
          f.value("rolling_window", cfg.forecastability.rolling_window);
      cfg.forecastability.rolling_step =
          f.value("rolling_step", cfg.forecastability.rolling_step);
    }
    if (j.contains("injection") && !j.at("injection").is_null()) {
      cfg.injection_path = j.at("injection").get<std::string>();
    }
    if (j.contains("groupings")) {
      for (const auto& [name, path] : j.at("groupings").items()) {
        cfg.groupings[name] = path.get<std::string>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed run config: ") + e.what());
  }

  if (cfg.settings.horizon < 1) throw ValidationError("horizon must be >= 1");
  cfg.settings.ensemble.validate();
  cfg.settings.train.validate();
  cfg.forecastability.seed = cfg.settings.seed;
  // The rolling defaults mirror the minimum-length rule: window 4H, step H.
  if (cfg.rolling_trace && cfg.forecastability.rolling_window == 0) {
    cfg.forecastability.rolling_window = 4 * cfg.settings.horizon;
    cfg.forecastability.rolling_step = cfg.settings.horizon;
  }
  if (!cfg.rolling_trace) {
    cfg.forecastability.rolling_window = 0;
    cfg.forecastability.rolling_step = 0;
  }
  return cfg;
}

InjectionSpec load_injection_spec(const std::string& path) {
  const nlohmann::json j = read_json(path);
  InjectionSpec spec;
  try {
    spec.feature_name = j.value("feature", spec.feature_name);
    spec.seed = j.value("seed", spec.seed);
    spec.step_frac = j.value("step_frac", spec.step_frac);
    spec.clip_frac = j.value("clip_frac", spec.clip_frac);
    spec.defaults.base_price = j.value("base_price", spec.defaults.base_price);
    spec.defaults.beta = j.value("beta", spec.defaults.beta);
    if (j.contains("beta_min") && j.contains("beta_max")) {
      spec.beta_min = j.at("beta_min").get<double>();
      spec.beta_max = j.at("beta_max").get<double>();
    }
    if (j.contains("items")) {
      for (const auto& [id, entry] : j.at("items").items()) {
        InjectionSpec::Item item = spec.defaults;
        item.base_price = entry.value("base_price", item.base_price);
        item.beta = entry.value("beta", item.beta);
        spec.items[id] = item;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed injection spec: ") + e.what());
  }
  return spec;
}

void stage_forecastability(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  const SeriesSet corpus = load_series(cfg.data_path);
  std::vector<ScoredLevel> levels;

  const auto items = preprocess_corpus(corpus, cfg.settings.horizon);
  levels.push_back({"item", score_items(items, cfg.forecastability)});

  for (const auto& [name, path] : cfg.groupings) {
    const auto grouping = load_grouping(path);
    const SeriesSet agg = aggregate(corpus, grouping);
    const auto agg_items = preprocess_corpus(agg, cfg.settings.horizon);
    levels.push_back({name, score_items(agg_items, cfg.forecastability)});
  }

  write_forecastability_csv(artifact(cfg, kForecastability),
                            levels.front().reports);
  for (std::size_t l = 1; l < levels.size(); ++l) {
    write_forecastability_csv(
        cfg.out_dir + "/forecastability_" + levels[l].name + ".csv",
        levels[l].reports);
  }

  if (cfg.rolling_trace) {
    csv::Writer w(artifact(cfg, kRolling));
    w.raw_row("item_id,start,sp");
    for (const ForecastabilityReport& r : levels.front().reports) {
      for (const RollingPoint& p : r.rolling) {
        w.raw_row(r.item_id + "," + std::to_string(p.start) + "," +
                  csv::format_double(p.sp));
      }
    }
  }

  nlohmann::json summary;
  auto& level_summaries = summary["levels"] = nlohmann::json::array();
  for (const ScoredLevel& level : levels) {
    std::size_t forecastable = 0;
    nlohmann::json degenerate = nlohmann::json::array();
    for (const ForecastabilityReport& r : level.reports) {
      forecastable += r.forecastable;
      if (r.degenerate) degenerate.push_back(r.item_id);
    }
    const double pct = 100.0 * static_cast<double>(forecastable) /
                       static_cast<double>(level.reports.size());
    level_summaries.push_back({{"level", level.name},
                               {"n_series", level.reports.size()},
                               {"n_forecastable", forecastable},
                               {"forecastable_pct", pct},
                               {"degenerate_items", degenerate}});
  }
  summary["replicates"] = cfg.forecastability.replicates;
  summary["seed"] = cfg.settings.seed;
  write_json(cfg.out_dir + "/forecastability_summary.json", summary);
}

void stage_forecast(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  const SeriesSet corpus = load_series(cfg.data_path);
  const auto items = preprocess_corpus(corpus, cfg.settings.horizon);

  ForecastSet forecasts;
  if (cfg.external_forecasts) {
    forecasts = load_external_forecasts(*cfg.external_forecasts,
                                        cfg.settings.horizon,
                                        corpus_item_ids(corpus));
  } else {
    forecasts = forecast_corpus(items, cfg.settings.horizon,
                                cfg.settings.ensemble, cfg.settings.seed);
  }

  csv::Writer w(artifact(cfg, kForecasts));
  w.raw_row("item_id,step,forecast");
  for (const auto& [id, fc] : forecasts.items) {
    for (std::size_t h = 1; h <= fc.size(); ++h) {
      w.raw_row(id + "," + std::to_string(h) + "," +
                csv::format_double(fc[h - 1]));
    }
  }
}

void stage_surrogate(const RunConfig& cfg) {
  require_artifact(cfg, kForecasts, "forecast");
  const SeriesSet corpus = load_series(cfg.data_path);
  const ForecastSet forecasts = load_forecast_artifact(cfg, corpus);
  const CorpusModel cm = build_corpus_model(corpus, cfg.settings, &forecasts);

  write_json(artifact(cfg, kModel), cm.model.to_json());

  {
    csv::Writer w(artifact(cfg, kStats));
    w.raw_row("item_id,mu,sigma,sigma_eff");
    for (const SeriesStats& s : cm.stats) {
      w.raw_row(s.item_id + "," + csv::format_double(s.mu) + "," +
                csv::format_double(s.sigma) + "," +
                csv::format_double(s.sigma_eff));
    }
  }

  // Fidelity per item: surrogate vs black box on the horizon, both scales.
  const std::vector<double> preds = cm.model.predict(cm.matrix);

  // Row-level alignment scatter (black-box forecast vs surrogate).
  {
    csv::Writer w(cfg.out_dir + "/fidelity_scatter.csv");
    w.raw_row("item_id,step,forecast_z,surrogate_z,forecast,surrogate");
    for (std::size_t r = 0; r < cm.keys.size(); ++r) {
      const RowKey& key = cm.keys[r];
      const std::size_t i = cm.index_of.at(key.item_id);
      const double fc_orig = cfg.settings.normalize_targets
                                 ? denormalize(cm.targets[r], cm.stats[i])
                                 : cm.targets[r];
      const double pred_orig = cfg.settings.normalize_targets
                                   ? denormalize(preds[r], cm.stats[i])
                                   : preds[r];
      w.raw_row(key.item_id + "," + std::to_string(key.step) + "," +
                csv::format_double(cm.targets[r]) + "," +
                csv::format_double(preds[r]) + "," +
                csv::format_double(fc_orig) + "," +
                csv::format_double(pred_orig));
    }
  }

  csv::Writer w(artifact(cfg, kFidelity));
  w.raw_row("item_id,mae_z,mape_z,rmse_z,r2_z,mae,mape,rmse,r2");
  nlohmann::json summary;
  auto& rows = summary["items"] = nlohmann::json::array();
  for (std::size_t i = 0; i < cm.items.size(); ++i) {
    const std::string& id = cm.items[i].item_id;
    std::vector<double> pred_z, target_z, pred_orig, fc_orig;
    for (std::size_t r = 0; r < cm.keys.size(); ++r) {
      if (cm.keys[r].item_id != id) continue;
      pred_z.push_back(preds[r]);
      target_z.push_back(cm.targets[r]);
      if (cfg.settings.normalize_targets) {
        pred_orig.push_back(denormalize(preds[r], cm.stats[i]));
        fc_orig.push_back(denormalize(cm.targets[r], cm.stats[i]));
      } else {
        pred_orig.push_back(preds[r]);
        fc_orig.push_back(cm.targets[r]);
      }
    }
    const Metrics mz = compute_metrics(pred_z, target_z);
    const Metrics mo = compute_metrics(pred_orig, fc_orig);
    w.raw_row(id + "," + csv::format_double(mz.mae) + "," +
              csv::format_double(mz.mape) + "," + csv::format_double(mz.rmse) +
              "," + csv::format_double(mz.r2) + "," +
              csv::format_double(mo.mae) + "," + csv::format_double(mo.mape) +
              "," + csv::format_double(mo.rmse) + "," +
              csv::format_double(mo.r2));
    rows.push_back({{"item_id", id},
                    {"r2_z", mz.r2},
                    {"r2", mo.r2},
                    {"mape", mo.mape},
                    {"r2_degenerate", mz.r2_degenerate},
                    {"mape_excluded", mo.mape_excluded}});
  }
  summary["n_rows"] = cm.matrix.rows.size();
  summary["config"] = {{"horizon", cfg.settings.horizon},
                       {"seed", cfg.settings.seed},
                       {"n_trees", cfg.settings.train.n_trees},
                       {"learning_rate", cfg.settings.train.learning_rate},
                       {"max_depth", cfg.settings.train.max_depth},
                       {"min_samples_leaf", cfg.settings.train.min_samples_leaf},
                       {"normalized_targets", cfg.settings.normalize_targets}};
  write_json(cfg.out_dir + "/fidelity_summary.json", summary);
}

void stage_explain(const RunConfig& cfg) {
  require_artifact(cfg, kModel, "surrogate");
  require_artifact(cfg, kStats, "surrogate");
  require_artifact(cfg, kForecasts, "forecast");
  require_artifact(cfg, kForecastability, "forecastability");

  const SeriesSet corpus = load_series(cfg.data_path);
  const auto items = preprocess_corpus(corpus, cfg.settings.horizon);
  const auto stats = load_stats(cfg, items);
  const ForecastSet forecasts = load_forecast_artifact(cfg, corpus);
  const TreeEnsemble model =
      TreeEnsemble::from_json(read_json(artifact(cfg, kModel)));
  const auto flags = load_flags(cfg);

  const HorizonMatrix hm = build_horizon_matrix(items, stats, cfg.settings);
  if (hm.matrix.names != model.feature_names()) {
    throw ValidationError(
        "feature schema of model.json does not match the config");
  }
  const std::vector<Explanation> exps = explain_rows(model, hm.matrix);

  std::map<std::string, std::size_t> index_of;
  for (std::size_t i = 0; i < items.size(); ++i) {
    index_of[items[i].item_id] = i;
  }

  std::string header = "item_id,step,base_value";
  for (const std::string& name : hm.matrix.names) header += "," + name;
  header += ",prediction,forecastable";
  if (cfg.calibrate) header += ",y_ag,s,status";

  csv::Writer w(artifact(cfg, kExplanations));
  w.raw_row(header);
  for (std::size_t r = 0; r < hm.keys.size(); ++r) {
    const RowKey& key = hm.keys[r];
    const std::size_t i = index_of.at(key.item_id);

    Explanation e = exps[r];
    if (cfg.settings.normalize_targets) {
      e = denormalize_explanation(e, stats[i]);
    } else {
      e.units = Explanation::Units::original;
    }

    std::string line = key.item_id + "," + std::to_string(key.step) + "," +
                       csv::format_double(e.base_value);
    const auto flag_it = flags.find(key.item_id);
    if (flag_it == flags.end()) {
      throw ValidationError("forecastability.csv: missing item " +
                            key.item_id);
    }

    if (cfg.calibrate) {
      const double y_ag = forecasts.items.at(key.item_id)[key.step - 1];
      const CalibratedExplanation c = calibrate(e, y_ag);
      for (const double phi : c.calibrated) {
        line += "," + csv::format_double(phi);
      }
      line += "," + csv::format_double(e.prediction);
      line += flag_it->second ? ",1" : ",0";
      line += "," + csv::format_double(c.y_ag) + "," +
              csv::format_double(c.scale) + "," + to_string(c.status);
    } else {
      for (const double phi : e.attributions) {
        line += "," + csv::format_double(phi);
      }
      line += "," + csv::format_double(e.prediction);
      line += flag_it->second ? ",1" : ",0";
    }
    w.raw_row(line);
  }
}

void stage_faithfulness(const RunConfig& cfg) {
  if (!cfg.injection_path) {
    throw ValidationError("faithfulness requires an injection spec (--inject)");
  }
  fs::create_directories(cfg.out_dir);
  const SeriesSet corpus = load_series(cfg.data_path);
  const InjectionSpec spec = load_injection_spec(*cfg.injection_path);

  const FaithfulnessReport report =
      inject_and_evaluate(corpus, spec, cfg.settings);

  csv::Writer w(cfg.out_dir + "/faithfulness.csv");
  w.raw_row("item_id,step,price,phi_" + spec.feature_name + ",ground_truth");
  for (const FaithfulnessPair& p : report.pairs) {
    w.raw_row(p.item_id + "," + std::to_string(p.step) + "," +
              csv::format_double(p.price) + "," +
              csv::format_double(p.phi_injected) + "," +
              csv::format_double(p.ground_truth));
  }

  nlohmann::json summary;
  summary["pearson_r"] = report.pearson_r;
  summary["n_pairs"] = report.pairs.size();
  summary["degenerate"] = report.degenerate;
  if (report.degenerate) summary["warning"] = "no injected variance";
  summary["feature"] = spec.feature_name;
  summary["config"] = {{"horizon", cfg.settings.horizon},
                       {"seed", cfg.settings.seed},
                       {"injection_seed", spec.seed},
                       {"step_frac", spec.step_frac},
                       {"clip_frac", spec.clip_frac}};
  write_json(cfg.out_dir + "/faithfulness_summary.json", summary);
}

void stage_analyze(const RunConfig& cfg) {
  require_artifact(cfg, kForecastability, "forecastability");
  require_artifact(cfg, kFidelity, "surrogate");
  require_artifact(cfg, kForecasts, "forecast");

  const SeriesSet corpus = load_series(cfg.data_path);
  const auto items = preprocess_corpus(corpus, cfg.settings.horizon);
  const ForecastSet forecasts = load_forecast_artifact(cfg, corpus);
  const auto sp_noise = load_sp_and_noise(cfg);

  // Fidelity rows (original units) from the surrogate stage.
  std::map<std::string, std::pair<double, double>> fidelity;  // r2, mape
  {
    const auto lines = csv::read_lines(artifact(cfg, kFidelity));
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      const auto f = csv::split_line(lines[i]);
      fidelity[f[0]] = {parse_double_field(f[8], "fidelity.csv"),
                        parse_double_field(f[6], "fidelity.csv")};
    }
  }

  std::vector<ItemPerformance> perf;
  double noise_reference = 0.0;
  for (const ProcessedSeries& item : items) {
    const auto sp_it = sp_noise.find(item.item_id);
    const auto fid_it = fidelity.find(item.item_id);
    if (sp_it == sp_noise.end() || fid_it == fidelity.end()) {
      throw ValidationError("analyze: missing upstream rows for item " +
                            item.item_id);
    }
    const std::span<const double> all(item.values);
    const std::size_t train_len = item.length() - cfg.settings.horizon;
    const std::span<const double> actual = all.subspan(train_len);
    const std::vector<double>& fc = forecasts.items.at(item.item_id);
    const Metrics accuracy = compute_metrics(fc, actual);

    ItemPerformance p;
    p.item_id = item.item_id;
    p.sp = sp_it->second.first;
    p.fidelity_r2 = fid_it->second.first;
    p.fidelity_mape = fid_it->second.second;
    p.accuracy_r2 = accuracy.r2;
    p.accuracy_mape = accuracy.mape;
    perf.push_back(p);
    noise_reference += sp_it->second.second;
  }
  noise_reference /= static_cast<double>(perf.size());

  const SpCorrelations corr = correlate_sp(perf);

  {
    csv::Writer w(cfg.out_dir + "/sp_vs_fidelity.csv");
    w.raw_row("item_id,sp,r2,mape");
    for (const ItemPerformance& p : perf) {
      w.raw_row(p.item_id + "," + csv::format_double(p.sp) + "," +
                csv::format_double(p.fidelity_r2) + "," +
                csv::format_double(p.fidelity_mape));
    }
  }
  {
    csv::Writer w(cfg.out_dir + "/sp_vs_accuracy.csv");
    w.raw_row("item_id,sp,r2,mape");
    for (const ItemPerformance& p : perf) {
      w.raw_row(p.item_id + "," + csv::format_double(p.sp) + "," +
                csv::format_double(p.accuracy_r2) + "," +
                csv::format_double(p.accuracy_mape));
    }
  }

  nlohmann::json j;
  j["n_items"] = corr.n_items;
  j["low_sample_warning"] = corr.low_sample_warning;
  j["noise_reference_sp"] = noise_reference;
  j["config"] = {{"horizon", cfg.settings.horizon},
                 {"seed", cfg.settings.seed},
                 {"replicates", cfg.forecastability.replicates}};
  j["fidelity"] = {{"spearman_sp_r2", corr.spearman_sp_fidelity_r2},
                   {"pearson_sp_r2", corr.pearson_sp_fidelity_r2},
                   {"spearman_sp_mape", corr.spearman_sp_fidelity_mape},
                   {"pearson_sp_mape", corr.pearson_sp_fidelity_mape}};
  j["accuracy"] = {{"spearman_sp_r2", corr.spearman_sp_accuracy_r2},
                   {"pearson_sp_r2", corr.pearson_sp_accuracy_r2},
                   {"spearman_sp_mape", corr.spearman_sp_accuracy_mape},
                   {"pearson_sp_mape", corr.pearson_sp_accuracy_mape}};
  write_json(cfg.out_dir + "/sp_correlations.json", j);
}

void run_all(const RunConfig& cfg) {
  stage_forecastability(cfg);
  stage_forecast(cfg);
  stage_surrogate(cfg);
  stage_explain(cfg);
  if (cfg.injection_path) stage_faithfulness(cfg);
  stage_analyze(cfg);
}

void run(const std::string& subcommand, const RunConfig& cfg) {
  if (subcommand == "forecastability") return stage_forecastability(cfg);
  if (subcommand == "forecast") return stage_forecast(cfg);
  if (subcommand == "surrogate") return stage_surrogate(cfg);
  if (subcommand == "explain") return stage_explain(cfg);
  if (subcommand == "faithfulness") return stage_faithfulness(cfg);
  if (subcommand == "analyze") return stage_analyze(cfg);
  if (subcommand == "all") return run_all(cfg);
  throw ValidationError("unknown subcommand: " + subcommand);
}

}  // namespace tsx
