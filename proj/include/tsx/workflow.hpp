#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tsx/blackbox.hpp"
#include "tsx/features.hpp"
#include "tsx/series.hpp"
#include "tsx/surrogate.hpp"

namespace tsx {

/// Identity of one surrogate row: an item's horizon step and its date.
struct RowKey {
  std::string item_id;
  std::size_t step = 0;  // 1..H
  std::int64_t day = 0;
};

/// Everything the pipeline stages agree on.
struct PipelineSettings {
  std::size_t horizon = 28;
  FeatureConfig features;
  EnsembleSpec ensemble;
  TrainParams train;
  /// Train the surrogate on per-item z-scored forecasts (the normal mode);
  /// false reproduces the distorted raw-target variant of the comparison.
  bool normalize_targets = true;
  std::uint64_t seed = 0;
};

/// A corpus assembled end to end: processed series, train-slice stats,
/// black-box forecasts, the joint horizon feature matrix with row keys and
/// targets, and the fitted surrogate.
struct CorpusModel {
  std::vector<ProcessedSeries> items;  // sorted by item id; full length
  std::map<std::string, std::size_t> index_of;
  std::vector<SeriesStats> stats;     // train-slice statistics
  ForecastSet forecasts;              // original units
  FeatureMatrix matrix;               // one row per (item, horizon step)
  std::vector<RowKey> keys;
  std::vector<double> targets;        // surrogate targets (z or raw scale)
  TreeEnsemble model;

  std::size_t train_length(std::size_t item_index) const {
    return items[item_index].length() - horizon;
  }
  std::size_t horizon = 0;
};

/// Trim + length-gate every series of a corpus, sorted by item id.
std::vector<ProcessedSeries> preprocess_corpus(const SeriesSet& corpus,
                                               std::size_t horizon);

/// Joint horizon feature matrix over a corpus: per item, features are built
/// on the (optionally z-scored) train part and one row per horizon step is
/// emitted. `stats` must align with `items`.
struct HorizonMatrix {
  FeatureMatrix matrix;
  std::vector<RowKey> keys;
};
HorizonMatrix build_horizon_matrix(
    const std::vector<ProcessedSeries>& items,
    const std::vector<SeriesStats>& stats, const PipelineSettings& settings,
    const std::map<std::string, std::vector<double>>* exogenous = nullptr,
    const std::string& exo_name = "");

/// Built-in ensemble forecasts for every item (train slice only).
ForecastSet forecast_corpus(const std::vector<ProcessedSeries>& items,
                            std::size_t horizon, const EnsembleSpec& spec,
                            std::uint64_t seed);

/// Assemble the joint horizon matrix and surrogate targets and fit the
/// surrogate. `exogenous`, when given, adds one extra feature column (name
/// `exo_name`) whose per-item vectors align with the processed series.
CorpusModel build_corpus_model(
    const SeriesSet& corpus, const PipelineSettings& settings,
    const ForecastSet* external_forecasts = nullptr,
    const std::map<std::string, std::vector<double>>* exogenous = nullptr,
    const std::string& exo_name = "");

}  // namespace tsx
