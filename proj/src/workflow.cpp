#include "tsx/workflow.hpp"

#include <algorithm>

namespace tsx {

std::vector<ProcessedSeries> preprocess_corpus(const SeriesSet& corpus,
                                               std::size_t horizon) {
  std::vector<ProcessedSeries> items;
  items.reserve(corpus.items.size());
  for (const auto& [id, series] : corpus.items) {
    ProcessedSeries p = preprocess(id, series, horizon);
    if (p.length() <= horizon) {
      throw ValidationError("item " + id + ": shorter than the horizon");
    }
    items.push_back(std::move(p));
  }
  if (items.empty()) throw ValidationError("empty corpus");
  return items;
}

ForecastSet forecast_corpus(const std::vector<ProcessedSeries>& items,
                            std::size_t horizon, const EnsembleSpec& spec,
                            std::uint64_t seed) {
  ForecastSet set;
  set.horizon = horizon;
  for (const ProcessedSeries& item : items) {
    const std::span<const double> all(item.values);
    const std::span<const double> train =
        all.subspan(0, item.length() - horizon);
    set.items[item.item_id] = forecast(train, horizon, spec, seed);
  }
  return set;
}

HorizonMatrix build_horizon_matrix(
    const std::vector<ProcessedSeries>& items,
    const std::vector<SeriesStats>& stats, const PipelineSettings& settings,
    const std::map<std::string, std::vector<double>>* exogenous,
    const std::string& exo_name) {
  if (items.size() != stats.size()) {
    throw ValidationError("stats do not align with items");
  }
  HorizonMatrix hm;
  hm.matrix.names = feature_names(settings.features);
  const bool with_exo = exogenous != nullptr;
  if (with_exo) hm.matrix.names.push_back(exo_name);

  for (std::size_t i = 0; i < items.size(); ++i) {
    const ProcessedSeries& item = items[i];
    if (item.length() <= settings.horizon) {
      throw ValidationError("item " + item.item_id +
                            ": shorter than the horizon");
    }
    const std::size_t train_len = item.length() - settings.horizon;

    // Feature source: the train part, z-scored when normalization is on.
    ProcessedSeries train_part;
    train_part.item_id = item.item_id;
    train_part.offset = item.offset;
    train_part.days.assign(
        item.days.begin(),
        item.days.begin() + static_cast<std::ptrdiff_t>(
                                std::min(train_len, item.days.size())));
    train_part.values.resize(train_len);
    for (std::size_t k = 0; k < train_len; ++k) {
      train_part.values[k] = settings.normalize_targets
                                 ? normalize(item.values[k], stats[i])
                                 : item.values[k];
    }

    const std::vector<double>* exo = nullptr;
    if (with_exo) {
      const auto it = exogenous->find(item.item_id);
      if (it == exogenous->end() || it->second.size() != item.length()) {
        throw ValidationError("item " + item.item_id +
                              ": exogenous column misaligned");
      }
      exo = &it->second;
    }

    const FeatureBuilder builder(train_part, settings.features);
    for (std::size_t h = 1; h <= settings.horizon; ++h) {
      std::vector<double> row = builder.horizon_row(h);
      if (with_exo) row.push_back((*exo)[train_len + h - 1]);
      hm.matrix.rows.push_back(std::move(row));
      hm.keys.push_back({item.item_id, h,
                         item.days.empty() ? 0 : item.days[train_len + h - 1]});
    }
  }
  return hm;
}

CorpusModel build_corpus_model(
    const SeriesSet& corpus, const PipelineSettings& settings,
    const ForecastSet* external_forecasts,
    const std::map<std::string, std::vector<double>>* exogenous,
    const std::string& exo_name) {
  if (settings.horizon == 0) throw ValidationError("horizon must be >= 1");

  CorpusModel cm;
  cm.horizon = settings.horizon;
  cm.items = preprocess_corpus(corpus, settings.horizon);
  for (std::size_t i = 0; i < cm.items.size(); ++i) {
    cm.index_of.emplace(cm.items[i].item_id, i);
  }

  if (external_forecasts != nullptr) {
    cm.forecasts = *external_forecasts;
    for (const ProcessedSeries& item : cm.items) {
      if (!cm.forecasts.items.count(item.item_id)) {
        throw ValidationError("missing forecasts for item " + item.item_id);
      }
    }
  } else {
    cm.forecasts = forecast_corpus(cm.items, settings.horizon,
                                   settings.ensemble, settings.seed);
  }

  cm.stats.reserve(cm.items.size());
  for (const ProcessedSeries& item : cm.items) {
    const std::span<const double> all(item.values);
    SeriesStats stats =
        compute_stats(all.subspan(0, item.length() - settings.horizon));
    stats.item_id = item.item_id;
    cm.stats.push_back(stats);
  }

  HorizonMatrix hm =
      build_horizon_matrix(cm.items, cm.stats, settings, exogenous, exo_name);
  cm.matrix = std::move(hm.matrix);
  cm.keys = std::move(hm.keys);

  cm.targets.reserve(cm.keys.size());
  for (const RowKey& key : cm.keys) {
    const std::size_t i = cm.index_of.at(key.item_id);
    const std::vector<double>& fc = cm.forecasts.items.at(key.item_id);
    if (fc.size() != settings.horizon) {
      throw ValidationError("item " + key.item_id +
                            ": forecast horizon mismatch");
    }
    const double raw = fc[key.step - 1];
    cm.targets.push_back(settings.normalize_targets
                             ? normalize(raw, cm.stats[i])
                             : raw);
  }

  cm.model = fit(cm.matrix, cm.targets, settings.train);
  return cm;
}

}  // namespace tsx
