#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsx/series.hpp"

namespace tsx {

/// One batch of generated items sharing an archetype. Kinds:
///   weekly       - weekly multiplier pattern with multiplicative noise
///   sine_trend   - sinusoid plus linear drift plus noise
///   noise        - white noise around a level
///   intermittent - sparse demand spikes, zero otherwise
struct ArchetypeSpec {
  std::string kind = "weekly";
  std::size_t count = 1;
  std::string prefix = "item";
  std::string id;  // explicit id for count == 1
  double scale_min = 100.0;
  double scale_max = 100.0;  // per-item scale drawn log-uniform
  double noise = 0.1;        // noise level as a fraction of scale
  double amplitude = 0.35;   // seasonal amplitude as a fraction of scale
  std::size_t period = 7;    // sine period (weekly pattern is always 7)
  double trend = 0.0;        // total drift over the series, fraction of scale
  double demand_prob = 0.3;  // intermittent: probability of a demand day
  /// When set, the item's train slice is affinely adjusted to these exact
  /// population statistics (train = all but the final `horizon` points).
  std::optional<double> target_mu;
  std::optional<double> target_sigma;
};

struct GenConfig {
  std::uint64_t seed = 1;
  std::size_t length = 546;
  std::size_t horizon = 28;       // train-slice boundary for target stats
  std::string start_date = "2020-01-06";  // a Monday
  std::vector<ArchetypeSpec> groups;

  static GenConfig from_json(const nlohmann::json& j);
};

struct GeneratedCorpus {
  SeriesSet set;
  std::map<std::string, std::string> archetype_of;
};

/// Deterministic synthetic corpus: each item draws from an RNG stream
/// derived from (seed, item id), so output is byte-identical for a fixed
/// config regardless of generation order.
GeneratedCorpus gen_synthetic(const GenConfig& config);

/// Write `corpus.csv` (long format) and `corpus_meta.json` (item ->
/// archetype) into a directory.
void write_corpus(const GeneratedCorpus& corpus, const std::string& out_dir);

}  // namespace tsx
