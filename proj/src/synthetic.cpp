#include "tsx/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "tsx/csv.hpp"
#include "tsx/date.hpp"
#include "tsx/rng.hpp"

namespace tsx {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::vector<double> generate_values(const ArchetypeSpec& spec,
                                    std::size_t length, double scale,
                                    Rng& rng) {
  std::vector<double> v(length);
  if (spec.kind == "weekly") {
    static constexpr double kPattern[7] = {0.70, 0.85, 1.00, 1.10,
                                           1.20, 1.45, 1.25};
    double pattern[7];
    for (int p = 0; p < 7; ++p) {
      pattern[p] = kPattern[p] * (1.0 + 0.1 * rng.uniform(-1.0, 1.0));
    }
    const std::size_t phase = static_cast<std::size_t>(rng.below(7));
    for (std::size_t t = 0; t < length; ++t) {
      const double base = scale * pattern[(t + phase) % 7];
      v[t] = std::max(0.0, base * (1.0 + spec.noise * rng.normal()));
    }
  } else if (spec.kind == "sine_trend") {
    const double phase = rng.uniform(0.0, kTwoPi);
    const double slope =
        spec.trend * scale / static_cast<double>(length > 1 ? length - 1 : 1);
    for (std::size_t t = 0; t < length; ++t) {
      const double base =
          scale * (1.0 + spec.amplitude *
                             std::sin(kTwoPi * static_cast<double>(t) /
                                          static_cast<double>(spec.period) +
                                      phase)) +
          slope * static_cast<double>(t);
      v[t] = std::max(0.0, base + scale * spec.noise * rng.normal());
    }
  } else if (spec.kind == "noise") {
    for (std::size_t t = 0; t < length; ++t) {
      v[t] = std::max(0.0, scale * (1.0 + spec.noise * rng.normal()));
    }
  } else if (spec.kind == "intermittent") {
    for (std::size_t t = 0; t < length; ++t) {
      if (rng.uniform() < spec.demand_prob) {
        v[t] = scale * (0.5 + std::abs(rng.normal()));
      } else {
        v[t] = 0.0;
      }
    }
  } else {
    throw ValidationError("unknown archetype kind: " + spec.kind);
  }
  return v;
}

// Affine-map the whole series so the train slice hits the target population
// statistics exactly.
void adjust_to_target(std::vector<double>& v, std::size_t horizon,
                      double target_mu, double target_sigma) {
  const std::size_t train_len = v.size() > horizon ? v.size() - horizon : v.size();
  double mu = 0.0;
  for (std::size_t t = 0; t < train_len; ++t) mu += v[t];
  mu /= static_cast<double>(train_len);
  double ss = 0.0;
  for (std::size_t t = 0; t < train_len; ++t) ss += (v[t] - mu) * (v[t] - mu);
  const double sigma = std::sqrt(ss / static_cast<double>(train_len));
  if (sigma == 0.0) throw ValidationError("cannot adjust a constant series");
  const double a = target_sigma / sigma;
  const double b = target_mu - a * mu;
  for (double& x : v) x = a * x + b;
}

}  // namespace

GenConfig GenConfig::from_json(const nlohmann::json& j) {
  GenConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    c.length = j.value("length", c.length);
    c.horizon = j.value("horizon", c.horizon);
    c.start_date = j.value("start_date", c.start_date);
    for (const auto& g : j.at("groups")) {
      ArchetypeSpec s;
      s.kind = g.value("kind", s.kind);
      s.count = g.value("count", s.count);
      s.prefix = g.value("prefix", s.prefix);
      s.id = g.value("id", s.id);
      s.scale_min = g.value("scale_min", g.value("scale", s.scale_min));
      s.scale_max = g.value("scale_max", g.value("scale", s.scale_max));
      s.noise = g.value("noise", s.noise);
      s.amplitude = g.value("amplitude", s.amplitude);
      s.period = g.value("period", s.period);
      s.trend = g.value("trend", s.trend);
      s.demand_prob = g.value("demand_prob", s.demand_prob);
      if (g.contains("target_mu")) s.target_mu = g.at("target_mu").get<double>();
      if (g.contains("target_sigma")) {
        s.target_sigma = g.at("target_sigma").get<double>();
      }
      c.groups.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed gen config: ") + e.what());
  }
  if (c.groups.empty()) throw ValidationError("gen config: no groups");
  if (c.length < 8) throw ValidationError("gen config: length too short");
  return c;
}

GeneratedCorpus gen_synthetic(const GenConfig& config) {
  GeneratedCorpus out;
  const std::int64_t day0 = date::parse(config.start_date);

  for (const ArchetypeSpec& spec : config.groups) {
    if (spec.count == 0) continue;
    if (spec.scale_min <= 0.0 || spec.scale_max < spec.scale_min) {
      throw ValidationError("gen config: invalid scale range");
    }
    std::size_t pad = 2;
    for (std::size_t c = spec.count; c > 100; c /= 10) ++pad;

    for (std::size_t i = 0; i < spec.count; ++i) {
      std::string id;
      if (!spec.id.empty() && spec.count == 1) {
        id = spec.id;
      } else {
        std::string num = std::to_string(i);
        while (num.size() < pad) num.insert(num.begin(), '0');
        id = spec.prefix + "_" + num;
      }
      if (out.set.items.count(id)) {
        throw ValidationError("gen config: duplicate item id " + id);
      }

      Rng rng = Rng::stream(config.seed, fnv1a(id));
      const double scale =
          spec.scale_min == spec.scale_max
              ? spec.scale_min
              : std::exp(rng.uniform(std::log(spec.scale_min),
                                     std::log(spec.scale_max)));
      std::vector<double> values =
          generate_values(spec, config.length, scale, rng);
      if (spec.target_mu && spec.target_sigma) {
        adjust_to_target(values, config.horizon, *spec.target_mu,
                         *spec.target_sigma);
      }

      Series s;
      s.values = std::move(values);
      s.days.resize(config.length);
      for (std::size_t t = 0; t < config.length; ++t) {
        s.days[t] = day0 + static_cast<std::int64_t>(t);
      }
      out.set.items.emplace(id, std::move(s));
      out.archetype_of.emplace(id, spec.kind);
    }
  }
  if (out.set.items.empty()) {
    throw ValidationError("gen config: no items generated");
  }
  return out;
}

void write_corpus(const GeneratedCorpus& corpus, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  csv::Writer w(out_dir + "/corpus.csv");
  w.raw_row("item_id,date,value");
  for (const auto& [id, series] : corpus.set.items) {
    for (std::size_t t = 0; t < series.size(); ++t) {
      w.raw_row(id + "," + date::format(series.days[t]) + "," +
                csv::format_double(series.values[t]));
    }
  }
  nlohmann::json meta;
  meta["archetypes"] = corpus.archetype_of;
  std::ofstream out(out_dir + "/corpus_meta.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write corpus_meta.json");
  out << meta.dump(2) << '\n';
}

}  // namespace tsx
