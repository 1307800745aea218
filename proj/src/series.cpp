#include "tsx/series.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "tsx/csv.hpp"
#include "tsx/date.hpp"

namespace tsx {

namespace {

double parse_value(const std::string& text, std::size_t line_no) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw ValidationError("line " + std::to_string(line_no) +
                          ": invalid value '" + text + "'");
  }
  return v;
}

}  // namespace

SeriesSet load_series(const std::string& path) {
  const auto lines = csv::read_lines(path);
  if (lines.empty()) throw ValidationError("no series in " + path);

  const auto header = csv::split_line(lines[0]);
  if (header.size() != 3 || header[0] != "item_id" || header[1] != "date" ||
      header[2] != "value") {
    throw ValidationError("line 1: expected header 'item_id,date,value'");
  }

  SeriesSet set;
  // Collected unsorted, then ordered per item by date.
  std::map<std::string, std::vector<std::pair<std::int64_t, double>>> raw;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty() || lines[i] == "\r") continue;
    const auto fields = csv::split_line(lines[i]);
    const std::size_t line_no = i + 1;
    if (fields.size() != 3) {
      throw ValidationError("line " + std::to_string(line_no) +
                            ": expected 3 columns, got " +
                            std::to_string(fields.size()));
    }
    if (fields[0].empty()) {
      throw ValidationError("line " + std::to_string(line_no) +
                            ": empty item_id");
    }
    std::int64_t day = 0;
    try {
      day = date::parse(fields[1]);
    } catch (const std::invalid_argument& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " +
                            e.what());
    }
    const double value = parse_value(fields[2], line_no);
    if (!std::isfinite(value)) {
      throw ValidationError("line " + std::to_string(line_no) +
                            ": non-finite value");
    }
    raw[fields[0]].emplace_back(day, value);
  }
  if (raw.empty()) throw ValidationError("no series in " + path);

  for (auto& [id, rows] : raw) {
    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    Series s;
    s.days.reserve(rows.size());
    s.values.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i > 0 && rows[i].first == rows[i - 1].first) {
        throw ValidationError("duplicate (item, date): " + id + ", " +
                              date::format(rows[i].first));
      }
      s.days.push_back(rows[i].first);
      s.values.push_back(rows[i].second);
    }
    set.items.emplace(id, std::move(s));
  }
  return set;
}

ProcessedSeries trim_leading_zeros(const std::vector<double>& values,
                                   std::size_t horizon) {
  if (values.empty()) throw ValidationError("empty series");
  std::size_t first = 0;
  while (first < values.size() && values[first] == 0.0) ++first;
  if (first == values.size()) throw ValidationError("no signal");

  ProcessedSeries p;
  p.offset = first;
  p.values.assign(values.begin() + static_cast<std::ptrdiff_t>(first),
                  values.end());
  if (horizon > 0 && p.values.size() < 4 * horizon) {
    throw ValidationError(
        "below minimum effective length: L=" + std::to_string(p.values.size()) +
        " < 4*H=" + std::to_string(4 * horizon));
  }
  return p;
}

ProcessedSeries preprocess(const std::string& item_id, const Series& series,
                           std::size_t horizon) {
  ProcessedSeries p;
  try {
    p = trim_leading_zeros(series.values, horizon);
  } catch (const ValidationError& e) {
    throw ValidationError("item " + item_id + ": " + e.what());
  }
  p.item_id = item_id;
  p.days.assign(series.days.begin() + static_cast<std::ptrdiff_t>(p.offset),
                series.days.end());
  return p;
}

SeriesStats compute_stats(std::span<const double> train_values) {
  if (train_values.empty()) {
    throw ValidationError("compute_stats: empty training slice");
  }
  const double n = static_cast<double>(train_values.size());
  const double mean =
      std::accumulate(train_values.begin(), train_values.end(), 0.0) / n;
  double ss = 0.0;
  for (const double v : train_values) ss += (v - mean) * (v - mean);
  SeriesStats stats;
  stats.mu = mean;
  stats.sigma = std::sqrt(ss / n);
  // Degenerate (constant) series fall back to sigma_eff = 1 so z = v - mu.
  const double eps = 1e-12 * std::max(1.0, std::abs(stats.mu));
  stats.sigma_eff = stats.sigma > eps ? stats.sigma : 1.0;
  return stats;
}

double normalize(double value, const SeriesStats& stats) {
  return (value - stats.mu) / stats.sigma_eff;
}

double denormalize(double z, const SeriesStats& stats) {
  return z * stats.sigma_eff + stats.mu;
}

std::pair<std::span<const double>, std::span<const double>> split_train_test(
    const ProcessedSeries& series, const SplitSpec& spec) {
  if (spec.horizon == 0) throw ValidationError("horizon must be positive");
  if (series.values.size() <= spec.horizon) {
    throw ValidationError("series length " +
                          std::to_string(series.values.size()) +
                          " <= horizon " + std::to_string(spec.horizon));
  }
  const std::size_t train_len = series.values.size() - spec.horizon;
  std::span<const double> all(series.values);
  return {all.subspan(0, train_len), all.subspan(train_len)};
}

SeriesSet aggregate(const SeriesSet& set,
                    const std::map<std::string, std::string>& grouping) {
  if (grouping.empty()) throw ValidationError("empty grouping");

  // group -> members, in sorted item order so sums accumulate identically
  // on every run.
  std::map<std::string, std::vector<const Series*>> members;
  for (const auto& [item, group] : grouping) {
    const auto it = set.items.find(item);
    if (it == set.items.end()) {
      throw ValidationError("grouping references unknown item: " + item);
    }
    members[group].push_back(&it->second);
  }

  SeriesSet out;
  for (const auto& [group, series_list] : members) {
    std::int64_t lo = series_list.front()->days.front();
    std::int64_t hi = series_list.front()->days.back();
    for (const Series* s : series_list) {
      lo = std::min(lo, s->days.front());
      hi = std::max(hi, s->days.back());
    }
    Series agg;
    const std::size_t n = static_cast<std::size_t>(hi - lo + 1);
    agg.days.resize(n);
    agg.values.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      agg.days[i] = lo + static_cast<std::int64_t>(i);
    }
    for (const Series* s : series_list) {
      for (std::size_t i = 0; i < s->days.size(); ++i) {
        agg.values[static_cast<std::size_t>(s->days[i] - lo)] += s->values[i];
      }
    }
    out.items.emplace(group, std::move(agg));
  }
  return out;
}

}  // namespace tsx
