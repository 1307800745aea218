#include "tsx/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tsx/date.hpp"

namespace tsx {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::int64_t kNoDay = std::numeric_limits<std::int64_t>::min();

double window_mean(std::span<const double> v, std::size_t lo, std::size_t hi) {
  double s = 0.0;
  for (std::size_t i = lo; i < hi; ++i) s += v[i];
  return s / static_cast<double>(hi - lo);
}

double window_std(std::span<const double> v, std::size_t lo, std::size_t hi,
                  double mean) {
  double ss = 0.0;
  for (std::size_t i = lo; i < hi; ++i) ss += (v[i] - mean) * (v[i] - mean);
  return std::sqrt(ss / static_cast<double>(hi - lo));
}

// Adjusted Fisher-Pearson skewness; 0 when undefined (< 3 points or zero
// variance).
double window_skew(std::span<const double> v, std::size_t lo, std::size_t hi,
                   double mean) {
  const std::size_t count = hi - lo;
  if (count < 3) return 0.0;
  const double n = static_cast<double>(count);
  double m2 = 0.0, m3 = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    const double d = v[i] - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  const double s2 = m2 / (n - 1.0);
  if (s2 <= 0.0) return 0.0;
  return n / ((n - 1.0) * (n - 2.0)) * m3 / (s2 * std::sqrt(s2));
}

}  // namespace

std::size_t FeatureMatrix::column(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  throw ValidationError("unknown feature column: " + std::string(name));
}

std::vector<std::string> feature_names(const FeatureConfig& config) {
  std::vector<std::string> names{"day_of_week", "day_of_month", "week_of_year",
                                 "month"};
  for (const std::size_t l : config.lags) {
    names.push_back("lag_" + std::to_string(l));
  }
  for (const std::size_t w : config.windows) {
    const std::string suffix = std::to_string(w);
    names.push_back("roll_mean_" + suffix);
    names.push_back("roll_std_" + suffix);
    names.push_back("roll_skew_" + suffix);
  }
  names.emplace_back("exp_mean");
  names.emplace_back("exp_std");
  for (const std::size_t d : config.pct_changes) {
    names.push_back("pct_change_" + std::to_string(d));
  }
  names.emplace_back("trend");
  names.emplace_back("seasonal");
  names.emplace_back("age");
  return names;
}

void decompose(std::span<const double> values, std::size_t period,
               std::vector<double>& trend, std::vector<double>& seasonal) {
  if (period < 2) throw ValidationError("decompose: period must be >= 2");
  const std::size_t n = values.size();
  if (n < 2 * period) {
    throw ValidationError("decompose: need at least 2*period observations");
  }

  const bool even = period % 2 == 0;
  const std::size_t half = even ? period / 2 : (period - 1) / 2;
  const std::size_t lo = half;
  const std::size_t hi = n - 1 - half;  // inclusive valid trend range

  trend.assign(n, kNaN);
  for (std::size_t j = lo; j <= hi; ++j) {
    if (even) {
      // 2 x m centered average: half weight on both window ends.
      double s = 0.5 * values[j - half] + 0.5 * values[j + half];
      for (std::size_t i = j - half + 1; i < j + half; ++i) s += values[i];
      trend[j] = s / static_cast<double>(period);
    } else {
      trend[j] = window_mean(values, j - half, j + half + 1);
    }
  }

  std::vector<double> phase_sum(period, 0.0);
  std::vector<std::size_t> phase_count(period, 0);
  for (std::size_t j = lo; j <= hi; ++j) {
    phase_sum[j % period] += values[j] - trend[j];
    phase_count[j % period] += 1;
  }
  std::vector<double> phase_mean(period, 0.0);
  double grand = 0.0;
  for (std::size_t p = 0; p < period; ++p) {
    // n >= 2*period guarantees every phase is observed at least once.
    phase_mean[p] = phase_sum[p] / static_cast<double>(phase_count[p]);
    grand += phase_mean[p];
  }
  grand /= static_cast<double>(period);

  seasonal.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    seasonal[t] = phase_mean[t % period] - grand;
  }

  for (std::size_t j = 0; j < lo; ++j) trend[j] = trend[lo];
  for (std::size_t j = hi + 1; j < n; ++j) trend[j] = trend[hi];
}

FeatureBuilder::FeatureBuilder(const ProcessedSeries& series,
                               const FeatureConfig& config)
    : config_(config),
      names_(feature_names(config)),
      values_(series.values),
      days_(series.days),
      offset_(series.offset) {
  if (config_.period < 2) {
    throw ValidationError("feature config: period must be >= 2");
  }
  const std::size_t n = values_.size();
  for (const std::size_t l : config_.lags) {
    if (l == 0) throw ValidationError("feature config: lag must be >= 1");
    if (l >= n) {
      throw ValidationError("feature config: lag " + std::to_string(l) +
                            " >= series length " + std::to_string(n));
    }
  }

  // Causal trend stream: the value at position k is the centered average at
  // j = k - 1 - shift, the most recent one whose window ends at k - 1.
  const std::size_t m = config_.period;
  const std::size_t shift = m % 2 == 0 ? m / 2 : (m - 1) / 2;
  const bool even = m % 2 == 0;
  const auto centered_at = [&](std::size_t j) {
    if (even) {
      double s = 0.5 * values_[j - shift] + 0.5 * values_[j + shift];
      for (std::size_t i = j - shift + 1; i < j + shift; ++i) s += values_[i];
      return s / static_cast<double>(m);
    }
    return window_mean(values_, j - shift, j + shift + 1);
  };

  trend_feat_.assign(n + 1, kNaN);
  seasonal_insample_.assign(n + 1, kNaN);
  std::vector<double> phase_sum(m, 0.0);
  std::vector<std::size_t> phase_count(m, 0);

  const auto recentered = [&](std::size_t phase) {
    if (phase_count[phase] == 0) return kNaN;
    double grand = 0.0;
    std::size_t seen = 0;
    for (std::size_t p = 0; p < m; ++p) {
      if (phase_count[p] == 0) continue;
      grand += phase_sum[p] / static_cast<double>(phase_count[p]);
      ++seen;
    }
    grand /= static_cast<double>(seen);
    return phase_sum[phase] / static_cast<double>(phase_count[phase]) - grand;
  };

  for (std::size_t k = 0; k <= n; ++k) {
    if (k >= 2 * shift + 1) {
      const std::size_t j = k - 1 - shift;
      trend_feat_[k] = centered_at(j);
      phase_sum[j % m] += values_[j] - trend_feat_[k];
      phase_count[j % m] += 1;
    }
    if (k < n) seasonal_insample_[k] = recentered(k % m);
  }
  frozen_phase_.assign(m, kNaN);
  for (std::size_t p = 0; p < m; ++p) frozen_phase_[p] = recentered(p);
}

std::vector<double> FeatureBuilder::assemble(std::size_t k, std::int64_t day,
                                             double age) const {
  std::vector<double> row;
  row.reserve(names_.size());

  if (day == kNoDay) {
    row.insert(row.end(), {kNaN, kNaN, kNaN, kNaN});
  } else {
    row.push_back(static_cast<double>(date::day_of_week(day)));
    row.push_back(static_cast<double>(date::day_of_month(day)));
    row.push_back(static_cast<double>(date::iso_week(day)));
    row.push_back(static_cast<double>(date::month(day)));
  }

  const std::span<const double> v(values_);
  for (const std::size_t l : config_.lags) {
    row.push_back(k >= l ? v[k - l] : kNaN);
  }

  for (const std::size_t w : config_.windows) {
    if (k >= w) {
      const double mean = window_mean(v, k - w, k);
      row.push_back(mean);
      row.push_back(window_std(v, k - w, k, mean));
      row.push_back(window_skew(v, k - w, k, mean));
    } else {
      row.insert(row.end(), {kNaN, kNaN, kNaN});
    }
  }

  if (k >= 1) {
    const double mean = window_mean(v, 0, k);
    row.push_back(mean);
    row.push_back(window_std(v, 0, k, mean));
  } else {
    row.insert(row.end(), {kNaN, kNaN});
  }

  for (const std::size_t d : config_.pct_changes) {
    if (k >= d + 1 && v[k - 1 - d] != 0.0) {
      row.push_back((v[k - 1] - v[k - 1 - d]) / v[k - 1 - d]);
    } else {
      row.push_back(kNaN);
    }
  }

  row.push_back(trend_feat_[k]);
  row.push_back(kNaN);  // seasonal slot, filled by the caller
  row.push_back(age);
  return row;
}

std::vector<double> FeatureBuilder::row(std::size_t k) const {
  if (k >= values_.size()) {
    throw ValidationError("feature row index out of range");
  }
  const std::int64_t day = days_.empty() ? kNoDay : days_[k];
  auto r = assemble(k, day, static_cast<double>(offset_ + k));
  r[r.size() - 2] = seasonal_insample_[k];
  return r;
}

std::vector<double> FeatureBuilder::horizon_row(std::size_t h) const {
  if (h == 0) throw ValidationError("horizon step must be >= 1");
  const std::size_t n = values_.size();
  const std::int64_t day =
      days_.empty() ? kNoDay : days_.back() + static_cast<std::int64_t>(h);
  auto r = assemble(n, day, static_cast<double>(offset_ + n + h - 1));
  r[r.size() - 2] = frozen_phase_[(n + h - 1) % config_.period];
  return r;
}

FeatureMatrix build_feature_matrix(const ProcessedSeries& series,
                                   const FeatureConfig& config) {
  return build_feature_matrix(series, config, 0);
}

FeatureMatrix build_feature_matrix(const ProcessedSeries& series,
                                   const FeatureConfig& config,
                                   std::size_t horizon) {
  const FeatureBuilder builder(series, config);
  FeatureMatrix m;
  m.names = builder.names();
  m.rows.reserve(series.values.size() + horizon);
  for (std::size_t k = 0; k < series.values.size(); ++k) {
    m.rows.push_back(builder.row(k));
  }
  for (std::size_t h = 1; h <= horizon; ++h) {
    m.rows.push_back(builder.horizon_row(h));
  }
  return m;
}

}  // namespace tsx
