#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsx/series.hpp"

namespace tsx {

/// Catalog of the engineered feature set. Names are generated from these
/// lists, so the schema is identical for every item of a corpus.
struct FeatureConfig {
  std::vector<std::size_t> lags{1, 7, 14, 28};
  std::vector<std::size_t> windows{7, 28};
  std::vector<std::size_t> pct_changes{1, 7};
  std::size_t period = 7;
};

/// Rectangular feature matrix with a named column schema.
struct FeatureMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;

  std::size_t column(std::string_view name) const;
};

/// Column names for a config: calendar, lags, rolling stats, expanding
/// stats, percentage changes, decomposition components, age.
std::vector<std::string> feature_names(const FeatureConfig& config);

/// Classical additive decomposition. Trend is a centered moving average of
/// width `period` (the standard 2 x m average when the period is even);
/// seasonal is the per-phase mean of detrended values re-centered to sum to
/// zero over one period; trend edges are filled with the nearest valid
/// value. Requires period >= 2 and length >= 2 * period.
void decompose(std::span<const double> values, std::size_t period,
               std::vector<double>& trend, std::vector<double>& seasonal);

/// Per-series feature stream. Every target-derived feature at position k is
/// computed from strictly earlier values, so perturbing the target at time t
/// never changes a feature at any time <= t. The decomposition components
/// are therefore estimated causally: the trend at k is the most recent fully
/// observable centered average, and the seasonal value is an expanding
/// per-phase mean of causally detrended points.
///
/// Horizon rows describe future steps h = 1..H after the end of the series:
/// calendar features and age advance with h, the seasonal component uses the
/// phase of the future position with per-phase means frozen at the series
/// end, and all other target-derived features keep their last computable
/// values (direct strategy; the surrogate mimics forecasts, it does not
/// forecast).
class FeatureBuilder {
 public:
  /// `series` carries the (possibly normalized) target values the features
  /// are computed from. When `series.days` is empty, calendar features are
  /// emitted as NaN.
  FeatureBuilder(const ProcessedSeries& series, const FeatureConfig& config);

  const std::vector<std::string>& names() const { return names_; }

  /// Feature row for in-sample position k, 0 <= k < length.
  std::vector<double> row(std::size_t k) const;

  /// Feature row for horizon step h >= 1 after the series end.
  std::vector<double> horizon_row(std::size_t h) const;

 private:
  std::vector<double> assemble(std::size_t k, std::int64_t day,
                               double age) const;

  const FeatureConfig config_;
  std::vector<std::string> names_;
  std::vector<double> values_;
  std::vector<std::int64_t> days_;
  std::size_t offset_ = 0;

  // Causal decomposition streams; index k in [0, n] where n freezes the
  // horizon state. seasonal_phase_[k * period + p] is undefined (NaN) until
  // phase p has been observed.
  std::vector<double> trend_feat_;
  std::vector<double> seasonal_insample_;
  std::vector<double> frozen_phase_;
};

/// Feature matrix over all in-sample positions of one series. Throws
/// ValidationError when a configured lag is >= the series length.
FeatureMatrix build_feature_matrix(const ProcessedSeries& series,
                                   const FeatureConfig& config);

/// In-sample rows plus `horizon` future rows appended.
FeatureMatrix build_feature_matrix(const ProcessedSeries& series,
                                   const FeatureConfig& config,
                                   std::size_t horizon);

}  // namespace tsx
