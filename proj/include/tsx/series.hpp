#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tsx {

/// Raised for malformed inputs and configuration (CLI exit code 2); plain
/// std::runtime_error is reserved for unexpected failures (exit code 1).
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One univariate demand series: parallel arrays of serial day and value,
/// strictly increasing in day.
struct Series {
  std::vector<std::int64_t> days;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

/// Keyed collection of series. std::map keeps iteration order sorted by
/// item id, which every downstream reduction relies on for determinism.
struct SeriesSet {
  std::map<std::string, Series> items;
};

/// A series after leading-zero removal. `offset` counts the trimmed zeros;
/// `days` is empty when built from a bare value vector.
struct ProcessedSeries {
  std::string item_id;
  std::vector<std::int64_t> days;
  std::vector<double> values;
  std::size_t offset = 0;

  std::size_t length() const { return values.size(); }
};

/// Per-item normalization contract. sigma_eff substitutes 1 for a degenerate
/// (near-zero) standard deviation so z = v - mu remains well defined.
struct SeriesStats {
  std::string item_id;
  double mu = 0.0;
  double sigma = 0.0;
  double sigma_eff = 1.0;
};

/// Train/test split contract: the test window is the final `horizon`
/// observations of each processed series.
struct SplitSpec {
  std::size_t horizon = 28;
};

/// Load a long-format CSV with header `item_id,date,value` (ISO-8601 dates).
/// Rows may arrive out of order; they are sorted per item. Throws
/// ValidationError naming the offending line for malformed rows, duplicate
/// (item, date) pairs, or non-finite values; an empty file is "no series".
SeriesSet load_series(const std::string& path);

/// Remove leading zeros. When horizon > 0 the minimum-effective-length gate
/// L >= 4 * horizon is enforced; horizon = 0 disables the gate. Throws
/// ValidationError "no signal" for an all-zero series and "below minimum
/// effective length" when the gate fails.
ProcessedSeries trim_leading_zeros(const std::vector<double>& values,
                                   std::size_t horizon);

/// trim_leading_zeros applied to a dated series, carrying id and days.
ProcessedSeries preprocess(const std::string& item_id, const Series& series,
                           std::size_t horizon);

/// Population mean and standard deviation of a training slice.
SeriesStats compute_stats(std::span<const double> train_values);

/// z = (value - mu) / sigma_eff and its exact inverse.
double normalize(double value, const SeriesStats& stats);
double denormalize(double z, const SeriesStats& stats);

/// Final `spec.horizon` observations become the test slice, the remainder
/// the train slice. Throws ValidationError when length <= horizon.
std::pair<std::span<const double>, std::span<const double>> split_train_test(
    const ProcessedSeries& series, const SplitSpec& spec);

/// Sum series date-wise per group. Each group spans the union of its
/// members' date ranges at daily resolution; dates missing from a member are
/// treated as zero demand. Items absent from the grouping are dropped.
SeriesSet aggregate(const SeriesSet& set,
                    const std::map<std::string, std::string>& grouping);

}  // namespace tsx
