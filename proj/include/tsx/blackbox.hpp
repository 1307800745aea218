#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tsx/series.hpp"

namespace tsx {

/// Built-in stand-in for an opaque AutoML forecaster: a fixed-weight blend
/// of seasonal naive, simple exponential smoothing (alpha fit on a grid),
/// and a damped linear trend. Downstream code only ever sees its point
/// forecasts.
struct EnsembleSpec {
  double weight_seasonal_naive = 0.5;
  double weight_ses = 0.3;
  double weight_damped_trend = 0.2;
  std::size_t seasonal_period = 7;
  double damping = 0.98;

  /// Weights must be nonnegative and sum to 1 (within 1e-9).
  void validate() const;
};

/// Horizon-aligned point forecasts per item, original units.
struct ForecastSet {
  std::size_t horizon = 0;
  std::map<std::string, std::vector<double>> items;
};

/// Final smoothed level of simple exponential smoothing at a given alpha
/// (alpha = 1 degenerates to the naive last-observation forecast).
double ses_level(std::span<const double> train, double alpha);

/// Alpha from the grid {0.1 .. 0.9} minimizing in-sample one-step-ahead
/// squared error; ties resolve to the smaller alpha.
double fit_ses_alpha(std::span<const double> train);

/// Forecast `horizon` steps from a training slice. Deterministic; the seed
/// is part of the interface for forecaster implementations that need one
/// (the built-in members do not).
std::vector<double> forecast(std::span<const double> train,
                             std::size_t horizon, const EnsembleSpec& spec,
                             std::uint64_t seed = 0);

/// Forecast with a known exogenous covariate, the way covariate-aware AutoML
/// forecasters treat e.g. price: a linear demand response is learned from
/// the training window (ordinary least squares after removing each side's
/// seasonal phase means), the fitted response is stripped from the history,
/// the base ensemble forecasts the adjusted series, and the response is
/// re-applied at the known future covariate values. The response slope is
/// estimated from the data only; a covariate with no demand relation gets a
/// slope near zero and the output degrades to `forecast`.
std::vector<double> forecast_with_covariate(
    std::span<const double> train, std::span<const double> covariate_train,
    std::span<const double> covariate_future, const EnsembleSpec& spec,
    std::uint64_t seed = 0);

/// Load externally produced forecasts from a CSV with header
/// `item_id,step,forecast`. Every item in `expected_items` must provide
/// exactly steps 1..horizon with finite values; unknown items are rejected.
ForecastSet load_external_forecasts(const std::string& path,
                                    std::size_t horizon,
                                    const std::vector<std::string>& expected_items);

}  // namespace tsx
