#include "tsx/blackbox.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <set>

#include "tsx/csv.hpp"

namespace tsx {

namespace {

double seasonal_naive(std::span<const double> train, std::size_t period,
                      std::size_t h) {
  // Series shorter than one period degrade to the plain naive forecast.
  if (train.size() < period) return train.back();
  const std::size_t phase = (h - 1) % period;
  return train[train.size() - period + phase];
}

struct DampedTrend {
  double level = 0.0;  // least-squares fit at the last training index
  double slope = 0.0;
};

DampedTrend fit_damped(std::span<const double> train) {
  const std::size_t n = train.size();
  DampedTrend fit;
  if (n == 1) {
    fit.level = train[0];
    return fit;
  }
  const double nn = static_cast<double>(n);
  const double t_mean = (nn - 1.0) / 2.0;
  double y_mean = 0.0;
  for (const double y : train) y_mean += y;
  y_mean /= nn;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double dt = static_cast<double>(t) - t_mean;
    sxy += dt * (train[t] - y_mean);
    sxx += dt * dt;
  }
  fit.slope = sxy / sxx;
  fit.level = y_mean + fit.slope * (nn - 1.0 - t_mean);
  return fit;
}

}  // namespace

double ses_level(std::span<const double> train, double alpha) {
  double level = train[0];
  for (std::size_t t = 1; t < train.size(); ++t) {
    level += alpha * (train[t] - level);
  }
  return level;
}

double fit_ses_alpha(std::span<const double> train) {
  double best_alpha = 0.1;
  double best_sse = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= 9; ++i) {
    const double alpha = 0.1 * i;
    double level = train[0];
    double sse = 0.0;
    for (std::size_t t = 1; t < train.size(); ++t) {
      const double err = train[t] - level;
      sse += err * err;
      level += alpha * err;
    }
    if (sse < best_sse) {
      best_sse = sse;
      best_alpha = alpha;
    }
  }
  return best_alpha;
}

void EnsembleSpec::validate() const {
  const double weights[] = {weight_seasonal_naive, weight_ses,
                            weight_damped_trend};
  double sum = 0.0;
  for (const double w : weights) {
    if (w < 0.0) throw ValidationError("ensemble weights must be >= 0");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ValidationError("ensemble weights must sum to 1");
  }
  if (seasonal_period == 0) {
    throw ValidationError("seasonal period must be >= 1");
  }
  if (damping <= 0.0 || damping > 1.0) {
    throw ValidationError("damping must be in (0, 1]");
  }
}

std::vector<double> forecast(std::span<const double> train,
                             std::size_t horizon, const EnsembleSpec& spec,
                             std::uint64_t /*seed*/) {
  spec.validate();
  if (train.empty()) throw ValidationError("forecast: empty training slice");

  const double level =
      spec.weight_ses > 0.0 ? ses_level(train, fit_ses_alpha(train)) : 0.0;
  const DampedTrend damped = fit_damped(train);

  std::vector<double> out(horizon);
  double damp_sum = 0.0;
  double damp_pow = 1.0;
  for (std::size_t h = 1; h <= horizon; ++h) {
    damp_pow *= spec.damping;
    damp_sum += damp_pow;
    const double sn = seasonal_naive(train, spec.seasonal_period, h);
    const double dt = damped.level + damped.slope * damp_sum;
    out[h - 1] = spec.weight_seasonal_naive * sn + spec.weight_ses * level +
                 spec.weight_damped_trend * dt;
  }
  return out;
}

std::vector<double> forecast_with_covariate(
    std::span<const double> train, std::span<const double> covariate_train,
    std::span<const double> covariate_future, const EnsembleSpec& spec,
    std::uint64_t seed) {
  if (covariate_train.size() != train.size()) {
    throw ValidationError("covariate does not align with the training slice");
  }
  const std::size_t n = train.size();
  const std::size_t period = spec.seasonal_period;

  // Partial out per-phase means from both sides, then fit the slope.
  std::vector<double> y_phase(period, 0.0), c_phase(period, 0.0);
  std::vector<std::size_t> phase_count(period, 0);
  for (std::size_t t = 0; t < n; ++t) {
    y_phase[t % period] += train[t];
    c_phase[t % period] += covariate_train[t];
    phase_count[t % period] += 1;
  }
  for (std::size_t p = 0; p < period; ++p) {
    if (phase_count[p] == 0) continue;
    y_phase[p] /= static_cast<double>(phase_count[p]);
    c_phase[p] /= static_cast<double>(phase_count[p]);
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double cy = train[t] - y_phase[t % period];
    const double cc = covariate_train[t] - c_phase[t % period];
    sxy += cc * cy;
    sxx += cc * cc;
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;

  double cov_mean = 0.0;
  for (const double c : covariate_train) cov_mean += c;
  cov_mean /= static_cast<double>(n);

  // Forecast the covariate-free series, then re-apply the learned response
  // at the known future covariate values.
  std::vector<double> adjusted(n);
  for (std::size_t t = 0; t < n; ++t) {
    adjusted[t] = train[t] - slope * (covariate_train[t] - cov_mean);
  }
  std::vector<double> out =
      forecast(adjusted, covariate_future.size(), spec, seed);
  for (std::size_t h = 0; h < out.size(); ++h) {
    out[h] += slope * (covariate_future[h] - cov_mean);
  }
  return out;
}

ForecastSet load_external_forecasts(
    const std::string& path, std::size_t horizon,
    const std::vector<std::string>& expected_items) {
  const auto lines = csv::read_lines(path);
  if (lines.empty()) throw ValidationError("empty forecast file: " + path);
  const auto header = csv::split_line(lines[0]);
  if (header.size() != 3 || header[0] != "item_id" || header[1] != "step" ||
      header[2] != "forecast") {
    throw ValidationError("line 1: expected header 'item_id,step,forecast'");
  }

  const std::set<std::string> known(expected_items.begin(),
                                    expected_items.end());
  ForecastSet set;
  set.horizon = horizon;
  std::map<std::string, std::vector<bool>> seen;
  for (const std::string& item : expected_items) {
    set.items[item].assign(horizon, 0.0);
    seen[item].assign(horizon, false);
  }

  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty() || lines[i] == "\r") continue;
    const auto fields = csv::split_line(lines[i]);
    const std::string at = "line " + std::to_string(i + 1);
    if (fields.size() != 3) {
      throw ValidationError(at + ": expected 3 columns");
    }
    if (!known.count(fields[0])) {
      throw ValidationError(at + ": unknown item '" + fields[0] + "'");
    }
    std::size_t step = 0;
    {
      const char* first = fields[1].data();
      const char* last = first + fields[1].size();
      const auto [ptr, ec] = std::from_chars(first, last, step);
      if (ec != std::errc() || ptr != last || step < 1 || step > horizon) {
        throw ValidationError(at + ": invalid step '" + fields[1] + "'");
      }
    }
    double value = 0.0;
    {
      const char* first = fields[2].data();
      const char* last = first + fields[2].size();
      const auto [ptr, ec] = std::from_chars(first, last, value);
      if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
        throw ValidationError(at + ": invalid forecast '" + fields[2] + "'");
      }
    }
    if (seen[fields[0]][step - 1]) {
      throw ValidationError(at + ": duplicate step " + fields[1] +
                            " for item " + fields[0]);
    }
    seen[fields[0]][step - 1] = true;
    set.items[fields[0]][step - 1] = value;
  }

  for (const auto& [item, flags] : seen) {
    for (std::size_t s = 0; s < flags.size(); ++s) {
      if (!flags[s]) {
        throw ValidationError("item " + item + ": missing step " +
                              std::to_string(s + 1));
      }
    }
  }
  return set;
}

}  // namespace tsx
