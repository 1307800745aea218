#include "tsx/forecastability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tsx/rng.hpp"

namespace tsx {

namespace {

// Periodogram of `r` at positive frequencies k = 1..n/2 via direct DFT.
// The per-frequency rotation uses the numerically stable trig recurrence, so
// no trig call sits in the inner loop.
std::vector<double> periodogram(std::span<const double> r) {
  const std::size_t n = r.size();
  const std::size_t bins = n / 2;
  std::vector<double> power(bins);
  const double two_pi = 6.283185307179586476925286766559;
  for (std::size_t k = 1; k <= bins; ++k) {
    const double delta = -two_pi * static_cast<double>(k) / static_cast<double>(n);
    const double alpha = 2.0 * std::sin(delta / 2.0) * std::sin(delta / 2.0);
    const double beta = std::sin(delta);
    double c = 1.0, s = 0.0;  // cos/sin of k*t*2pi/n, t = 0
    double re = 0.0, im = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      re += r[t] * c;
      im += r[t] * s;
      const double c_next = c - (alpha * c + beta * s);
      s = s - (alpha * s - beta * c);
      c = c_next;
    }
    power[k - 1] = re * re + im * im;
  }
  return power;
}

double zero_fraction(std::span<const double> values) {
  std::size_t zeros = 0;
  for (const double v : values) zeros += v == 0.0;
  return static_cast<double>(zeros) / static_cast<double>(values.size());
}

std::vector<double> noise_series(std::size_t length, double sparsity,
                                 Rng& rng) {
  std::vector<double> y(length);
  for (double& v : y) v = rng.normal();
  const auto n_zero =
      static_cast<std::size_t>(std::llround(sparsity * static_cast<double>(length)));
  if (n_zero > 0) {
    // Partial Fisher-Yates: the first n_zero entries of a shuffled index
    // vector are the zeroed positions.
    std::vector<std::size_t> idx(length);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < n_zero; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(length - i));
      std::swap(idx[i], idx[j]);
      y[idx[i]] = 0.0;
    }
  }
  return y;
}

NoiseBenchmark summarize(std::vector<double> sp, std::size_t length,
                         double sparsity) {
  NoiseBenchmark b;
  b.length = length;
  b.replicates = sp.size();
  b.sparsity = sparsity;
  const double n = static_cast<double>(sp.size());
  b.mean = std::accumulate(sp.begin(), sp.end(), 0.0) / n;
  double ss = 0.0;
  for (const double v : sp) ss += (v - b.mean) * (v - b.mean);
  b.stddev = std::sqrt(ss / n);
  std::sort(sp.begin(), sp.end());
  const std::size_t rank =
      static_cast<std::size_t>(std::ceil(0.95 * n)) - 1;  // nearest rank
  b.p95 = sp[std::min(rank, sp.size() - 1)];
  return b;
}

double replicate_sp(std::size_t length, double sparsity, std::uint64_t seed,
                    std::size_t replicate) {
  Rng rng = Rng::stream(seed, replicate);
  const std::vector<double> y = noise_series(length, sparsity, rng);
  if (std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0; })) {
    throw ValidationError("no signal");
  }
  return spectral_predictability(y).sp;
}

void check_benchmark_args(std::size_t length, std::size_t replicates,
                          double sparsity) {
  if (length < 8) throw ValidationError("noise benchmark: length must be >= 8");
  if (replicates < 10) {
    throw ValidationError("noise benchmark: need at least 10 replicates");
  }
  if (sparsity < 0.0 || sparsity > 1.0) {
    throw ValidationError("noise benchmark: sparsity must be in [0, 1]");
  }
}

ForecastabilityReport score_one(const ProcessedSeries& item,
                                const ForecastabilityParams& params) {
  if (item.length() < 8) {
    throw ValidationError("item " + item.item_id +
                          ": too short for spectral predictability");
  }
  ForecastabilityReport r;
  r.item_id = item.item_id;
  r.length = item.length();
  const SpResult sp = spectral_predictability(item.values);
  r.sp = sp.sp;
  r.degenerate = sp.degenerate;
  const double sparsity =
      params.sparsity < 0.0 ? zero_fraction(item.values) : params.sparsity;
  const std::uint64_t item_seed = params.seed ^ fnv1a(item.item_id);
  r.benchmark = noise_benchmark_serial(item.length(), params.replicates,
                                       sparsity, item_seed);
  r.forecastable = classify(r.sp, r.benchmark);
  if (params.rolling_window >= 8 &&
      params.rolling_window <= item.length()) {
    r.rolling = rolling_sp(item.values, params.rolling_window,
                           params.rolling_step == 0 ? params.rolling_window
                                                    : params.rolling_step);
  }
  return r;
}

}  // namespace

SpResult spectral_predictability(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 8) {
    throw ValidationError("spectral predictability: need at least 8 points");
  }

  // Linear least-squares detrend over t = 0..n-1.
  const double nn = static_cast<double>(n);
  const double t_mean = (nn - 1.0) / 2.0;
  double y_mean = 0.0;
  for (const double v : values) y_mean += v;
  y_mean /= nn;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double dt = static_cast<double>(t) - t_mean;
    sxy += dt * (values[t] - y_mean);
    sxx += dt * dt;
    syy += (values[t] - y_mean) * (values[t] - y_mean);
  }
  const double slope = sxy / sxx;
  std::vector<double> resid(n);
  double resid_power = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    resid[t] = values[t] - y_mean - slope * (static_cast<double>(t) - t_mean);
    resid_power += resid[t] * resid[t];
  }

  // No power left after the trend: a perfectly predictable series.
  if (syy == 0.0 || resid_power <= 1e-18 * syy) return {1.0, true};

  const std::vector<double> power = periodogram(resid);
  const double total = std::accumulate(power.begin(), power.end(), 0.0);
  if (total <= 0.0) return {1.0, true};

  double entropy = 0.0;
  for (const double p : power) {
    if (p > 0.0) {
      const double q = p / total;
      entropy -= q * std::log(q);
    }
  }
  const double max_entropy = std::log(static_cast<double>(power.size()));
  double sp = 1.0 - entropy / max_entropy;
  sp = std::clamp(sp, 0.0, 1.0);
  return {sp, false};
}

NoiseBenchmark noise_benchmark_serial(std::size_t length,
                                      std::size_t replicates, double sparsity,
                                      std::uint64_t seed) {
  check_benchmark_args(length, replicates, sparsity);
  std::vector<double> sp(replicates);
  for (std::size_t r = 0; r < replicates; ++r) {
    sp[r] = replicate_sp(length, sparsity, seed, r);
  }
  return summarize(std::move(sp), length, sparsity);
}

NoiseBenchmark noise_benchmark(std::size_t length, std::size_t replicates,
                               double sparsity, std::uint64_t seed) {
  check_benchmark_args(length, replicates, sparsity);
  std::vector<double> sp(replicates);
  std::exception_ptr error;
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < static_cast<std::int64_t>(replicates); ++r) {
    try {
      sp[static_cast<std::size_t>(r)] =
          replicate_sp(length, sparsity, seed, static_cast<std::size_t>(r));
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return summarize(std::move(sp), length, sparsity);
}

bool classify(double sp, const NoiseBenchmark& benchmark) {
  return sp > benchmark.mean;
}

std::vector<RollingPoint> rolling_sp(std::span<const double> values,
                                     std::size_t window, std::size_t step) {
  if (window < 8) throw ValidationError("rolling SP: window must be >= 8");
  if (window > values.size()) {
    throw ValidationError("rolling SP: window exceeds series length");
  }
  if (step == 0) throw ValidationError("rolling SP: step must be >= 1");
  std::vector<RollingPoint> trace;
  for (std::size_t start = 0; start + window <= values.size(); start += step) {
    trace.push_back(
        {start, spectral_predictability(values.subspan(start, window)).sp});
  }
  return trace;
}

std::vector<ForecastabilityReport> score_items_serial(
    std::span<const ProcessedSeries> items,
    const ForecastabilityParams& params) {
  std::vector<ForecastabilityReport> out(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    out[i] = score_one(items[i], params);
  }
  return out;
}

std::vector<ForecastabilityReport> score_items(
    std::span<const ProcessedSeries> items,
    const ForecastabilityParams& params) {
  std::vector<ForecastabilityReport> out(items.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(items.size()); ++i) {
    try {
      out[static_cast<std::size_t>(i)] =
          score_one(items[static_cast<std::size_t>(i)], params);
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace tsx
