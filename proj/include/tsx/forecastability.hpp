#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsx/series.hpp"

namespace tsx {

/// Spectral predictability score. `degenerate` marks a spectrum with no
/// residual power after linear detrending (e.g. a perfectly linear series),
/// for which SP is defined as 1.
struct SpResult {
  double sp = 0.0;
  bool degenerate = false;
};

/// SP = 1 - H(p) / log(#bins), where p is the detrended periodogram at
/// positive frequencies normalized to a probability vector and H is its
/// Shannon entropy. 0 is noise-like, 1 a pure tone. Note: this normalized
/// spectral entropy formulation bounds SP in [0, 1]; it is not Goerg's Omega
/// scaling. Requires length >= 8.
SpResult spectral_predictability(std::span<const double> values);

/// Summary of SP over pure-noise replicates of matched length and sparsity.
struct NoiseBenchmark {
  std::size_t length = 0;
  std::size_t replicates = 0;
  double sparsity = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  double p95 = 0.0;  // nearest-rank 95th percentile
};

/// SP of `replicates` standard-Gaussian series of length `length` with a
/// `sparsity` fraction of positions forced to zero (seeded uniform choice
/// without replacement). Deterministic for a fixed seed regardless of
/// thread count: replicate r draws from its own derived stream. Requires
/// length >= 8 and replicates >= 10.
NoiseBenchmark noise_benchmark(std::size_t length, std::size_t replicates,
                               double sparsity, std::uint64_t seed);
NoiseBenchmark noise_benchmark_serial(std::size_t length,
                                      std::size_t replicates, double sparsity,
                                      std::uint64_t seed);

/// Forecastable iff the series' SP strictly exceeds the benchmark mean.
bool classify(double sp, const NoiseBenchmark& benchmark);

struct RollingPoint {
  std::size_t start = 0;
  double sp = 0.0;
};

/// SP over sliding windows [start, start + window). Requires window >= 8 and
/// window <= length.
std::vector<RollingPoint> rolling_sp(std::span<const double> values,
                                     std::size_t window, std::size_t step);

struct ForecastabilityParams {
  std::size_t replicates = 100;
  /// Benchmark sparsity; negative means "match the series' zero fraction".
  double sparsity = -1.0;
  std::uint64_t seed = 0;
  /// Rolling trace window/step; 0 disables the trace.
  std::size_t rolling_window = 0;
  std::size_t rolling_step = 0;
};

struct ForecastabilityReport {
  std::string item_id;
  std::size_t length = 0;
  double sp = 0.0;
  bool degenerate = false;
  NoiseBenchmark benchmark;
  bool forecastable = false;
  std::vector<RollingPoint> rolling;
};

/// Score a batch of processed series. Per-item benchmark streams are derived
/// from (seed, item id), so results do not depend on item order or thread
/// count. The parallel kernel writes one slot per item; the serial variant
/// is the reference it is tested against.
std::vector<ForecastabilityReport> score_items(
    std::span<const ProcessedSeries> items, const ForecastabilityParams& params);
std::vector<ForecastabilityReport> score_items_serial(
    std::span<const ProcessedSeries> items, const ForecastabilityParams& params);

}  // namespace tsx
