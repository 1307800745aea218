// Compares the OpenMP batch kernels against their serial reference
// implementations on synthetic workloads and prints timings plus a result
// digest so a mismatch is visible immediately.

#include <chrono>
#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "tsx/forecastability.hpp"
#include "tsx/rng.hpp"
#include "tsx/surrogate.hpp"
#include "tsx/synthetic.hpp"
#include "tsx/treeshap.hpp"
#include "tsx/workflow.hpp"

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

template <typename F>
double timed(F&& fn) {
  const auto start = std::chrono::steady_clock::now();
  fn();
  return seconds_since(start);
}

void report(const char* name, double serial_s, double parallel_s, bool equal) {
  std::printf("%-28s serial %8.3fs   parallel %8.3fs   speedup %5.2fx   %s\n",
              name, serial_s, parallel_s, serial_s / parallel_s,
              equal ? "results identical" : "RESULTS DIFFER");
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
  std::printf("built without OpenMP; parallel kernels run serially\n");
#endif

  // Workload: a mid-sized mixed corpus and a surrogate trained on it.
  tsx::GenConfig gen;
  gen.seed = 99;
  gen.length = 420;
  gen.groups.push_back({.kind = "weekly",
                        .count = 24,
                        .prefix = "sig",
                        .scale_min = 50,
                        .scale_max = 500,
                        .noise = 0.1});
  gen.groups.push_back({.kind = "noise",
                        .count = 8,
                        .prefix = "noise",
                        .scale_min = 50,
                        .scale_max = 500,
                        .noise = 0.4});
  const tsx::GeneratedCorpus corpus = tsx::gen_synthetic(gen);

  tsx::PipelineSettings settings;
  settings.horizon = 28;
  settings.train.n_trees = 300;
  const tsx::CorpusModel cm = tsx::build_corpus_model(corpus.set, settings);

  {
    std::vector<tsx::Explanation> serial_out, parallel_out;
    const double ts = timed(
        [&] { serial_out = tsx::explain_rows_serial(cm.model, cm.matrix); });
    const double tp =
        timed([&] { parallel_out = tsx::explain_rows(cm.model, cm.matrix); });
    bool equal = serial_out.size() == parallel_out.size();
    for (std::size_t i = 0; equal && i < serial_out.size(); ++i) {
      equal = serial_out[i].attributions == parallel_out[i].attributions &&
              serial_out[i].base_value == parallel_out[i].base_value;
    }
    report("treeshap explain_rows", ts, tp, equal);
  }

  {
    tsx::NoiseBenchmark serial_b{}, parallel_b{};
    const double ts = timed(
        [&] { serial_b = tsx::noise_benchmark_serial(512, 400, 0.1, 7); });
    const double tp =
        timed([&] { parallel_b = tsx::noise_benchmark(512, 400, 0.1, 7); });
    const bool equal = serial_b.mean == parallel_b.mean &&
                       serial_b.stddev == parallel_b.stddev &&
                       serial_b.p95 == parallel_b.p95;
    report("noise_benchmark", ts, tp, equal);
  }

  {
    const auto items = tsx::preprocess_corpus(corpus.set, settings.horizon);
    tsx::ForecastabilityParams params;
    params.replicates = 100;
    params.seed = 7;
    params.rolling_window = 112;
    params.rolling_step = 28;
    std::vector<tsx::ForecastabilityReport> serial_r, parallel_r;
    const double ts =
        timed([&] { serial_r = tsx::score_items_serial(items, params); });
    const double tp = timed([&] { parallel_r = tsx::score_items(items, params); });
    bool equal = serial_r.size() == parallel_r.size();
    for (std::size_t i = 0; equal && i < serial_r.size(); ++i) {
      equal = serial_r[i].sp == parallel_r[i].sp &&
              serial_r[i].benchmark.mean == parallel_r[i].benchmark.mean;
    }
    report("forecastability score_items", ts, tp, equal);
  }

  return 0;
}
