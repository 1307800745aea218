#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tsx/series.hpp"
#include "tsx/workflow.hpp"

namespace tsx {

/// Standard agreement metrics between a prediction and a reference vector.
/// MAPE averages |pred - ref| / |ref| over entries with |ref| > 1e-12 and
/// reports how many were excluded. R^2 with zero reference variance is
/// flagged degenerate (1 if the residuals are zero too, else 0).
struct Metrics {
  double mae = 0.0;
  double mape = 0.0;  // percent
  double rmse = 0.0;
  double r2 = 0.0;
  std::size_t mape_excluded = 0;
  bool r2_degenerate = false;
};

Metrics compute_metrics(std::span<const double> pred,
                        std::span<const double> ref);

/// Pearson product-moment correlation; requires length >= 3 and nonzero
/// variance on both sides (ValidationError "degenerate" otherwise).
double pearson(std::span<const double> x, std::span<const double> y);

/// Spearman rank correlation (average ranks on ties).
double spearman(std::span<const double> x, std::span<const double> y);

/// Synthetic feature with a known effect: demand delta at time t is
/// -beta * (price_t - base_price). The price path is a seeded random walk
/// with steps in {-1, 0, +1} times step_frac * base_price, clipped to
/// +/- clip_frac * base_price around the base.
struct InjectionSpec {
  struct Item {
    double base_price = 10.0;
    double beta = 10.0;
  };
  std::string feature_name = "price";
  std::map<std::string, Item> items;  // per-item overrides
  Item defaults;
  /// When beta_min < beta_max, items without an explicit entry draw beta
  /// uniformly from [beta_min, beta_max] on a per-item seeded stream.
  double beta_min = 0.0;
  double beta_max = 0.0;
  std::uint64_t seed = 0;
  double step_frac = 0.05;
  double clip_frac = 0.30;

  Item for_item(const std::string& id) const;
};

/// Deterministic price path over `length` positions for one item.
std::vector<double> price_path(const InjectionSpec& spec,
                               const std::string& item_id, std::size_t length);

/// One scatter pair of the faithfulness check.
struct FaithfulnessPair {
  std::string item_id;
  std::size_t step = 0;
  double price = 0.0;
  double phi_injected = 0.0;  // denormalized SHAP of the injected feature
  double ground_truth = 0.0;  // -beta * (price - base_price)
};

struct FaithfulnessReport {
  double pearson_r = 0.0;
  std::vector<FaithfulnessPair> pairs;
  bool degenerate = false;  // no injected variance
};

/// The feature-injection experiment: modify demand by the known price
/// effect, re-run the black box so the effect flows into the forecasts,
/// retrain the surrogate with the price column, explain the horizon rows,
/// and correlate the denormalized injected-feature attributions with the
/// ground-truth effects. Ground truth is computed from the injection spec
/// alone, never from model output.
FaithfulnessReport inject_and_evaluate(const SeriesSet& corpus,
                                       const InjectionSpec& spec,
                                       const PipelineSettings& settings);

/// Per-item inputs to the SP-versus-performance analysis.
struct ItemPerformance {
  std::string item_id;
  double sp = 0.0;
  double fidelity_r2 = 0.0;
  double fidelity_mape = 0.0;
  double accuracy_r2 = 0.0;
  double accuracy_mape = 0.0;
};

struct SpCorrelations {
  double spearman_sp_fidelity_r2 = 0.0;
  double pearson_sp_fidelity_r2 = 0.0;
  double spearman_sp_fidelity_mape = 0.0;
  double pearson_sp_fidelity_mape = 0.0;
  double spearman_sp_accuracy_r2 = 0.0;
  double pearson_sp_accuracy_r2 = 0.0;
  double spearman_sp_accuracy_mape = 0.0;
  double pearson_sp_accuracy_mape = 0.0;
  std::size_t n_items = 0;
  bool low_sample_warning = false;  // fewer than 10 items
};

SpCorrelations correlate_sp(std::span<const ItemPerformance> items);

}  // namespace tsx
