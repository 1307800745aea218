#pragma once

#include <string>
#include <vector>

#include "tsx/series.hpp"
#include "tsx/treeshap.hpp"
#include "tsx/workflow.hpp"

namespace tsx {

/// Map a normalized-scale explanation to original units: phi_j scale by
/// sigma_eff, phi_0 by sigma_eff plus mu, prediction through denormalize.
/// Additivity is preserved exactly (affine map). Throws ValidationError when
/// the explanation is already in original units.
Explanation denormalize_explanation(const Explanation& e,
                                    const SeriesStats& stats);

enum class CalibrationStatus {
  calibrated,         // s applied, reconstruction matches y_ag
  skipped_agreement,  // sum phi ~ 0 and y_ag ~ phi_0: nothing to rescale
  failed_degenerate,  // sum phi ~ 0 but y_ag != phi_0: s undefined
  zero_forecast_rule, // y_ag == 0: calibrated, but a rule-based explanation
                      // is the recommended presentation
};

const char* to_string(CalibrationStatus status);

/// An explanation rescaled so attributions sum to the black-box forecast's
/// deviation from the base value: phi_calib = s * phi with
/// s = (y_ag - phi_0) / sum phi.
struct CalibratedExplanation {
  Explanation source;  // original units, unchanged
  double y_ag = 0.0;
  double scale = 1.0;  // NaN when failed_degenerate
  std::vector<double> calibrated;
  CalibrationStatus status = CalibrationStatus::calibrated;
};

/// Post-hoc calibration against the black-box forecast. All edge cases are
/// encoded in the status, never thrown. "sum phi ~ 0" means
/// |sum phi| <= 1e-9 * max(1, |phi_0|).
CalibratedExplanation calibrate(const Explanation& original_units,
                                double y_ag);

/// Side-by-side demonstration that SHAP explanations need per-item
/// normalization on mixed-scale corpora: trains a raw-target and a
/// normalized-target surrogate on the same corpus and reports, per item and
/// mode, the global base value, the item-level mean of the targets, their
/// absolute gap, and the mean total attribution mass.
struct NormalizationComparison {
  struct Row {
    std::string item_id;
    bool normalized = false;
    double phi0 = 0.0;       // global base value of that mode's surrogate
    double item_mean = 0.0;  // item mean of the mode's targets
    double abs_gap = 0.0;    // |phi0 - item_mean|
    double sum_abs_phi = 0.0;
  };
  std::vector<Row> rows;
  double phi0_raw = 0.0;
  double phi0_normalized = 0.0;
  /// Set when demand scales are homogeneous (max/min item mean < 10).
  bool uninformative = false;
};

NormalizationComparison normalization_comparison(
    const SeriesSet& corpus, const PipelineSettings& settings);

}  // namespace tsx
