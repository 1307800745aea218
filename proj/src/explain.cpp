#include "tsx/explain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tsx {

Explanation denormalize_explanation(const Explanation& e,
                                    const SeriesStats& stats) {
  if (e.units == Explanation::Units::original) {
    throw ValidationError("explanation is already in original units");
  }
  Explanation out = e;
  out.units = Explanation::Units::original;
  for (double& phi : out.attributions) phi *= stats.sigma_eff;
  out.base_value = stats.sigma_eff * e.base_value + stats.mu;
  out.prediction = denormalize(e.prediction, stats);
  return out;
}

const char* to_string(CalibrationStatus status) {
  switch (status) {
    case CalibrationStatus::calibrated: return "calibrated";
    case CalibrationStatus::skipped_agreement: return "skipped-agreement";
    case CalibrationStatus::failed_degenerate: return "failed-degenerate";
    case CalibrationStatus::zero_forecast_rule: return "zero-forecast-rule";
  }
  return "unknown";
}

CalibratedExplanation calibrate(const Explanation& original_units,
                                double y_ag) {
  CalibratedExplanation c;
  c.source = original_units;
  c.y_ag = y_ag;

  const double phi0 = original_units.base_value;
  const double sum_phi = original_units.attribution_sum();
  const double eps = 1e-9 * std::max(1.0, std::abs(phi0));

  if (std::abs(sum_phi) <= eps) {
    // The surrogate predicts its base value; there is nothing to rescale.
    c.calibrated = original_units.attributions;
    c.scale = 1.0;
    c.status = std::abs(y_ag - phi0) <= eps
                   ? CalibrationStatus::skipped_agreement
                   : CalibrationStatus::failed_degenerate;
    if (c.status == CalibrationStatus::failed_degenerate) {
      c.scale = std::numeric_limits<double>::quiet_NaN();
    }
    return c;
  }

  c.scale = (y_ag - phi0) / sum_phi;
  c.calibrated.reserve(original_units.attributions.size());
  for (const double phi : original_units.attributions) {
    c.calibrated.push_back(c.scale * phi);
  }
  c.status = y_ag == 0.0 ? CalibrationStatus::zero_forecast_rule
                         : CalibrationStatus::calibrated;
  return c;
}

NormalizationComparison normalization_comparison(
    const SeriesSet& corpus, const PipelineSettings& settings) {
  if (corpus.items.size() < 1) throw ValidationError("empty corpus");

  NormalizationComparison out;

  PipelineSettings raw = settings;
  raw.normalize_targets = false;
  PipelineSettings norm = settings;
  norm.normalize_targets = true;

  const CorpusModel raw_model = build_corpus_model(corpus, raw);
  const CorpusModel norm_model = build_corpus_model(corpus, norm);

  // Scale spread check uses the train-slice means.
  double min_mu = std::numeric_limits<double>::infinity();
  double max_mu = 0.0;
  for (const SeriesStats& s : raw_model.stats) {
    min_mu = std::min(min_mu, std::abs(s.mu));
    max_mu = std::max(max_mu, std::abs(s.mu));
  }
  out.uninformative = corpus.items.size() < 2 || max_mu < 10.0 * min_mu;

  const auto explain_mode = [&](const CorpusModel& cm, bool normalized) {
    const std::vector<Explanation> exps = explain_rows(cm.model, cm.matrix);
    const double phi0 = exps.empty() ? 0.0 : exps.front().base_value;
    for (std::size_t i = 0; i < cm.items.size(); ++i) {
      NormalizationComparison::Row row;
      row.item_id = cm.items[i].item_id;
      row.normalized = normalized;
      row.phi0 = phi0;
      double target_mean = 0.0;
      double mass = 0.0;
      std::size_t count = 0;
      for (std::size_t r = 0; r < cm.keys.size(); ++r) {
        if (cm.keys[r].item_id != row.item_id) continue;
        target_mean += cm.targets[r];
        double abs_sum = 0.0;
        for (const double phi : exps[r].attributions) abs_sum += std::abs(phi);
        mass += abs_sum;
        ++count;
      }
      row.item_mean = target_mean / static_cast<double>(count);
      row.abs_gap = std::abs(phi0 - row.item_mean);
      row.sum_abs_phi = mass / static_cast<double>(count);
      out.rows.push_back(std::move(row));
    }
    return phi0;
  };

  out.phi0_raw = explain_mode(raw_model, false);
  out.phi0_normalized = explain_mode(norm_model, true);
  return out;
}

}  // namespace tsx
