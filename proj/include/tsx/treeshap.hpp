#pragma once

#include <span>
#include <string>
#include <vector>

#include "tsx/surrogate.hpp"

namespace tsx {

/// SHAP decomposition of one prediction: prediction = base_value + sum of
/// attributions, in either normalized or original units.
struct Explanation {
  enum class Units { normalized, original };

  double base_value = 0.0;
  std::vector<double> attributions;
  double prediction = 0.0;
  Units units = Units::normalized;

  double attribution_sum() const;
};

/// Exact path-dependent TreeSHAP (cover-weighted conditional expectations,
/// polynomial-time EXTEND/UNWIND recursion). Per-tree attributions are
/// summed across trees and scaled by the learning rate; the base value is
/// the cover-weighted expected ensemble output. Throws ValidationError
/// "corrupt model" on a zero-cover node.
Explanation tree_shap(const TreeEnsemble& model, std::span<const double> row);

/// Exact Shapley values by subset enumeration over the features the model
/// actually splits on (error "oracle intractable" above 15). Features "out"
/// of a subset are marginalized by descending both children weighted by
/// cover, i.e. the same conditioning tree_shap uses, so the two routes must
/// agree. The oracle exists to verify tree_shap and never shares its code
/// path.
std::vector<double> brute_force_shap(const TreeEnsemble& model,
                                     std::span<const double> row);

/// Explain every row of a matrix. The parallel kernel distributes rows over
/// OpenMP threads; each row writes only its own slot, so the result is
/// bit-identical to the serial reference.
std::vector<Explanation> explain_rows(const TreeEnsemble& model,
                                      const FeatureMatrix& matrix);
std::vector<Explanation> explain_rows_serial(const TreeEnsemble& model,
                                             const FeatureMatrix& matrix);

}  // namespace tsx
