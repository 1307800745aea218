#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsx/features.hpp"
#include "tsx/series.hpp"

namespace tsx {

/// Gradient-boosting hyperparameters. The exact (sorted) split search is
/// fully deterministic; `seed` is carried for interface stability.
struct TrainParams {
  std::size_t n_trees = 200;
  double learning_rate = 0.1;
  std::size_t max_depth = 6;
  std::size_t min_samples_leaf = 5;
  double min_gain = 1e-7;
  std::uint64_t seed = 0;

  void validate() const;
};

/// One node of a regression tree. Internal nodes route x[feature] <=
/// threshold to `left` (NaN follows `default_left`); `cover` counts the
/// training rows through the node and backs the TreeSHAP weighting.
struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  bool default_left = true;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;
  double cover = 0.0;

  bool is_leaf() const { return feature < 0; }
};

/// A single regression tree, root at index 0; children always follow their
/// parent in the node array.
struct Tree {
  std::vector<TreeNode> nodes;

  double value_at(std::span<const double> row) const;
  /// Cover-weighted expected output over the training distribution.
  double expectation() const;
};

/// Additive tree ensemble: prediction = base_score + lr * sum of tree values.
class TreeEnsemble {
 public:
  TreeEnsemble() = default;
  TreeEnsemble(double base_score, double learning_rate,
               std::vector<std::string> feature_names, std::vector<Tree> trees);

  double base_score() const { return base_score_; }
  double learning_rate() const { return learning_rate_; }
  const std::vector<Tree>& trees() const { return trees_; }
  const std::vector<std::string>& feature_names() const {
    return feature_names_;
  }

  /// Predict one row; the row length must match the feature schema.
  double predict(std::span<const double> row) const;
  /// Predict every row of a matrix whose schema must match exactly.
  std::vector<double> predict(const FeatureMatrix& matrix) const;

  /// Cover-weighted expected prediction (the SHAP base value).
  double expectation() const;

  nlohmann::json to_json() const;
  static TreeEnsemble from_json(const nlohmann::json& j);

  /// Structural checks: child indices, positive covers, cover additivity.
  /// Throws ValidationError "corrupt model" on violation.
  void validate() const;

 private:
  double base_score_ = 0.0;
  double learning_rate_ = 1.0;
  std::vector<std::string> feature_names_;
  std::vector<Tree> trees_;
};

/// Squared-error gradient boosting with exact greedy variance-reduction
/// splits; missing values are routed to the side chosen by gain during
/// training. Deterministic: ties prefer the lowest feature index, then the
/// lowest threshold.
TreeEnsemble fit(const FeatureMatrix& X, std::span<const double> targets,
                 const TrainParams& params);

}  // namespace tsx
