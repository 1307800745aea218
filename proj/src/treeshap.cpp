#include "tsx/treeshap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tsx {

namespace {

// One entry of the unique-feature path maintained by the recursion:
// the fraction of zero (cover-weighted) and one (matching) paths that flow
// through, plus the permutation weight accumulated so far.
struct PathElement {
  int feature_index = -1;
  double zero_fraction = 0.0;
  double one_fraction = 0.0;
  double pweight = 0.0;
};

void extend_path(PathElement* path, int unique_depth, double zero_fraction,
                 double one_fraction, int feature_index) {
  path[unique_depth] = {feature_index, zero_fraction, one_fraction,
                        unique_depth == 0 ? 1.0 : 0.0};
  const double d = static_cast<double>(unique_depth) + 1.0;
  for (int i = unique_depth - 1; i >= 0; --i) {
    path[i + 1].pweight += one_fraction * path[i].pweight * (i + 1.0) / d;
    path[i].pweight =
        zero_fraction * path[i].pweight * (unique_depth - i) / d;
  }
}

void unwind_path(PathElement* path, int unique_depth, int path_index) {
  const double one_fraction = path[path_index].one_fraction;
  const double zero_fraction = path[path_index].zero_fraction;
  double next_one_portion = path[unique_depth].pweight;
  const double d = static_cast<double>(unique_depth) + 1.0;
  for (int i = unique_depth - 1; i >= 0; --i) {
    if (one_fraction != 0.0) {
      const double tmp = path[i].pweight;
      path[i].pweight = next_one_portion * d / ((i + 1.0) * one_fraction);
      next_one_portion =
          tmp - path[i].pweight * zero_fraction * (unique_depth - i) / d;
    } else {
      path[i].pweight = path[i].pweight * d / (zero_fraction * (unique_depth - i));
    }
  }
  for (int i = path_index; i < unique_depth; ++i) {
    path[i].feature_index = path[i + 1].feature_index;
    path[i].zero_fraction = path[i + 1].zero_fraction;
    path[i].one_fraction = path[i + 1].one_fraction;
  }
}

double unwound_path_sum(const PathElement* path, int unique_depth,
                        int path_index) {
  const double one_fraction = path[path_index].one_fraction;
  const double zero_fraction = path[path_index].zero_fraction;
  double next_one_portion = path[unique_depth].pweight;
  double total = 0.0;
  const double d = static_cast<double>(unique_depth) + 1.0;
  for (int i = unique_depth - 1; i >= 0; --i) {
    if (one_fraction != 0.0) {
      const double tmp = next_one_portion * d / ((i + 1.0) * one_fraction);
      total += tmp;
      next_one_portion =
          path[i].pweight - tmp * zero_fraction * (unique_depth - i) / d;
    } else {
      total += path[i].pweight / zero_fraction / ((unique_depth - i) / d);
    }
  }
  return total;
}

int tree_depth(const Tree& tree, std::size_t at) {
  const TreeNode& n = tree.nodes[at];
  if (n.is_leaf()) return 1;
  return 1 + std::max(tree_depth(tree, static_cast<std::size_t>(n.left)),
                      tree_depth(tree, static_cast<std::size_t>(n.right)));
}

void shap_recurse(const Tree& tree, std::span<const double> x,
                  std::vector<double>& phi, std::size_t node_index,
                  int unique_depth, PathElement* parent_path,
                  double parent_zero_fraction, double parent_one_fraction,
                  int parent_feature_index) {
  PathElement* path = parent_path + unique_depth + 1;
  std::copy(parent_path, parent_path + unique_depth + 1, path);
  extend_path(path, unique_depth, parent_zero_fraction, parent_one_fraction,
              parent_feature_index);

  const TreeNode& node = tree.nodes[node_index];
  if (node.is_leaf()) {
    for (int i = 1; i <= unique_depth; ++i) {
      const double w = unwound_path_sum(path, unique_depth, i);
      const PathElement& el = path[i];
      phi[static_cast<std::size_t>(el.feature_index)] +=
          w * (el.one_fraction - el.zero_fraction) * node.value;
    }
    return;
  }

  const int split = node.feature;
  const double v = x[static_cast<std::size_t>(split)];
  const bool go_left = std::isnan(v) ? node.default_left : v <= node.threshold;
  const std::size_t hot = static_cast<std::size_t>(go_left ? node.left : node.right);
  const std::size_t cold = static_cast<std::size_t>(go_left ? node.right : node.left);

  if (!(node.cover > 0.0) || !(tree.nodes[hot].cover > 0.0) ||
      !(tree.nodes[cold].cover > 0.0)) {
    throw ValidationError("corrupt model: zero-cover node");
  }
  const double hot_zero_fraction = tree.nodes[hot].cover / node.cover;
  const double cold_zero_fraction = tree.nodes[cold].cover / node.cover;

  double incoming_zero_fraction = 1.0;
  double incoming_one_fraction = 1.0;
  // Repeated splits on one feature share a single path entry.
  int path_index = 0;
  for (; path_index <= unique_depth; ++path_index) {
    if (path[path_index].feature_index == split) break;
  }
  if (path_index != unique_depth + 1) {
    incoming_zero_fraction = path[path_index].zero_fraction;
    incoming_one_fraction = path[path_index].one_fraction;
    unwind_path(path, unique_depth, path_index);
    unique_depth -= 1;
  }

  shap_recurse(tree, x, phi, hot, unique_depth + 1, path,
               hot_zero_fraction * incoming_zero_fraction,
               incoming_one_fraction, split);
  shap_recurse(tree, x, phi, cold, unique_depth + 1, path,
               cold_zero_fraction * incoming_zero_fraction, 0.0, split);
}

// Cover-weighted conditional expectation of a tree given the features in
// `mask` (indexed through `bit_of`) take their values from x.
double cond_expectation(const Tree& tree, std::size_t at,
                        std::span<const double> x,
                        const std::vector<int>& bit_of, std::uint32_t mask) {
  const TreeNode& node = tree.nodes[at];
  if (node.is_leaf()) return node.value;
  const int bit = bit_of[static_cast<std::size_t>(node.feature)];
  const double v = x[static_cast<std::size_t>(node.feature)];
  if (bit >= 0 && (mask >> bit & 1u)) {
    const bool go_left = std::isnan(v) ? node.default_left : v <= node.threshold;
    return cond_expectation(
        tree, static_cast<std::size_t>(go_left ? node.left : node.right), x,
        bit_of, mask);
  }
  const double left =
      cond_expectation(tree, static_cast<std::size_t>(node.left), x, bit_of, mask);
  const double right =
      cond_expectation(tree, static_cast<std::size_t>(node.right), x, bit_of, mask);
  const double wl = tree.nodes[static_cast<std::size_t>(node.left)].cover;
  const double wr = tree.nodes[static_cast<std::size_t>(node.right)].cover;
  return (wl * left + wr * right) / node.cover;
}

}  // namespace

double Explanation::attribution_sum() const {
  return std::accumulate(attributions.begin(), attributions.end(), 0.0);
}

Explanation tree_shap(const TreeEnsemble& model, std::span<const double> row) {
  if (row.size() != model.feature_names().size()) {
    throw ValidationError("schema mismatch: row size does not match model");
  }
  Explanation e;
  e.attributions.assign(model.feature_names().size(), 0.0);

  for (const Tree& tree : model.trees()) {
    if (!(tree.nodes[0].cover > 0.0)) {
      throw ValidationError("corrupt model: zero-cover node");
    }
    const int depth = tree_depth(tree, 0);
    // Scratch holds one growing path copy per recursion level.
    std::vector<PathElement> scratch(
        static_cast<std::size_t>((depth + 2) * (depth + 3) / 2));
    shap_recurse(tree, row, e.attributions, 0, 0, scratch.data(), 1.0, 1.0, -1);
  }

  const double lr = model.learning_rate();
  for (double& phi : e.attributions) phi *= lr;
  e.base_value = model.expectation();
  e.prediction = model.predict(row);
  return e;
}

std::vector<double> brute_force_shap(const TreeEnsemble& model,
                                     std::span<const double> row) {
  if (row.size() != model.feature_names().size()) {
    throw ValidationError("schema mismatch: row size does not match model");
  }

  // Collect the features the model actually uses.
  std::vector<int> bit_of(model.feature_names().size(), -1);
  std::vector<std::size_t> used;
  for (const Tree& tree : model.trees()) {
    for (const TreeNode& n : tree.nodes) {
      if (n.is_leaf()) continue;
      const auto f = static_cast<std::size_t>(n.feature);
      if (bit_of[f] < 0) {
        bit_of[f] = static_cast<int>(used.size());
        used.push_back(f);
      }
    }
  }
  const std::size_t m = used.size();
  if (m > 15) throw ValidationError("oracle intractable: model uses " +
                                    std::to_string(m) + " features");

  std::vector<double> phi(model.feature_names().size(), 0.0);
  if (m == 0) return phi;

  // Game value per feature subset.
  const std::uint32_t n_masks = 1u << m;
  std::vector<double> value(n_masks, model.base_score());
  for (std::uint32_t mask = 0; mask < n_masks; ++mask) {
    double acc = 0.0;
    for (const Tree& tree : model.trees()) {
      acc += cond_expectation(tree, 0, row, bit_of, mask);
    }
    value[mask] += model.learning_rate() * acc;
  }

  // Shapley weights w[s] = s! (m-1-s)! / m!
  std::vector<double> weight(m);
  for (std::size_t s = 0; s < m; ++s) {
    double w = 1.0;
    for (std::size_t i = 1; i <= s; ++i) w *= static_cast<double>(i);
    for (std::size_t i = 1; i <= m - 1 - s; ++i) w *= static_cast<double>(i);
    for (std::size_t i = 1; i <= m; ++i) w /= static_cast<double>(i);
    weight[s] = w;
  }

  for (std::size_t j = 0; j < m; ++j) {
    const std::uint32_t bit = 1u << j;
    double total = 0.0;
    for (std::uint32_t mask = 0; mask < n_masks; ++mask) {
      if (mask & bit) continue;
      const auto size = static_cast<std::size_t>(std::popcount(mask));
      total += weight[size] * (value[mask | bit] - value[mask]);
    }
    phi[used[j]] = total;
  }
  return phi;
}

std::vector<Explanation> explain_rows_serial(const TreeEnsemble& model,
                                             const FeatureMatrix& matrix) {
  if (matrix.names != model.feature_names()) {
    throw ValidationError("schema mismatch between matrix and model");
  }
  std::vector<Explanation> out(matrix.rows.size());
  for (std::size_t i = 0; i < matrix.rows.size(); ++i) {
    out[i] = tree_shap(model, matrix.rows[i]);
  }
  return out;
}

std::vector<Explanation> explain_rows(const TreeEnsemble& model,
                                      const FeatureMatrix& matrix) {
  if (matrix.names != model.feature_names()) {
    throw ValidationError("schema mismatch between matrix and model");
  }
  std::vector<Explanation> out(matrix.rows.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(matrix.rows.size());
       ++i) {
    try {
      out[static_cast<std::size_t>(i)] =
          tree_shap(model, matrix.rows[static_cast<std::size_t>(i)]);
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace tsx
