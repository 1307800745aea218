#include "tsx/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace tsx {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct NodeStats {
  double sum = 0.0;
  double count = 0.0;
};

struct SplitChoice {
  double gain = 0.0;
  std::int32_t feature = -1;
  double threshold = 0.0;
  bool missing_left = true;
  bool found = false;
};

double part_score(double sum, double count) { return sum * sum / count; }

}  // namespace

void TrainParams::validate() const {
  if (n_trees < 1) throw ValidationError("n_trees must be >= 1");
  if (learning_rate <= 0.0 || learning_rate > 1.0) {
    throw ValidationError("learning rate must be in (0, 1]");
  }
  if (max_depth < 1) throw ValidationError("max_depth must be >= 1");
  if (min_samples_leaf < 1) {
    throw ValidationError("min_samples_leaf must be >= 1");
  }
  if (min_gain < 0.0) throw ValidationError("min_gain must be >= 0");
}

double Tree::value_at(std::span<const double> row) const {
  std::size_t at = 0;
  while (!nodes[at].is_leaf()) {
    const TreeNode& n = nodes[at];
    const double v = row[static_cast<std::size_t>(n.feature)];
    bool go_left;
    if (std::isnan(v)) {
      go_left = n.default_left;
    } else {
      go_left = v <= n.threshold;
    }
    at = static_cast<std::size_t>(go_left ? n.left : n.right);
  }
  return nodes[at].value;
}

double Tree::expectation() const {
  const double root_cover = nodes[0].cover;
  double total = 0.0;
  for (const TreeNode& n : nodes) {
    if (n.is_leaf()) total += n.cover / root_cover * n.value;
  }
  return total;
}

TreeEnsemble::TreeEnsemble(double base_score, double learning_rate,
                           std::vector<std::string> feature_names,
                           std::vector<Tree> trees)
    : base_score_(base_score),
      learning_rate_(learning_rate),
      feature_names_(std::move(feature_names)),
      trees_(std::move(trees)) {}

double TreeEnsemble::predict(std::span<const double> row) const {
  if (row.size() != feature_names_.size()) {
    throw ValidationError("schema mismatch: row has " +
                          std::to_string(row.size()) + " features, model " +
                          std::to_string(feature_names_.size()));
  }
  double acc = 0.0;
  for (const Tree& t : trees_) acc += t.value_at(row);
  return base_score_ + learning_rate_ * acc;
}

std::vector<double> TreeEnsemble::predict(const FeatureMatrix& matrix) const {
  if (matrix.names != feature_names_) {
    throw ValidationError("schema mismatch between matrix and model");
  }
  std::vector<double> out;
  out.reserve(matrix.rows.size());
  for (const auto& row : matrix.rows) out.push_back(predict(row));
  return out;
}

double TreeEnsemble::expectation() const {
  double acc = 0.0;
  for (const Tree& t : trees_) acc += t.expectation();
  return base_score_ + learning_rate_ * acc;
}

nlohmann::json TreeEnsemble::to_json() const {
  nlohmann::json j;
  j["base_score"] = base_score_;
  j["learning_rate"] = learning_rate_;
  j["feature_names"] = feature_names_;
  auto& trees = j["trees"] = nlohmann::json::array();
  for (const Tree& t : trees_) {
    nlohmann::json tj;
    auto& feature = tj["feature"] = nlohmann::json::array();
    auto& threshold = tj["threshold"] = nlohmann::json::array();
    auto& default_left = tj["default_left"] = nlohmann::json::array();
    auto& left = tj["left"] = nlohmann::json::array();
    auto& right = tj["right"] = nlohmann::json::array();
    auto& value = tj["value"] = nlohmann::json::array();
    auto& cover = tj["cover"] = nlohmann::json::array();
    for (const TreeNode& n : t.nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      default_left.push_back(static_cast<int>(n.default_left));
      left.push_back(n.left);
      right.push_back(n.right);
      value.push_back(n.value);
      cover.push_back(n.cover);
    }
    trees.push_back(std::move(tj));
  }
  return j;
}

TreeEnsemble TreeEnsemble::from_json(const nlohmann::json& j) {
  TreeEnsemble e;
  try {
    e.base_score_ = j.at("base_score").get<double>();
    e.learning_rate_ = j.at("learning_rate").get<double>();
    e.feature_names_ = j.at("feature_names").get<std::vector<std::string>>();
    for (const auto& tj : j.at("trees")) {
      Tree t;
      const auto& feature = tj.at("feature");
      const std::size_t n = feature.size();
      t.nodes.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        TreeNode& node = t.nodes[i];
        node.feature = feature[i].get<std::int32_t>();
        node.threshold = tj.at("threshold")[i].get<double>();
        node.default_left = tj.at("default_left")[i].get<int>() != 0;
        node.left = tj.at("left")[i].get<std::int32_t>();
        node.right = tj.at("right")[i].get<std::int32_t>();
        node.value = tj.at("value")[i].get<double>();
        node.cover = tj.at("cover")[i].get<double>();
      }
      e.trees_.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ValidationError(std::string("malformed model JSON: ") + ex.what());
  }
  e.validate();
  return e;
}

void TreeEnsemble::validate() const {
  for (const Tree& t : trees_) {
    if (t.nodes.empty()) throw ValidationError("corrupt model: empty tree");
    const auto count = static_cast<std::int32_t>(t.nodes.size());
    for (std::int32_t i = 0; i < count; ++i) {
      const TreeNode& n = t.nodes[static_cast<std::size_t>(i)];
      if (!(n.cover > 0.0)) {
        throw ValidationError("corrupt model: zero-cover node");
      }
      if (n.is_leaf()) continue;
      if (n.left <= i || n.right <= i || n.left >= count || n.right >= count) {
        throw ValidationError("corrupt model: bad child index");
      }
      const double child_cover = t.nodes[static_cast<std::size_t>(n.left)].cover +
                                 t.nodes[static_cast<std::size_t>(n.right)].cover;
      if (std::abs(child_cover - n.cover) > 1e-9 * std::max(1.0, n.cover)) {
        throw ValidationError("corrupt model: cover mismatch");
      }
      if (static_cast<std::size_t>(n.feature) >= feature_names_.size()) {
        throw ValidationError("corrupt model: feature index out of range");
      }
    }
  }
}

TreeEnsemble fit(const FeatureMatrix& X, std::span<const double> targets,
                 const TrainParams& params) {
  params.validate();
  const std::size_t n = X.rows.size();
  const std::size_t n_features = X.names.size();
  if (n != targets.size()) {
    throw ValidationError("fit: row/target count mismatch");
  }
  if (n == 0) throw ValidationError("fit: empty training set");
  if (n < params.min_samples_leaf) {
    throw ValidationError("fit: fewer rows than min samples per leaf");
  }
  for (const double t : targets) {
    if (!std::isfinite(t)) throw ValidationError("fit: non-finite target");
  }

  // Features are sorted once; every node scan walks these global orders.
  std::vector<std::vector<std::uint32_t>> sorted_idx(n_features);
  std::vector<std::vector<std::uint32_t>> missing_idx(n_features);
  for (std::size_t f = 0; f < n_features; ++f) {
    auto& order = sorted_idx[f];
    for (std::uint32_t i = 0; i < n; ++i) {
      if (std::isnan(X.rows[i][f])) {
        missing_idx[f].push_back(i);
      } else {
        order.push_back(i);
      }
    }
    std::sort(order.begin(), order.end(),
              [&](std::uint32_t a, std::uint32_t b) {
                const double va = X.rows[a][f], vb = X.rows[b][f];
                if (va != vb) return va < vb;
                return a < b;
              });
  }

  const double base =
      std::accumulate(targets.begin(), targets.end(), 0.0) /
      static_cast<double>(n);
  std::vector<double> residual(n);
  for (std::size_t i = 0; i < n; ++i) residual[i] = targets[i] - base;

  std::vector<Tree> trees;
  trees.reserve(params.n_trees);
  std::vector<std::int32_t> node_of_row(n);

  for (std::size_t round = 0; round < params.n_trees; ++round) {
    Tree tree;
    tree.nodes.emplace_back();
    tree.nodes[0].cover = static_cast<double>(n);
    std::fill(node_of_row.begin(), node_of_row.end(), 0);

    std::vector<NodeStats> stats(1);
    stats[0].count = static_cast<double>(n);
    for (const double r : residual) stats[0].sum += r;

    std::vector<std::int32_t> frontier{0};
    for (std::size_t depth = 0; depth < params.max_depth && !frontier.empty();
         ++depth) {
      // Compact slot per frontier node.
      std::vector<std::int32_t> slot_of(tree.nodes.size(), -1);
      const std::size_t n_slots = frontier.size();
      for (std::size_t s = 0; s < n_slots; ++s) slot_of[frontier[s]] = s;

      std::vector<SplitChoice> best(n_slots);

      std::vector<double> miss_sum(n_slots), miss_cnt(n_slots);
      std::vector<double> run_sum(n_slots), run_cnt(n_slots);
      std::vector<double> last_val(n_slots);
      std::vector<double> pres_sum(n_slots), pres_cnt(n_slots);

      for (std::size_t f = 0; f < n_features; ++f) {
        std::fill(miss_sum.begin(), miss_sum.end(), 0.0);
        std::fill(miss_cnt.begin(), miss_cnt.end(), 0.0);
        for (const std::uint32_t i : missing_idx[f]) {
          const std::int32_t s = slot_of[node_of_row[i]];
          if (s < 0) continue;
          miss_sum[s] += residual[i];
          miss_cnt[s] += 1.0;
        }
        for (std::size_t s = 0; s < n_slots; ++s) {
          const NodeStats& ns = stats[frontier[s]];
          pres_sum[s] = ns.sum - miss_sum[s];
          pres_cnt[s] = ns.count - miss_cnt[s];
          run_sum[s] = 0.0;
          run_cnt[s] = 0.0;
        }

        const auto consider = [&](std::size_t s, double threshold) {
          const NodeStats& ns = stats[frontier[s]];
          const double parent_score = part_score(ns.sum, ns.count);
          // Candidate partition of present rows; missing rows try both sides.
          const double ls = run_sum[s], lc = run_cnt[s];
          const double rs = pres_sum[s] - ls, rc = pres_cnt[s] - lc;
          for (const bool missing_left : {true, false}) {
            const double Ls = missing_left ? ls + miss_sum[s] : ls;
            const double Lc = missing_left ? lc + miss_cnt[s] : lc;
            const double Rs = missing_left ? rs : rs + miss_sum[s];
            const double Rc = missing_left ? rc : rc + miss_cnt[s];
            if (Lc < params.min_samples_leaf || Rc < params.min_samples_leaf) {
              continue;
            }
            const double gain =
                part_score(Ls, Lc) + part_score(Rs, Rc) - parent_score;
            const double floor =
                best[s].found ? best[s].gain : params.min_gain;
            if (gain > floor) {
              best[s] = {gain, static_cast<std::int32_t>(f), threshold,
                         missing_left, true};
            }
          }
        };

        for (const std::uint32_t i : sorted_idx[f]) {
          const std::int32_t s = slot_of[node_of_row[i]];
          if (s < 0) continue;
          const double v = X.rows[i][f];
          if (run_cnt[s] > 0.0 && v > last_val[s]) {
            double mid = last_val[s] + (v - last_val[s]) / 2.0;
            if (!(mid < v)) mid = last_val[s];  // adjacent floats
            consider(s, mid);
          }
          run_sum[s] += residual[i];
          run_cnt[s] += 1.0;
          last_val[s] = v;
        }
      }

      // Materialize the chosen splits and route their rows.
      std::vector<std::int32_t> next_frontier;
      std::vector<bool> did_split(n_slots, false);
      for (std::size_t s = 0; s < n_slots; ++s) {
        if (!best[s].found) continue;
        did_split[s] = true;
        const std::int32_t id = frontier[s];
        const std::int32_t left_id = static_cast<std::int32_t>(tree.nodes.size());
        const std::int32_t right_id = left_id + 1;
        {
          // Scoped: emplace_back below invalidates references into nodes.
          TreeNode& parent = tree.nodes[static_cast<std::size_t>(id)];
          parent.feature = best[s].feature;
          parent.threshold = best[s].threshold;
          parent.default_left = best[s].missing_left;
          parent.left = left_id;
          parent.right = right_id;
        }
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        stats.resize(tree.nodes.size());
        next_frontier.push_back(left_id);
        next_frontier.push_back(right_id);
      }
      if (next_frontier.empty()) break;

      slot_of.resize(tree.nodes.size(), -1);
      for (std::size_t i = 0; i < n; ++i) {
        const std::int32_t id = node_of_row[i];
        const std::int32_t s =
            static_cast<std::size_t>(id) < slot_of.size() ? slot_of[id] : -1;
        if (s < 0 || !did_split[static_cast<std::size_t>(s)]) continue;
        const TreeNode& parent = tree.nodes[static_cast<std::size_t>(id)];
        const double v = X.rows[i][static_cast<std::size_t>(parent.feature)];
        const bool go_left =
            std::isnan(v) ? parent.default_left : v <= parent.threshold;
        const std::int32_t child = go_left ? parent.left : parent.right;
        node_of_row[i] = child;
        stats[static_cast<std::size_t>(child)].sum += residual[i];
        stats[static_cast<std::size_t>(child)].count += 1.0;
      }
      for (const std::int32_t id : next_frontier) {
        tree.nodes[static_cast<std::size_t>(id)].cover =
            stats[static_cast<std::size_t>(id)].count;
      }

      // Only nodes that can still host two minimum-size leaves stay open.
      frontier.clear();
      if (depth + 1 < params.max_depth) {
        for (const std::int32_t id : next_frontier) {
          if (stats[static_cast<std::size_t>(id)].count >=
              2.0 * static_cast<double>(params.min_samples_leaf)) {
            frontier.push_back(id);
          }
        }
      }
    }

    for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
      TreeNode& node = tree.nodes[id];
      if (node.is_leaf()) node.value = stats[id].sum / stats[id].count;
    }

    for (std::size_t i = 0; i < n; ++i) {
      const double leaf_value =
          tree.nodes[static_cast<std::size_t>(node_of_row[i])].value;
      residual[i] -= params.learning_rate * leaf_value;
    }
    trees.push_back(std::move(tree));
  }

  return TreeEnsemble(base, params.learning_rate,
                      std::vector<std::string>(X.names), std::move(trees));
}

}  // namespace tsx
