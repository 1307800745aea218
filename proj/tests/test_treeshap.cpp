#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <limits>

#include "tsx/rng.hpp"
#include "tsx/surrogate.hpp"
#include "tsx/treeshap.hpp"

using namespace tsx;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Random tree with integer covers satisfying parent = left + right; may
// split on the same feature repeatedly along a path, which is the hard case
// for the EXTEND/UNWIND bookkeeping.
void grow_random(Tree& tree, std::size_t at, int depth_left, double cover,
                 std::size_t n_features, Rng& rng) {
  TreeNode& node = tree.nodes[at];
  node.cover = cover;
  const bool split = depth_left > 0 && cover >= 2.0 && rng.uniform() < 0.8;
  if (!split) {
    node.value = rng.uniform(-5.0, 5.0);
    return;
  }
  node.feature = static_cast<std::int32_t>(rng.below(n_features));
  node.threshold = rng.uniform(-1.0, 1.0);
  node.default_left = rng.uniform() < 0.5;
  const double left_cover =
      1.0 + static_cast<double>(rng.below(static_cast<std::uint64_t>(cover) - 1));
  node.left = static_cast<std::int32_t>(tree.nodes.size());
  node.right = node.left + 1;
  tree.nodes.emplace_back();
  tree.nodes.emplace_back();
  grow_random(tree, static_cast<std::size_t>(tree.nodes[at].left), depth_left - 1,
              left_cover, n_features, rng);
  grow_random(tree, static_cast<std::size_t>(tree.nodes[at].right), depth_left - 1,
              cover - left_cover, n_features, rng);
}

TreeEnsemble random_ensemble(std::size_t n_features, std::size_t max_trees,
                             int max_depth, Rng& rng) {
  std::vector<std::string> names;
  for (std::size_t f = 0; f < n_features; ++f) {
    names.push_back("f" + std::to_string(f));
  }
  std::vector<Tree> trees;
  const std::size_t n_trees = 1 + rng.below(max_trees);
  for (std::size_t t = 0; t < n_trees; ++t) {
    Tree tree;
    tree.nodes.emplace_back();
    grow_random(tree, 0, max_depth, 50.0 + static_cast<double>(rng.below(150)),
                n_features, rng);
    trees.push_back(std::move(tree));
  }
  return TreeEnsemble(rng.uniform(-1.0, 1.0), 0.3, std::move(names),
                      std::move(trees));
}

std::vector<double> random_row(std::size_t n_features, Rng& rng) {
  std::vector<double> row(n_features);
  for (double& v : row) {
    v = rng.uniform() < 0.1 ? kNaN : rng.uniform(-1.5, 1.5);
  }
  return row;
}

}  // namespace

TEST_CASE("single-leaf tree puts everything into the base value") {
  Tree t;
  t.nodes.resize(1);
  t.nodes[0].value = 5.0;
  t.nodes[0].cover = 42;
  const TreeEnsemble model(1.0, 1.0, {"a", "b"}, {t});
  const Explanation e = tree_shap(model, std::vector<double>{0.3, -0.4});
  CHECK(e.base_value == doctest::Approx(6.0));
  CHECK(e.attributions[0] == 0.0);
  CHECK(e.attributions[1] == 0.0);
  CHECK(e.prediction == doctest::Approx(6.0));
}

TEST_CASE("single split with equal covers attributes half the gap") {
  Tree t;
  t.nodes.resize(3);
  t.nodes[0].feature = 0;
  t.nodes[0].threshold = 0.0;
  t.nodes[0].left = 1;
  t.nodes[0].right = 2;
  t.nodes[0].cover = 10;
  t.nodes[1].value = 0.0;
  t.nodes[1].cover = 5;
  t.nodes[2].value = 10.0;
  t.nodes[2].cover = 5;

  const double lr = 0.7;
  const TreeEnsemble model(0.0, lr, {"f0", "other"}, {t});
  const Explanation e = tree_shap(model, std::vector<double>{1.0, 0.0});
  CHECK(e.base_value == doctest::Approx(lr * 5.0));
  CHECK(e.attributions[0] == doctest::Approx(lr * 5.0));
  CHECK(e.attributions[1] == 0.0);
  CHECK(e.prediction == doctest::Approx(lr * 10.0));

  const auto oracle = brute_force_shap(model, std::vector<double>{1.0, 0.0});
  CHECK(oracle[0] == doctest::Approx(lr * 5.0));
  CHECK(oracle[1] == 0.0);
}

TEST_CASE("oracle equivalence on random ensembles") {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(12345);
  double max_gap = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const TreeEnsemble model = random_ensemble(4, 5, 3, rng);
    for (int r = 0; r < 20; ++r) {
      const auto row = random_row(4, rng);
      const Explanation fast = tree_shap(model, row);
      const auto exact = brute_force_shap(model, row);
      for (std::size_t j = 0; j < 4; ++j) {
        max_gap = std::max(max_gap, std::abs(fast.attributions[j] - exact[j]));
      }
    }
  }
  CHECK(max_gap <= 1e-8);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  CHECK(elapsed < 10.0);
}

TEST_CASE("additivity holds for every explanation") {
  Rng rng(777);
  for (int rep = 0; rep < 50; ++rep) {
    const TreeEnsemble model = random_ensemble(6, 8, 4, rng);
    for (int r = 0; r < 10; ++r) {
      const auto row = random_row(6, rng);
      const Explanation e = tree_shap(model, row);
      const double recon = e.base_value + e.attribution_sum();
      CHECK(std::abs(recon - e.prediction) <=
            1e-8 * std::max(1.0, std::abs(e.prediction)));
    }
  }
}

TEST_CASE("dummy features get exactly zero attribution") {
  Rng rng(99);
  const TreeEnsemble model = random_ensemble(3, 4, 3, rng);
  std::vector<std::string> names = model.feature_names();
  names.push_back("dummy");
  // Same trees, one extra feature column the trees never touch.
  const TreeEnsemble wide(model.base_score(), model.learning_rate(), names,
                          model.trees());
  for (int r = 0; r < 20; ++r) {
    auto row = random_row(4, rng);
    const Explanation e = tree_shap(wide, row);
    CHECK(e.attributions[3] == 0.0);
    const auto oracle = brute_force_shap(wide, row);
    CHECK(oracle[3] == 0.0);
  }
}

TEST_CASE("symmetric features receive equal attributions") {
  // f(x) = [x0 > 0] + [x1 > 0] built from two symmetric splits.
  Tree t;
  t.nodes.resize(7);
  t.nodes[0] = {.feature = 0, .threshold = 0.0, .default_left = true,
                .left = 1, .right = 2, .value = 0.0, .cover = 100};
  t.nodes[1] = {.feature = 1, .threshold = 0.0, .default_left = true,
                .left = 3, .right = 4, .value = 0.0, .cover = 50};
  t.nodes[2] = {.feature = 1, .threshold = 0.0, .default_left = true,
                .left = 5, .right = 6, .value = 0.0, .cover = 50};
  t.nodes[3] = {.feature = -1, .threshold = 0, .default_left = true,
                .left = -1, .right = -1, .value = 0.0, .cover = 25};
  t.nodes[4] = {.feature = -1, .threshold = 0, .default_left = true,
                .left = -1, .right = -1, .value = 1.0, .cover = 25};
  t.nodes[5] = {.feature = -1, .threshold = 0, .default_left = true,
                .left = -1, .right = -1, .value = 1.0, .cover = 25};
  t.nodes[6] = {.feature = -1, .threshold = 0, .default_left = true,
                .left = -1, .right = -1, .value = 2.0, .cover = 25};
  const TreeEnsemble model(0.0, 1.0, {"x0", "x1"}, {t});

  const Explanation e = tree_shap(model, std::vector<double>{1.0, 1.0});
  CHECK(std::abs(e.attributions[0] - e.attributions[1]) <= 1e-10);
  const auto oracle = brute_force_shap(model, std::vector<double>{1.0, 1.0});
  CHECK(std::abs(oracle[0] - oracle[1]) <= 1e-10);
}

TEST_CASE("SHAP is linear across trees") {
  Rng rng(555);
  const TreeEnsemble model = random_ensemble(4, 6, 3, rng);
  const auto row = random_row(4, rng);
  const Explanation whole = tree_shap(model, row);

  std::vector<double> summed(4, 0.0);
  for (const Tree& t : model.trees()) {
    const TreeEnsemble single(0.0, model.learning_rate(),
                              model.feature_names(), {t});
    const Explanation e = tree_shap(single, row);
    for (std::size_t j = 0; j < 4; ++j) summed[j] += e.attributions[j];
  }
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(whole.attributions[j] == doctest::Approx(summed[j]).epsilon(1e-12));
  }
}

TEST_CASE("zero-cover nodes are reported as corrupt") {
  Tree t;
  t.nodes.resize(3);
  t.nodes[0].feature = 0;
  t.nodes[0].left = 1;
  t.nodes[0].right = 2;
  t.nodes[0].cover = 10;
  t.nodes[1].cover = 0;
  t.nodes[1].value = 1;
  t.nodes[2].cover = 10;
  t.nodes[2].value = 2;
  const TreeEnsemble model(0.0, 1.0, {"x"}, {t});
  CHECK_THROWS_WITH_AS(tree_shap(model, std::vector<double>{0.5}),
                       doctest::Contains("corrupt model"), ValidationError);
}

TEST_CASE("oracle refuses more than 15 features") {
  // A single chain tree splitting on 16 distinct features.
  const std::size_t m = 16;
  Tree t;
  t.nodes.emplace_back();
  double cover = 1 << 16;
  std::size_t at = 0;
  for (std::size_t f = 0; f < m; ++f) {
    t.nodes[at].feature = static_cast<std::int32_t>(f);
    t.nodes[at].threshold = 0.0;
    t.nodes[at].cover = cover;
    t.nodes[at].left = static_cast<std::int32_t>(t.nodes.size());
    t.nodes[at].right = static_cast<std::int32_t>(t.nodes.size() + 1);
    t.nodes.emplace_back();  // leaf
    t.nodes.emplace_back();  // continues the chain
    TreeNode& leaf = t.nodes[static_cast<std::size_t>(t.nodes[at].left)];
    leaf.cover = cover / 2;
    leaf.value = static_cast<double>(f);
    at = static_cast<std::size_t>(t.nodes[at].right);
    cover /= 2;
  }
  t.nodes[at].cover = cover;
  t.nodes[at].value = 99.0;

  std::vector<std::string> names;
  for (std::size_t f = 0; f < m; ++f) names.push_back("f" + std::to_string(f));
  const TreeEnsemble model(0.0, 1.0, names, {t});
  const std::vector<double> row(m, 1.0);
  CHECK_THROWS_WITH_AS(brute_force_shap(model, row),
                       doctest::Contains("oracle intractable"),
                       ValidationError);
  CHECK_NOTHROW(tree_shap(model, row));  // the fast path has no such limit
}

TEST_CASE("parallel explain_rows matches the serial reference bitwise") {
  Rng rng(2024);
  const TreeEnsemble model = random_ensemble(5, 10, 4, rng);
  FeatureMatrix X;
  X.names = model.feature_names();
  for (int r = 0; r < 300; ++r) X.rows.push_back(random_row(5, rng));

  const auto serial = explain_rows_serial(model, X);
  const auto parallel = explain_rows(model, X);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].base_value == parallel[i].base_value);
    CHECK(serial[i].prediction == parallel[i].prediction);
    CHECK(serial[i].attributions == parallel[i].attributions);
  }
}
