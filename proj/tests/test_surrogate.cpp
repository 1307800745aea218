#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "tsx/rng.hpp"
#include "tsx/surrogate.hpp"

using namespace tsx;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

FeatureMatrix matrix_of(std::vector<std::string> names,
                        std::vector<std::vector<double>> rows) {
  FeatureMatrix m;
  m.names = std::move(names);
  m.rows = std::move(rows);
  return m;
}

double train_mse(const TreeEnsemble& model, const FeatureMatrix& X,
                 const std::vector<double>& y) {
  const auto preds = model.predict(X);
  double se = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    se += (preds[i] - y[i]) * (preds[i] - y[i]);
  }
  return se / static_cast<double>(y.size());
}

}  // namespace

TEST_CASE("constant target yields the base score everywhere") {
  FeatureMatrix X = matrix_of({"x"}, {});
  std::vector<double> y;
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    X.rows.push_back({rng.uniform(-1, 1)});
    y.push_back(3.75);
  }
  TrainParams params;
  params.n_trees = 5;
  const TreeEnsemble model = fit(X, y, params);
  CHECK(model.base_score() == doctest::Approx(3.75));
  for (const auto& row : X.rows) {
    CHECK(model.predict(row) == doctest::Approx(3.75));
  }
  // No useful splits: every tree is a single leaf.
  for (const Tree& t : model.trees()) CHECK(t.nodes.size() == 1);
}

TEST_CASE("binary step target converges geometrically at rate 1 - lr") {
  FeatureMatrix X = matrix_of({"x"}, {});
  std::vector<double> y;
  for (int i = 0; i < 40; ++i) {
    const bool right = i % 2 == 0;
    X.rows.push_back({right ? 1.0 : 0.0});
    y.push_back(right ? 10.0 : 0.0);
  }
  TrainParams params;
  params.learning_rate = 0.1;

  // Each tree finds the perfect split, so the residual shrinks by exactly
  // (1 - lr) per round: |pred - target| = 5 * 0.9^t.
  for (const std::size_t t : {1ul, 10ul, 40ul}) {
    params.n_trees = t;
    const TreeEnsemble model = fit(X, y, params);
    const double expected = 5.0 * std::pow(0.9, static_cast<double>(t));
    for (std::size_t i = 0; i < y.size(); ++i) {
      CHECK(std::abs(model.predict(X.rows[i]) - y[i]) ==
            doctest::Approx(expected).epsilon(1e-9));
    }
  }

  params.n_trees = 100;
  const TreeEnsemble model = fit(X, y, params);
  for (std::size_t i = 0; i < y.size(); ++i) {
    CHECK(std::abs(model.predict(X.rows[i]) - y[i]) <= 1e-3);
  }
}

TEST_CASE("depth-2 trees represent XOR") {
  Rng rng(7);
  FeatureMatrix X = matrix_of({"a", "b"}, {});
  std::vector<double> y;
  for (int i = 0; i < 200; ++i) {
    const double a = rng.uniform() < 0.5 ? 0.0 : 1.0;
    const double b = rng.uniform() < 0.5 ? 0.0 : 1.0;
    X.rows.push_back({a, b});
    y.push_back(a != b ? 1.0 : 0.0);
  }
  TrainParams params;
  params.max_depth = 2;
  params.n_trees = 150;
  params.learning_rate = 0.3;
  const TreeEnsemble model = fit(X, y, params);
  CHECK(train_mse(model, X, y) <= 1e-4);
}

TEST_CASE("empty ensemble predicts the base score") {
  const TreeEnsemble model(2.5, 0.1, {"x"}, {});
  CHECK(model.predict(std::vector<double>{0.0}) == 2.5);
  CHECK(model.expectation() == 2.5);
}

TEST_CASE("single manual tree routes by threshold") {
  Tree t;
  t.nodes.resize(3);
  t.nodes[0].feature = 0;
  t.nodes[0].threshold = 0.5;
  t.nodes[0].left = 1;
  t.nodes[0].right = 2;
  t.nodes[0].cover = 10;
  t.nodes[1].value = -2.0;
  t.nodes[1].cover = 5;
  t.nodes[2].value = 4.0;
  t.nodes[2].cover = 5;
  const TreeEnsemble model(1.0, 0.5, {"x"}, {t});
  CHECK(model.predict(std::vector<double>{0.0}) == doctest::Approx(1.0 - 1.0));
  CHECK(model.predict(std::vector<double>{1.0}) == doctest::Approx(1.0 + 2.0));
}

TEST_CASE("batch predict equals row-wise predict bitwise") {
  Rng rng(13);
  FeatureMatrix X = matrix_of({"a", "b", "c"}, {});
  std::vector<double> y;
  for (int i = 0; i < 120; ++i) {
    X.rows.push_back({rng.normal(), rng.normal(), rng.normal()});
    y.push_back(X.rows.back()[0] * 2 - X.rows.back()[2] + 0.1 * rng.normal());
  }
  const TreeEnsemble model = fit(X, y, {});
  const auto batch = model.predict(X);
  for (std::size_t i = 0; i < X.rows.size(); ++i) {
    CHECK(batch[i] == model.predict(X.rows[i]));
  }
}

TEST_CASE("training MSE is non-increasing in tree count") {
  Rng rng(17);
  FeatureMatrix X = matrix_of({"a", "b"}, {});
  std::vector<double> y;
  for (int i = 0; i < 150; ++i) {
    X.rows.push_back({rng.normal(), rng.normal()});
    y.push_back(std::sin(X.rows.back()[0]) + 0.5 * rng.normal());
  }
  TrainParams params;
  params.n_trees = 40;
  const TreeEnsemble model = fit(X, y, params);

  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k <= model.trees().size(); ++k) {
    const TreeEnsemble prefix(
        model.base_score(), model.learning_rate(), {"a", "b"},
        std::vector<Tree>(model.trees().begin(), model.trees().begin() + k));
    const double mse = train_mse(prefix, X, y);
    CHECK(mse <= prev + 1e-12);
    prev = mse;
  }
}

TEST_CASE("fit is deterministic and serialization round-trips byte-equal") {
  Rng rng(19);
  FeatureMatrix X = matrix_of({"a", "b"}, {});
  std::vector<double> y;
  for (int i = 0; i < 100; ++i) {
    X.rows.push_back({rng.normal(), rng.normal()});
    y.push_back(X.rows.back()[0] + rng.normal());
  }
  const TreeEnsemble m1 = fit(X, y, {});
  const TreeEnsemble m2 = fit(X, y, {});
  const std::string s1 = m1.to_json().dump();
  CHECK(s1 == m2.to_json().dump());

  const TreeEnsemble reloaded = TreeEnsemble::from_json(m1.to_json());
  CHECK(reloaded.to_json().dump() == s1);
  CHECK(reloaded.predict(X.rows[0]) == m1.predict(X.rows[0]));
}

TEST_CASE("root cover equals the number of training rows") {
  Rng rng(23);
  FeatureMatrix X = matrix_of({"a"}, {});
  std::vector<double> y;
  for (int i = 0; i < 77; ++i) {
    X.rows.push_back({rng.normal()});
    y.push_back(X.rows.back()[0]);
  }
  TrainParams params;
  params.n_trees = 10;
  const TreeEnsemble model = fit(X, y, params);
  for (const Tree& t : model.trees()) {
    CHECK(t.nodes[0].cover == 77.0);
    // Cover bookkeeping: parent = left + right everywhere.
    for (const TreeNode& n : t.nodes) {
      if (n.is_leaf()) continue;
      CHECK(n.cover ==
            t.nodes[static_cast<std::size_t>(n.left)].cover +
                t.nodes[static_cast<std::size_t>(n.right)].cover);
    }
  }
  CHECK_NOTHROW(model.validate());
}

TEST_CASE("missing values route to the side chosen by gain") {
  FeatureMatrix X = matrix_of({"x"}, {});
  std::vector<double> y;
  for (int i = 0; i < 30; ++i) {
    if (i % 3 == 0) {
      X.rows.push_back({kNaN});
      y.push_back(0.0);
    } else if (i % 3 == 1) {
      X.rows.push_back({1.0});
      y.push_back(0.0);
    } else {
      X.rows.push_back({2.0});
      y.push_back(9.0);
    }
  }
  TrainParams params;
  params.n_trees = 150;
  const TreeEnsemble model = fit(X, y, params);
  CHECK(std::abs(model.predict(std::vector<double>{kNaN}) - 0.0) < 1e-3);
  CHECK(std::abs(model.predict(std::vector<double>{2.0}) - 9.0) < 1e-3);

  const TreeEnsemble reloaded = TreeEnsemble::from_json(model.to_json());
  CHECK(reloaded.predict(std::vector<double>{kNaN}) ==
        model.predict(std::vector<double>{kNaN}));
}

TEST_CASE("fit validation errors") {
  FeatureMatrix X = matrix_of({"x"}, {{1.0}, {2.0}});
  const std::vector<double> y{1.0, 2.0};
  TrainParams params;
  params.min_samples_leaf = 5;
  CHECK_THROWS_WITH_AS(fit(X, y, params),
                       doctest::Contains("fewer rows than min samples"),
                       ValidationError);

  TrainParams bad;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);

  const TreeEnsemble model = fit(X, y, {.n_trees = 1,
                                        .learning_rate = 0.1,
                                        .max_depth = 2,
                                        .min_samples_leaf = 1,
                                        .min_gain = 1e-7,
                                        .seed = 0});
  CHECK_THROWS_WITH_AS(model.predict(std::vector<double>{1.0, 2.0}),
                       doctest::Contains("schema mismatch"), ValidationError);
}

TEST_CASE("corrupt models are rejected") {
  Tree t;
  t.nodes.resize(3);
  t.nodes[0].feature = 0;
  t.nodes[0].left = 1;
  t.nodes[0].right = 2;
  t.nodes[0].cover = 10;
  t.nodes[1].cover = 0;  // zero cover
  t.nodes[2].cover = 10;
  const TreeEnsemble model(0.0, 1.0, {"x"}, {t});
  CHECK_THROWS_WITH_AS(model.validate(), doctest::Contains("corrupt model"),
                       ValidationError);
}
