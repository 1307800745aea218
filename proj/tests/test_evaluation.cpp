#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tsx/evaluation.hpp"
#include "tsx/rng.hpp"
#include "tsx/synthetic.hpp"

using namespace tsx;

TEST_CASE("metrics on identical vectors") {
  const std::vector<double> v{1, 2, 3};
  const Metrics m = compute_metrics(v, v);
  CHECK(m.mae == 0.0);
  CHECK(m.rmse == 0.0);
  CHECK(m.mape == 0.0);
  CHECK(m.r2 == 1.0);
  CHECK_FALSE(m.r2_degenerate);
}

TEST_CASE("metrics hand-checked values") {
  const Metrics m = compute_metrics(std::vector<double>{10, 12},
                                    std::vector<double>{11, 13});
  CHECK(m.mae == doctest::Approx(1.0));
  CHECK(m.rmse == doctest::Approx(1.0));

  const Metrics mape = compute_metrics(std::vector<double>{11, 18},
                                       std::vector<double>{10, 20});
  CHECK(mape.mape == doctest::Approx(10.0));  // percent
  CHECK(mape.mape_excluded == 0);
}

TEST_CASE("MAPE excludes near-zero references and reports the count") {
  const Metrics m = compute_metrics(std::vector<double>{1, 2, 3},
                                    std::vector<double>{0, 2, 4});
  CHECK(m.mape_excluded == 1);
  CHECK(m.mape == doctest::Approx(100.0 * (0.0 / 2 + 1.0 / 4) / 2));
}

TEST_CASE("R^2 degenerate cases are flagged") {
  const Metrics perfect = compute_metrics(std::vector<double>{5, 5},
                                          std::vector<double>{5, 5});
  CHECK(perfect.r2_degenerate);
  CHECK(perfect.r2 == 1.0);
  const Metrics off = compute_metrics(std::vector<double>{5, 6},
                                      std::vector<double>{5, 5});
  CHECK(off.r2_degenerate);
  CHECK(off.r2 == 0.0);
}

TEST_CASE("MAE <= RMSE always") {
  Rng rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> pred, ref;
    for (int i = 0; i < 30; ++i) {
      pred.push_back(rng.uniform(-10, 10));
      ref.push_back(rng.uniform(-10, 10));
    }
    const Metrics m = compute_metrics(pred, ref);
    CHECK(m.mae <= m.rmse + 1e-12);
  }
  CHECK_THROWS_AS(compute_metrics({}, {}), ValidationError);
}

TEST_CASE("pearson hand-checked values") {
  const std::vector<double> x{1, 2, 3};
  std::vector<double> y{2, 4, 6};
  CHECK(pearson(x, y) == doctest::Approx(1.0));
  y = {-1, -2, -3};
  CHECK(pearson(x, y) == doctest::Approx(-1.0));
  y = {1, 3, 2};
  CHECK(pearson(x, y) == doctest::Approx(0.5));
  CHECK_THROWS_WITH_AS(pearson(x, std::vector<double>{1, 1, 1}),
                       doctest::Contains("degenerate"), ValidationError);
  CHECK_THROWS_AS(pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2}),
                  ValidationError);
}

TEST_CASE("pearson is invariant under positive affine transforms") {
  Rng rng(5);
  std::vector<double> x, y;
  for (int i = 0; i < 40; ++i) {
    x.push_back(rng.normal());
    y.push_back(0.5 * x.back() + rng.normal());
  }
  const double base = pearson(x, y);
  std::vector<double> x2(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) x2[i] = 3.7 * x[i] + 11.0;
  CHECK(pearson(x2, y) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("spearman uses average ranks on ties") {
  const std::vector<double> x{1, 2, 3, 4};
  const std::vector<double> y{10, 20, 30, 40};
  CHECK(spearman(x, y) == doctest::Approx(1.0));
  const std::vector<double> anti{4, 3, 2, 1};
  CHECK(spearman(x, anti) == doctest::Approx(-1.0));
  // Monotone but nonlinear: spearman 1, pearson < 1.
  const std::vector<double> curve{1, 8, 27, 1000};
  CHECK(spearman(x, curve) == doctest::Approx(1.0));
  CHECK(pearson(x, curve) < 1.0);
  // Ties on both sides resolve consistently.
  const std::vector<double> tied{1, 1, 2, 2};
  CHECK(spearman(tied, tied) == doctest::Approx(1.0));
}

TEST_CASE("price paths are seeded walks clipped around the base price") {
  InjectionSpec spec;
  spec.seed = 13;
  spec.defaults.base_price = 10.0;
  const auto path = price_path(spec, "ITEM_A", 500);
  const auto again = price_path(spec, "ITEM_A", 500);
  CHECK(path == again);
  for (std::size_t t = 0; t < path.size(); ++t) {
    CHECK(path[t] >= 7.0 - 1e-12);
    CHECK(path[t] <= 13.0 + 1e-12);
    if (t > 0) {
      const double step = std::abs(path[t] - path[t - 1]);
      CHECK(step <= 0.5 + 1e-12);  // 5% of base per move
    }
  }
  // Distinct items draw distinct walks.
  CHECK(price_path(spec, "ITEM_B", 500) != path);
}

TEST_CASE("injection ground truth follows the effect rule") {
  // Price 11 with base 10 and beta 10 shifts demand by -10 (102 -> 92).
  const double base = 10.0, beta = 10.0, price = 11.0, old_demand = 102.0;
  const double effect = -beta * (price - base);
  CHECK(effect == doctest::Approx(-10.0));
  CHECK(old_demand + effect == doctest::Approx(92.0));
}

TEST_CASE("inject_and_evaluate validates and reports degeneracy") {
  GenConfig gen;
  gen.seed = 21;
  gen.length = 160;
  gen.horizon = 14;
  ArchetypeSpec spec;
  spec.kind = "weekly";
  spec.count = 4;
  spec.prefix = "it";
  spec.scale_min = 90;
  spec.scale_max = 140;
  spec.noise = 0.08;
  gen.groups.push_back(spec);
  const GeneratedCorpus corpus = gen_synthetic(gen);

  PipelineSettings settings;
  settings.horizon = 14;
  settings.train.n_trees = 40;

  InjectionSpec inj;
  inj.defaults.beta = 0.0;
  CHECK_THROWS_WITH_AS(inject_and_evaluate(corpus.set, inj, settings),
                       doctest::Contains("no injected signal"),
                       ValidationError);

  // A constant price path carries no variance: degenerate, not an error.
  inj.defaults.beta = 8.0;
  inj.step_frac = 0.0;
  const FaithfulnessReport flat = inject_and_evaluate(corpus.set, inj, settings);
  CHECK(flat.degenerate);
  CHECK(flat.pairs.size() == 4 * 14);

  // A real walk produces ground truth matching the effect rule exactly.
  inj.step_frac = 0.05;
  const FaithfulnessReport report =
      inject_and_evaluate(corpus.set, inj, settings);
  CHECK_FALSE(report.degenerate);
  for (const FaithfulnessPair& p : report.pairs) {
    CHECK(p.ground_truth ==
          doctest::Approx(-8.0 * (p.price - inj.defaults.base_price)));
  }
}

TEST_CASE("correlate_sp reports all four correlation pairs") {
  std::vector<ItemPerformance> items;
  Rng rng(7);
  for (int i = 0; i < 12; ++i) {
    ItemPerformance p;
    p.item_id = "i" + std::to_string(i);
    p.sp = 0.05 * i + 0.1;
    p.fidelity_r2 = p.sp + 0.01 * rng.normal();      // rises with sp
    p.fidelity_mape = 50.0 - 30.0 * p.sp + rng.normal();  // falls with sp
    p.accuracy_r2 = p.sp;
    p.accuracy_mape = 40.0 - 20.0 * p.sp;
    items.push_back(p);
  }
  const SpCorrelations c = correlate_sp(items);
  CHECK(c.n_items == 12);
  CHECK_FALSE(c.low_sample_warning);
  CHECK(c.spearman_sp_fidelity_r2 > 0.9);
  CHECK(c.spearman_sp_fidelity_mape < -0.8);
  CHECK(c.spearman_sp_accuracy_r2 == doctest::Approx(1.0));
  CHECK(c.spearman_sp_accuracy_mape == doctest::Approx(-1.0));

  items.resize(5);
  const SpCorrelations few = correlate_sp(items);
  CHECK(few.low_sample_warning);
  items.resize(2);
  CHECK_THROWS_AS(correlate_sp(items), ValidationError);
}
