#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tsx/date.hpp"
#include "tsx/features.hpp"
#include "tsx/rng.hpp"

using namespace tsx;

namespace {

ProcessedSeries series_of(std::vector<double> values,
                          const char* start = nullptr) {
  ProcessedSeries p;
  p.values = std::move(values);
  if (start != nullptr) {
    const std::int64_t d0 = date::parse(start);
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      p.days.push_back(d0 + static_cast<std::int64_t>(i));
    }
  }
  return p;
}

bool same_cell(double a, double b) {
  if (std::isnan(a) && std::isnan(b)) return true;
  return a == b;
}

}  // namespace

TEST_CASE("lag and rolling features use strictly prior values") {
  FeatureConfig cfg;
  cfg.lags = {1};
  cfg.windows = {2};
  cfg.pct_changes = {1};
  cfg.period = 2;

  const FeatureBuilder b(series_of({3, 5, 7}), cfg);
  const auto names = b.names();
  const auto col = [&](const char* n) {
    return std::find(names.begin(), names.end(), n) - names.begin();
  };

  const auto row2 = b.row(2);
  CHECK(row2[col("lag_1")] == 5.0);                 // value at k-1
  CHECK(row2[col("roll_mean_2")] == doctest::Approx(4.0));  // (3+5)/2
  CHECK(row2[col("exp_mean")] == doctest::Approx(4.0));
  CHECK(row2[col("pct_change_1")] == doctest::Approx((5.0 - 3.0) / 3.0));
  CHECK(row2[col("age")] == 2.0);

  const auto row0 = b.row(0);
  CHECK(std::isnan(row0[col("lag_1")]));
  CHECK(std::isnan(row0[col("roll_mean_2")]));
  CHECK(std::isnan(row0[col("exp_mean")]));
}

TEST_CASE("calendar features come from the row's date") {
  FeatureConfig cfg;
  cfg.lags = {1};
  cfg.windows = {};
  cfg.pct_changes = {};
  const FeatureBuilder b(series_of({1, 2, 3, 4}, "2025-05-01"), cfg);
  const auto names = b.names();
  const auto col = [&](const char* n) {
    return std::find(names.begin(), names.end(), n) - names.begin();
  };
  const auto row = b.row(0);
  CHECK(row[col("day_of_week")] == 3.0);  // 2025-05-01 is a Thursday
  CHECK(row[col("day_of_month")] == 1.0);
  CHECK(row[col("month")] == 5.0);
  CHECK(row[col("week_of_year")] == 18.0);
}

TEST_CASE("feature config validation") {
  FeatureConfig cfg;
  cfg.lags = {5};
  CHECK_THROWS_WITH_AS(FeatureBuilder(series_of({1, 2, 3}), cfg),
                       doctest::Contains("lag 5"), ValidationError);
  FeatureConfig bad_period;
  bad_period.lags = {1};
  bad_period.period = 1;
  CHECK_THROWS_AS(FeatureBuilder(series_of({1, 2, 3}), bad_period),
                  ValidationError);
}

TEST_CASE("decompose recovers an alternating pattern") {
  std::vector<double> v;
  for (int i = 0; i < 12; ++i) v.push_back(i % 2 == 0 ? 1.0 : 2.0);
  std::vector<double> trend, seasonal;
  decompose(v, 2, trend, seasonal);
  for (const double t : trend) CHECK(t == doctest::Approx(1.5));
  for (std::size_t t = 0; t < v.size(); ++t) {
    CHECK(seasonal[t] == doctest::Approx(t % 2 == 0 ? -0.5 : 0.5));
  }
}

TEST_CASE("decompose of a constant series") {
  std::vector<double> v(20, 3.25);
  std::vector<double> trend, seasonal;
  decompose(v, 7, trend, seasonal);
  for (const double t : trend) CHECK(t == doctest::Approx(3.25));
  for (const double s : seasonal) CHECK(std::abs(s) <= 1e-12);
}

TEST_CASE("decompose of a linear ramp has no seasonal component") {
  std::vector<double> v;
  for (int i = 0; i < 35; ++i) v.push_back(2.0 * i + 5.0);
  std::vector<double> trend, seasonal;
  decompose(v, 7, trend, seasonal);
  for (const double s : seasonal) CHECK(std::abs(s) <= 1e-9);
}

TEST_CASE("seasonal component sums to zero over one period") {
  Rng rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<double> v;
    for (int i = 0; i < 60; ++i) {
      v.push_back(10 + 3 * std::sin(2 * M_PI * i / 7.0) + rng.normal());
    }
    std::vector<double> trend, seasonal;
    decompose(v, 7, trend, seasonal);
    double sum = 0.0;
    for (int p = 0; p < 7; ++p) sum += seasonal[p];
    CHECK(std::abs(sum) <= 1e-9);
  }
  std::vector<double> trend, seasonal;
  const std::vector<double> tiny{1, 2, 3, 4};
  CHECK_THROWS_AS(decompose(tiny, 1, trend, seasonal), ValidationError);
}

TEST_CASE("no leakage: perturbing the target at t changes no feature at <= t") {
  Rng rng(23);
  std::vector<double> v;
  for (int i = 0; i < 60; ++i) {
    v.push_back(20 + 5 * std::sin(2 * M_PI * i / 7.0) + rng.normal());
  }
  const FeatureConfig cfg;  // defaults except long lags exceed length? 28 < 60
  const FeatureMatrix base = build_feature_matrix(series_of(v, "2024-03-04"), cfg);

  for (const std::size_t t : {5ul, 20ul, 41ul, 59ul}) {
    std::vector<double> perturbed = v;
    perturbed[t] += 13.7;
    const FeatureMatrix changed =
        build_feature_matrix(series_of(perturbed, "2024-03-04"), cfg);
    for (std::size_t k = 0; k <= t; ++k) {
      for (std::size_t c = 0; c < base.names.size(); ++c) {
        INFO("t=", t, " k=", k, " col=", base.names[c]);
        CHECK(same_cell(base.rows[k][c], changed.rows[k][c]));
      }
    }
  }
}

TEST_CASE("horizon rows freeze target features and advance calendar/age") {
  Rng rng(29);
  std::vector<double> v;
  for (int i = 0; i < 80; ++i) {
    v.push_back(50 + 10 * std::sin(2 * M_PI * i / 7.0) + rng.normal());
  }
  FeatureConfig cfg;
  const FeatureBuilder b(series_of(v, "2024-01-01"), cfg);
  const auto names = b.names();
  const auto col = [&](const char* n) {
    return std::find(names.begin(), names.end(), n) - names.begin();
  };

  const auto h1 = b.horizon_row(1);
  const auto h5 = b.horizon_row(5);

  CHECK(h1[col("lag_1")] == v.back());
  CHECK(h5[col("lag_1")] == v.back());  // frozen, no recursive forecasting
  CHECK(h1[col("roll_mean_7")] == h5[col("roll_mean_7")]);
  CHECK(h1[col("exp_std")] == h5[col("exp_std")]);
  CHECK(h1[col("trend")] == h5[col("trend")]);

  CHECK(h5[col("age")] == h1[col("age")] + 4.0);
  // Calendar advances one day per step.
  const double dow1 = h1[col("day_of_week")];
  const double dow5 = h5[col("day_of_week")];
  CHECK(dow5 == std::fmod(dow1 + 4.0, 7.0));
  // Seasonal follows the phase of the future position.
  const std::size_t n = v.size();
  CHECK(h1[col("seasonal")] != h5[col("seasonal")]);
  const auto h8 = b.horizon_row(8);
  CHECK(h1[col("seasonal")] == h8[col("seasonal")]);  // same phase mod 7
  (void)n;
}

TEST_CASE("build_feature_matrix appends horizon rows") {
  std::vector<double> v(40, 1.0);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i % 5);
  v[0] = 1.0;
  FeatureConfig cfg;
  cfg.lags = {1, 7};
  const FeatureMatrix m = build_feature_matrix(series_of(v, "2024-01-01"), cfg, 6);
  CHECK(m.rows.size() == 46);
  CHECK(m.names == feature_names(cfg));
  CHECK(m.column("lag_7") > 0);
  CHECK_THROWS_AS(m.column("nope"), ValidationError);
}
