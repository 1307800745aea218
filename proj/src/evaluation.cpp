#include "tsx/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tsx/explain.hpp"
#include "tsx/rng.hpp"
#include "tsx/treeshap.hpp"

namespace tsx {

Metrics compute_metrics(std::span<const double> pred,
                        std::span<const double> ref) {
  if (pred.empty() || pred.size() != ref.size()) {
    throw ValidationError("metrics: empty or mismatched vectors");
  }
  const double n = static_cast<double>(pred.size());

  Metrics m;
  double se = 0.0;
  double ape = 0.0;
  std::size_t ape_n = 0;
  double ref_mean = 0.0;
  for (const double r : ref) ref_mean += r;
  ref_mean /= n;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double err = pred[i] - ref[i];
    m.mae += std::abs(err);
    se += err * err;
    ss_res += err * err;
    ss_tot += (ref[i] - ref_mean) * (ref[i] - ref_mean);
    if (std::abs(ref[i]) > 1e-12) {
      ape += std::abs(err) / std::abs(ref[i]);
      ++ape_n;
    }
  }
  m.mae /= n;
  m.rmse = std::sqrt(se / n);
  m.mape_excluded = pred.size() - ape_n;
  m.mape = ape_n > 0 ? 100.0 * ape / static_cast<double>(ape_n) : 0.0;
  if (ss_tot > 0.0) {
    m.r2 = 1.0 - ss_res / ss_tot;
  } else {
    m.r2_degenerate = true;
    m.r2 = ss_res == 0.0 ? 1.0 : 0.0;
  }
  return m;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3) {
    throw ValidationError("pearson: need equal lengths >= 3");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw ValidationError("pearson: degenerate (zero variance)");
  }
  return sxy / std::sqrt(sxx * syy);
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }
  return rank;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  return pearson(rx, ry);
}

InjectionSpec::Item InjectionSpec::for_item(const std::string& id) const {
  const auto it = items.find(id);
  if (it != items.end()) return it->second;
  Item item = defaults;
  if (beta_max > beta_min) {
    Rng rng = Rng::stream(seed, fnv1a(id) ^ 0x6265746173ull);  // "betas"
    item.beta = rng.uniform(beta_min, beta_max);
  }
  return item;
}

std::vector<double> price_path(const InjectionSpec& spec,
                               const std::string& item_id,
                               std::size_t length) {
  const InjectionSpec::Item item = spec.for_item(item_id);
  Rng rng = Rng::stream(spec.seed, fnv1a(item_id) ^ fnv1a(spec.feature_name));
  const double step = spec.step_frac * item.base_price;
  const double clip = spec.clip_frac * item.base_price;
  std::vector<double> path(length);
  double p = item.base_price;
  for (std::size_t t = 0; t < length; ++t) {
    const std::uint64_t move = rng.below(3);  // 0: down, 1: hold, 2: up
    if (move == 0) p -= step;
    if (move == 2) p += step;
    p = std::clamp(p, item.base_price - clip, item.base_price + clip);
    path[t] = p;
  }
  return path;
}

FaithfulnessReport inject_and_evaluate(const SeriesSet& corpus,
                                       const InjectionSpec& spec,
                                       const PipelineSettings& settings) {
  bool any_beta = false;
  for (const auto& [id, series] : corpus.items) {
    if (spec.for_item(id).beta != 0.0) any_beta = true;
  }
  if (!any_beta) throw ValidationError("no injected signal (all beta zero)");

  // Inject the effect into every series, aligned with the processed values
  // so the exogenous column and the modified demand share indices.
  SeriesSet modified;
  std::map<std::string, std::vector<double>> prices;
  std::map<std::string, InjectionSpec::Item> item_spec;
  for (const auto& [id, series] : corpus.items) {
    const ProcessedSeries p = preprocess(id, series, settings.horizon);
    const std::vector<double> path = price_path(spec, id, p.length());
    const InjectionSpec::Item item = spec.for_item(id);
    Series mod;
    mod.days = p.days;
    mod.values.resize(p.length());
    for (std::size_t t = 0; t < p.length(); ++t) {
      mod.values[t] = p.values[t] - item.beta * (path[t] - item.base_price);
    }
    // Re-trimming the modified series must not shift indices; the injected
    // effect never zeroes the first observation in practice, but guard it.
    if (mod.values[0] == 0.0) mod.values[0] = 1e-9;
    modified.items.emplace(id, std::move(mod));
    prices.emplace(id, path);
    item_spec.emplace(id, item);
  }

  // The black box is re-run on the modified history with the price as a
  // known covariate, so the forecasts genuinely carry the injected effect.
  ForecastSet forecasts;
  forecasts.horizon = settings.horizon;
  for (const auto& [id, mod] : modified.items) {
    const std::vector<double>& path = prices.at(id);
    const std::size_t train_len = mod.values.size() - settings.horizon;
    const std::span<const double> train(mod.values.data(), train_len);
    const std::span<const double> cov_train(path.data(), train_len);
    const std::span<const double> cov_future(path.data() + train_len,
                                             settings.horizon);
    forecasts.items[id] = forecast_with_covariate(train, cov_train, cov_future,
                                                  settings.ensemble,
                                                  settings.seed);
  }

  const CorpusModel cm = build_corpus_model(modified, settings, &forecasts,
                                            &prices, spec.feature_name);
  const std::vector<Explanation> exps = explain_rows(cm.model, cm.matrix);
  const std::size_t price_col = cm.matrix.column(spec.feature_name);

  FaithfulnessReport report;
  report.pairs.reserve(cm.keys.size());
  std::vector<double> phi, truth;
  for (std::size_t r = 0; r < cm.keys.size(); ++r) {
    const RowKey& key = cm.keys[r];
    const std::size_t item_index = cm.index_of.at(key.item_id);
    const InjectionSpec::Item& item = item_spec.at(key.item_id);

    Explanation e = exps[r];
    if (settings.normalize_targets) {
      e = denormalize_explanation(e, cm.stats[item_index]);
    }
    FaithfulnessPair pair;
    pair.item_id = key.item_id;
    pair.step = key.step;
    pair.price = cm.matrix.rows[r][price_col];
    pair.phi_injected = e.attributions[price_col];
    pair.ground_truth = -item.beta * (pair.price - item.base_price);
    phi.push_back(pair.phi_injected);
    truth.push_back(pair.ground_truth);
    report.pairs.push_back(std::move(pair));
  }

  try {
    report.pearson_r = pearson(phi, truth);
  } catch (const ValidationError&) {
    report.degenerate = true;  // no injected variance
    report.pearson_r = 0.0;
  }
  return report;
}

SpCorrelations correlate_sp(std::span<const ItemPerformance> items) {
  SpCorrelations out;
  out.n_items = items.size();
  out.low_sample_warning = items.size() < 10;
  if (items.size() < 3) {
    throw ValidationError("correlate_sp: need at least 3 items");
  }
  std::vector<double> sp, fr2, fmape, ar2, amape;
  for (const ItemPerformance& it : items) {
    sp.push_back(it.sp);
    fr2.push_back(it.fidelity_r2);
    fmape.push_back(it.fidelity_mape);
    ar2.push_back(it.accuracy_r2);
    amape.push_back(it.accuracy_mape);
  }
  out.spearman_sp_fidelity_r2 = spearman(sp, fr2);
  out.pearson_sp_fidelity_r2 = pearson(sp, fr2);
  out.spearman_sp_fidelity_mape = spearman(sp, fmape);
  out.pearson_sp_fidelity_mape = pearson(sp, fmape);
  out.spearman_sp_accuracy_r2 = spearman(sp, ar2);
  out.pearson_sp_accuracy_r2 = pearson(sp, ar2);
  out.spearman_sp_accuracy_mape = spearman(sp, amape);
  out.pearson_sp_accuracy_mape = pearson(sp, amape);
  return out;
}

}  // namespace tsx
