#include "vqr/bundle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vqr/error.hpp"
#include "vqr/metrics.hpp"

namespace vqr {

namespace {

struct FamilyInfo {
  Family family;
  std::string_view tag;
  FeatureSet features;
  bool linear;
  bool point;
};

constexpr FamilyInfo kInfo[] = {
    {Family::LR, "lr", FeatureSet::AgeOnly, true, true},
    {Family::MLR, "mlr", FeatureSet::Interaction, true, true},
    {Family::PR1, "pr1", FeatureSet::Interaction, true, true},
    {Family::SVR, "svr", FeatureSet::Interaction, true, true},
    {Family::Stat, "stat", FeatureSet::Statistical, true, false},
    {Family::OLS, "ols", FeatureSet::Interaction, true, true},
    {Family::QR, "qr", FeatureSet::Interaction, true, false},
    {Family::GBM, "gbm", FeatureSet::Raw, false, false},
    {Family::RF, "rf", FeatureSet::Raw, false, false},
    {Family::MLP, "mlp", FeatureSet::Raw, false, false},
};

const FamilyInfo& info(Family f) noexcept { return kInfo[static_cast<int>(f)]; }

std::size_t median_index(std::span<const double> levels) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < levels.size(); ++j) {
    if (std::abs(levels[j] - 0.5) < std::abs(levels[best] - 0.5)) best = j;
  }
  return best;
}

}  // namespace

std::string_view to_string(Family f) noexcept { return info(f).tag; }

Family parse_family(std::string_view s) {
  for (const auto& i : kInfo) {
    if (i.tag == s) return i.family;
  }
  throw DomainError("unknown model family '" + std::string(s) + "'");
}

FeatureSet family_features(Family f) noexcept { return info(f).features; }
bool is_linear(Family f) noexcept { return info(f).linear; }
bool is_point(Family f) noexcept { return info(f).point; }

bool operator==(const Hyperparameters& a, const Hyperparameters& b) {
  return a.gbm.n_trees == b.gbm.n_trees && a.gbm.max_depth == b.gbm.max_depth &&
         a.gbm.learning_rate == b.gbm.learning_rate && a.gbm.min_leaf == b.gbm.min_leaf &&
         a.rf.n_trees == b.rf.n_trees && a.rf.max_depth == b.rf.max_depth && a.rf.min_leaf == b.rf.min_leaf &&
         a.rf.bootstrap == b.rf.bootstrap && a.mlp.hidden == b.mlp.hidden && a.mlp.epochs == b.mlp.epochs &&
         a.mlp.learning_rate == b.mlp.learning_rate && a.mlp.batch == b.mlp.batch &&
         a.svr_epsilon == b.svr_epsilon && a.svr_c == b.svr_c;
}

void check_levels(std::span<const double> levels) {
  if (levels.empty()) throw DomainError("at least one quantile level is required");
  for (std::size_t j = 0; j < levels.size(); ++j) {
    if (!(levels[j] > 0.0 && levels[j] < 1.0)) throw DomainError("quantile levels must lie in (0, 1)");
    if (j > 0 && !(levels[j] > levels[j - 1])) throw DomainError("quantile levels must be strictly increasing");
  }
}

std::vector<double> QuantileModelBundle::predict_levels(const FeatureRow& row) const {
  std::vector<double> out(levels.size());
  if (const auto* lin = std::get_if<LinearBody>(&body)) {
    for (std::size_t j = 0; j < levels.size(); ++j) out[j] = lin->models[j].predict(row) + lin->offsets[j];
  } else if (const auto* gbm = std::get_if<GbmBody>(&body)) {
    for (std::size_t j = 0; j < levels.size(); ++j) out[j] = gbm->models[j].predict(row);
  } else if (const auto* rf = std::get_if<ForestBody>(&body)) {
    const double x[2] = {row.age_months, row.bt_celsius};
    out = rf->forest.predict_quantiles(std::span<const double>(x, 2), levels);
  } else {
    out = std::get<MlpBody>(body).model.predict(row);
  }
  return out;
}

double QuantileModelBundle::predict_point(const FeatureRow& row) const {
  if (is_point(family)) return std::get<LinearBody>(body).models.front().predict(row);
  return predict_levels(row)[median_index(levels)];
}

QuantileModelBundle train_bundle(Family family, std::span<const FeatureRow> rows, std::span<const double> y,
                                 const TrainOptions& options) {
  check_levels(options.levels);
  if (rows.size() != y.size()) throw DomainError("train_bundle: rows/targets length mismatch");
  if (rows.empty()) throw FitError("train_bundle: no training rows");

  QuantileModelBundle b;
  b.family = family;
  b.levels = options.levels;
  b.seed = options.seed;
  b.hyper = options.hyper;
  b.hyper.rf.seed = options.seed;
  b.hyper.mlp.seed = options.seed;

  auto [amin, amax] = std::minmax_element(rows.begin(), rows.end(), [](const FeatureRow& p, const FeatureRow& q) {
    return p.age_months < q.age_months;
  });
  auto [bmin, bmax] = std::minmax_element(rows.begin(), rows.end(), [](const FeatureRow& p, const FeatureRow& q) {
    return p.bt_celsius < q.bt_celsius;
  });
  b.bounds = {amin->age_months, amax->age_months, bmin->bt_celsius, bmax->bt_celsius};

  const std::size_t L = b.levels.size();
  const Design x = make_design(family_features(family), rows);
  switch (family) {
    case Family::LR:
    case Family::MLR:
    case Family::PR1: {
      const auto m = fit_ols(x, y);
      b.body = LinearBody{std::vector<LinearModel>(L, m), std::vector<double>(L, 0.0)};
      break;
    }
    case Family::SVR: {
      const auto fit = fit_linear_svr(x, y, b.hyper.svr_epsilon, b.hyper.svr_c);
      b.body = LinearBody{std::vector<LinearModel>(L, fit.model), std::vector<double>(L, 0.0)};
      break;
    }
    case Family::OLS: {
      const auto m = fit_ols(x, y);
      const auto r = residuals(m, x, y);
      LinearBody body{std::vector<LinearModel>(L, m), {}};
      for (double tau : b.levels) body.offsets.push_back(metrics::empirical_quantile(r, tau));
      b.body = std::move(body);
      break;
    }
    case Family::Stat:
    case Family::QR: {
      LinearBody body;
      for (double tau : b.levels) {
        auto fit = family == Family::Stat ? fit_statistical(rows, y, tau) : fit_linear_qr(x, y, tau);
        body.models.push_back(std::move(fit.model));
        body.offsets.push_back(0.0);
      }
      b.body = std::move(body);
      break;
    }
    case Family::GBM: {
      GbmBody body;
      for (double tau : b.levels) body.models.push_back(fit_gbm_qr(x, y, tau, b.hyper.gbm));
      b.body = std::move(body);
      break;
    }
    case Family::RF:
      b.body = ForestBody{fit_rf_quantile(x, y, b.hyper.rf)};
      break;
    case Family::MLP:
      b.body = MlpBody{fit_mlp_qr(x, y, b.levels, b.hyper.mlp)};
      break;
  }
  return b;
}

QuantileModelBundle train_bundle(Family family, std::span<const ObservationPair> pairs, const TrainOptions& options) {
  std::vector<FeatureRow> rows;
  std::vector<double> y;
  rows.reserve(pairs.size());
  y.reserve(pairs.size());
  for (const auto& p : pairs) {
    rows.push_back({p.age_months, p.bt_celsius});
    y.push_back(p.hr_bpm);
  }
  return train_bundle(family, rows, y, options);
}

std::pair<std::size_t, std::size_t> band_level_indices(std::span<const double> levels) {
  std::size_t lo = 0;
  std::size_t hi = levels.size() - 1;
  for (std::size_t j = 0; j < levels.size(); ++j) {
    if (std::abs(levels[j] - 0.05) < 1e-12) lo = j;
    if (std::abs(levels[j] - 0.95) < 1e-12) hi = j;
  }
  return {lo, hi};
}

PredictionBand predict_band(const QuantileModelBundle& bundle, double age_months, double bt_celsius,
                            std::optional<double> observed_hr) {
  PredictionBand band;
  band.levels = bundle.levels;
  if (!std::isfinite(age_months) || !std::isfinite(bt_celsius) ||
      !bundle.bounds.contains(age_months, bt_celsius)) {
    band.status = DomainStatus::OutOfDomain;
    return band;
  }
  band.status = DomainStatus::InDomain;
  band.hr_bpm = bundle.predict_levels({age_months, bt_celsius});
  std::sort(band.hr_bpm.begin(), band.hr_bpm.end());
  if (observed_hr) {
    const auto [lo, hi] = band_level_indices(band.levels);
    band.in_range = band.hr_bpm[lo] <= *observed_hr && *observed_hr <= band.hr_bpm[hi];
  }
  return band;
}

}  // namespace vqr
