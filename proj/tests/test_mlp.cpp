#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "vqr/error.hpp"
#include "vqr/linear.hpp"
#include "vqr/metrics.hpp"
#include "vqr/mlp.hpp"
#include "vqr/rng.hpp"
#include "vqr/synth.hpp"

using namespace vqr;

namespace {

MlpModel random_network(Rng& rng, std::size_t inputs, std::size_t hidden, std::vector<double> levels) {
  auto m = make_mlp(inputs, hidden, std::move(levels));
  auto p = m.parameters();
  for (auto& v : p) v = rng.uniform(-1, 1);
  m.set_parameters(p);
  for (std::size_t j = 0; j < inputs; ++j) {
    m.input_mean[j] = rng.uniform(-1, 1);
    m.input_scale[j] = rng.uniform(0.5, 2);
  }
  m.target_mean = rng.uniform(-1, 1);
  m.target_scale = rng.uniform(0.5, 2);
  return m;
}

}  // namespace

TEST_CASE("mlp parameter layout round-trips") {
  auto m = make_mlp(2, 3, {0.1, 0.9});
  CHECK(m.parameter_count() == 2 * 3 + 3 + 2 * 3 + 2);
  std::vector<double> p(m.parameter_count());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<double>(i);
  m.set_parameters(p);
  CHECK(m.parameters() == p);
  CHECK(m.w1[0] == 0.0);
  CHECK(m.b1[0] == 6.0);
  CHECK(m.w2[0] == 9.0);
  CHECK(m.b2[1] == 16.0);
  CHECK_THROWS(m.set_parameters(std::vector<double>(3)));
  const double x[] = {1.0, 2.0, 3.0};
  CHECK_THROWS(m.predict(std::span<const double>(x, 3)));
}

TEST_CASE("mlp forward pass by hand") {
  auto m = make_mlp(1, 2, {0.5});
  m.w1 = {1.0, -1.0};
  m.b1 = {0.0, 0.5};
  m.w2 = {2.0, 3.0};
  m.b2 = {1.0};
  m.target_mean = 10.0;
  m.target_scale = 2.0;
  const double x[] = {1.0};
  // hidden = relu(1), relu(-0.5) = {1, 0}; out = 2 + 1 = 3 standardized.
  CHECK(m.predict(std::span<const double>(x, 1))[0] == 16.0);
}

TEST_CASE("mlp gradient matches central differences") {
  Rng rng(1);
  for (int rep = 0; rep < 5; ++rep) {
    const auto m = random_network(rng, 2, 8, {0.05, 0.5, 0.95});
    std::vector<std::vector<double>> rows;
    std::vector<double> y;
    for (int i = 0; i < 16; ++i) {
      rows.push_back({rng.uniform(-2, 2), rng.uniform(-2, 2)});
      y.push_back(rng.uniform(-3, 3));
    }
    std::vector<double> grad;
    m.batch_loss(rows, y, &grad);
    const auto p0 = m.parameters();
    REQUIRE(grad.size() == p0.size());
    const double h = 1e-5;
    double worst = 0.0;
    for (std::size_t k = 0; k < p0.size(); ++k) {
      auto mp = m;
      auto p = p0;
      p[k] = p0[k] + h;
      mp.set_parameters(p);
      const double up = mp.batch_loss(rows, y, nullptr);
      p[k] = p0[k] - h;
      mp.set_parameters(p);
      const double down = mp.batch_loss(rows, y, nullptr);
      const double numeric = (up - down) / (2 * h);
      const double denom = std::max({std::abs(numeric), std::abs(grad[k]), 1e-6});
      worst = std::max(worst, std::abs(numeric - grad[k]) / denom);
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("mlp training is deterministic for a seed") {
  SynthConfig cfg;
  cfg.n_pairs = 300;
  cfg.seed = 2;
  const auto cohort = generate(cfg);
  std::vector<FeatureRow> rows;
  std::vector<double> y;
  for (const auto& p : cohort.pairs) {
    rows.push_back({p.age_months, p.bt_celsius});
    y.push_back(p.hr_bpm);
  }
  const auto d = make_design(FeatureSet::Raw, rows);
  const std::vector<double> levels = {0.05, 0.5, 0.95};
  MlpParams params;
  params.hidden = 8;
  params.epochs = 20;
  params.seed = 5;
  MlpTrace t1, t2;
  const auto a = fit_mlp_qr(d, y, levels, params, &t1);
  const auto b = fit_mlp_qr(d, y, levels, params, &t2);
  CHECK(a.parameters() == b.parameters());
  CHECK(t1.epoch_loss == t2.epoch_loss);
  CHECK(t1.epoch_loss.size() == 20);
  params.seed = 6;
  CHECK(fit_mlp_qr(d, y, levels, params).parameters() != a.parameters());
}

TEST_CASE("mlp constant target gives a constant prediction") {
  const auto d = custom_design({{1, 2, 3, 4, 5, 6}, {6, 5, 4, 3, 2, 1}});
  const std::vector<double> y(6, 120.0);
  MlpParams params;
  params.hidden = 4;
  params.epochs = 10;
  const std::vector<double> levels = {0.1, 0.9};
  const auto m = fit_mlp_qr(d, y, levels, params);
  const double x[] = {3.0, 4.0};
  for (double v : m.predict(std::span<const double>(x, 2))) CHECK(v == doctest::Approx(120.0).epsilon(1e-12));
}

TEST_CASE("mlp held-out loss is close to linear quantile regression") {
  SynthConfig cfg;
  cfg.n_pairs = 3000;
  cfg.seed = 3;
  const auto cohort = generate(cfg);
  std::vector<FeatureRow> train_rows, test_rows;
  std::vector<double> train_y, test_y;
  for (std::size_t i = 0; i < cohort.pairs.size(); ++i) {
    const auto& p = cohort.pairs[i];
    auto& rows = i % 4 == 0 ? test_rows : train_rows;
    auto& y = i % 4 == 0 ? test_y : train_y;
    rows.push_back({p.age_months, p.bt_celsius});
    y.push_back(p.hr_bpm);
  }
  const std::vector<double> levels = {0.05, 0.25, 0.5, 0.75, 0.95};
  const auto mlp = fit_mlp_qr(make_design(FeatureSet::Raw, train_rows), train_y, levels);
  const auto train_d = make_design(FeatureSet::Interaction, train_rows);
  const auto test_d = make_design(FeatureSet::Interaction, test_rows);
  double mlp_total = 0, qr_total = 0;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const auto qr = fit_linear_qr(train_d, train_y, levels[l]).model;
    qr_total += mean_pinball_loss(qr, test_d, test_y, levels[l]);
    double s = 0;
    for (std::size_t i = 0; i < test_rows.size(); ++i) {
      s += metrics::pinball(test_y[i], mlp.predict(test_rows[i])[l], levels[l]);
    }
    mlp_total += s / static_cast<double>(test_rows.size());
  }
  MESSAGE("mlp " << mlp_total / 5 << " qr " << qr_total / 5);
  CHECK(mlp_total <= 1.10 * qr_total);
}
