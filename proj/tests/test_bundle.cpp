#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "vqr/bundle.hpp"
#include "vqr/error.hpp"
#include "vqr/persist.hpp"
#include "vqr/rng.hpp"
#include "vqr/synth.hpp"

using namespace vqr;

namespace {

std::vector<ObservationPair> cohort(std::size_t n, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n_pairs = n;
  cfg.seed = seed;
  return generate(cfg).pairs;
}

TrainOptions quick_options() {
  TrainOptions opt;
  opt.hyper.gbm.n_trees = 30;
  opt.hyper.rf.n_trees = 10;
  opt.hyper.mlp.epochs = 15;
  opt.hyper.mlp.hidden = 8;
  return opt;
}

// Five interaction-feature linear models with the given intercepts.
QuantileModelBundle fixed_bundle(std::vector<double> intercepts) {
  QuantileModelBundle b;
  b.family = Family::QR;
  b.bounds = {0, 216, 35, 40};
  LinearBody body;
  for (double c : intercepts) {
    LinearModel m;
    m.features = FeatureSet::Interaction;
    m.feature_names = {"age_months", "bt_celsius", "age_x_bt"};
    m.coefficients = {0, 0, 0};
    m.intercept = c;
    body.models.push_back(m);
  }
  body.offsets.assign(intercepts.size(), 0.0);
  b.body = std::move(body);
  return b;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("family names round-trip") {
  for (Family f : kAllFamilies) CHECK(parse_family(to_string(f)) == f);
  CHECK_THROWS_AS(parse_family("xgboost"), DomainError);
  CHECK(family_features(Family::LR) == FeatureSet::AgeOnly);
  CHECK(family_features(Family::Stat) == FeatureSet::Statistical);
  CHECK(family_features(Family::GBM) == FeatureSet::Raw);
  CHECK(is_linear(Family::QR));
  CHECK_FALSE(is_linear(Family::MLP));
  CHECK(is_point(Family::OLS));
  CHECK_FALSE(is_point(Family::QR));
}

TEST_CASE("level validation and band indices") {
  CHECK_NOTHROW(check_levels(kDefaultLevels));
  CHECK_THROWS_AS(check_levels(std::vector<double>{0.5, 0.25}), DomainError);
  CHECK_THROWS_AS(check_levels(std::vector<double>{0.0, 0.5}), DomainError);
  CHECK_THROWS_AS(check_levels(std::vector<double>{}), DomainError);
  CHECK(band_level_indices(kDefaultLevels) == std::pair<std::size_t, std::size_t>{0, 4});
  CHECK(band_level_indices(std::vector<double>{0.1, 0.5, 0.9}) == std::pair<std::size_t, std::size_t>{0, 2});
  CHECK(band_level_indices(std::vector<double>{0.01, 0.05, 0.5, 0.95, 0.99}) ==
        std::pair<std::size_t, std::size_t>{1, 3});
}

TEST_CASE("predict_band outside the training bounds") {
  const auto b = fixed_bundle({80, 90, 100, 110, 120});
  const auto band = predict_band(b, 217, 37, 100.0);
  CHECK(band.status == DomainStatus::OutOfDomain);
  CHECK(band.hr_bpm.empty());
  CHECK_FALSE(band.in_range.has_value());
  CHECK(predict_band(b, 100, 40.01).status == DomainStatus::OutOfDomain);
  CHECK(predict_band(b, 216, 40).status == DomainStatus::InDomain);
  CHECK(predict_band(b, 0, 35).status == DomainStatus::InDomain);
}

TEST_CASE("predict_band interval is closed") {
  const auto b = fixed_bundle({80, 90, 100, 110, 120});
  CHECK(predict_band(b, 10, 37, 80.0).in_range == true);
  CHECK(predict_band(b, 10, 37, 120.0).in_range == true);
  CHECK(predict_band(b, 10, 37, 79.99).in_range == false);
  CHECK(predict_band(b, 10, 37, 120.01).in_range == false);
  CHECK_FALSE(predict_band(b, 10, 37).in_range.has_value());
}

TEST_CASE("predict_band rearranges crossing quantiles") {
  const auto b = fixed_bundle({80, 105, 100, 110, 95});
  const auto band = predict_band(b, 10, 37, 97.0);
  REQUIRE(band.hr_bpm.size() == 5);
  CHECK(band.hr_bpm == std::vector<double>{80, 95, 100, 105, 110});
  CHECK(band.in_range == true);
  CHECK(b.predict_levels({10, 37}) == std::vector<double>{80, 105, 100, 110, 95});
}

TEST_CASE("trained bundles carry bounds, seed and one prediction per level") {
  const auto pairs = cohort(400, 2);
  for (Family f : kAllFamilies) {
    auto opt = quick_options();
    opt.seed = 9;
    const auto b = train_bundle(f, pairs, opt);
    CHECK(b.family == f);
    CHECK(b.seed == 9);
    CHECK(b.levels == kDefaultLevels);
    double amin = INFINITY, amax = -INFINITY;
    for (const auto& p : pairs) {
      amin = std::min(amin, p.age_months);
      amax = std::max(amax, p.age_months);
    }
    CHECK(b.bounds.age_min == amin);
    CHECK(b.bounds.age_max == amax);
    const auto band = predict_band(b, pairs[0].age_months, pairs[0].bt_celsius, pairs[0].hr_bpm);
    CHECK(band.status == DomainStatus::InDomain);
    REQUIRE(band.hr_bpm.size() == 5);
    CHECK(std::is_sorted(band.hr_bpm.begin(), band.hr_bpm.end()));
    for (double v : band.hr_bpm) CHECK(std::isfinite(v));
  }
}

TEST_CASE("point families replicate one model, ols adds quantile offsets") {
  const auto pairs = cohort(300, 3);
  const auto mlr = train_bundle(Family::MLR, pairs);
  const auto levels = mlr.predict_levels({24, 37.5});
  for (double v : levels) CHECK(v == levels[0]);
  CHECK(mlr.predict_point({24, 37.5}) == levels[0]);

  const auto ols = train_bundle(Family::OLS, pairs);
  const auto q = ols.predict_levels({24, 37.5});
  CHECK(std::is_sorted(q.begin(), q.end()));
  CHECK(q.front() < q.back());
  CHECK(ols.predict_point({24, 37.5}) == doctest::Approx(levels[0]).epsilon(1e-9));
}

TEST_CASE("persistence round-trips every family") {
  const auto pairs = cohort(300, 4);
  const auto dir = std::filesystem::temp_directory_path() / "vqr_bundle_test";
  std::filesystem::create_directories(dir);
  Rng rng(5);
  for (Family f : kAllFamilies) {
    const auto b = train_bundle(f, pairs, quick_options());
    const auto path = dir / (std::string(to_string(f)) + ".model");
    save_model(b, path);
    const auto back = load_model(path);
    CHECK(back.family == b.family);
    CHECK(back.levels == b.levels);
    CHECK(back.bounds == b.bounds);
    CHECK(back.seed == b.seed);
    CHECK(back.hyper == b.hyper);
    CHECK(serialize_bundle(back) == serialize_bundle(b));
    CHECK(model_id(back) == model_id(b));
    CHECK(model_id(b).size() == 16);
    double worst = 0;
    for (int i = 0; i < 1000; ++i) {
      const FeatureRow row{rng.uniform(0, 216), rng.uniform(33, 41)};
      const auto x = b.predict_levels(row);
      const auto y = back.predict_levels(row);
      for (std::size_t l = 0; l < x.size(); ++l) worst = std::max(worst, std::abs(x[l] - y[l]));
    }
    CHECK(worst < 1e-12);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("persistence rejects tampered and truncated files") {
  const auto b = train_bundle(Family::GBM, cohort(200, 5), quick_options());
  const auto text = serialize_bundle(b);
  CHECK(text.rfind(std::string(kModelMagic), 0) == 0);

  std::string tampered = text;
  const auto v = tampered.find(" v1 ");
  REQUIRE(v != std::string::npos);
  tampered.replace(v, 4, " v9 ");
  CHECK_THROWS_AS(parse_bundle(tampered), VersionMismatchError);

  const std::size_t cut = text.size() / 2;
  try {
    parse_bundle(std::string_view(text).substr(0, cut));
    FAIL("truncated model parsed");
  } catch (const CorruptModelError& e) {
    CHECK(e.byte_offset() <= cut);
    CHECK(e.byte_offset() > 0);
  }

  std::string garbage = text;
  garbage[text.find("tree")] = 'X';
  CHECK_THROWS_AS(parse_bundle(garbage), CorruptModelError);
  CHECK_THROWS_AS(parse_bundle(""), ModelFormatError);
  CHECK_THROWS_AS(load_model("/nonexistent/model"), Error);

  const auto path = std::filesystem::temp_directory_path() / "vqr_truncated.model";
  {
    std::ofstream out(path, std::ios::binary);
    out << text.substr(0, text.size() - 10);
  }
  CHECK_THROWS_AS(load_model(path), CorruptModelError);
  std::filesystem::remove(path);
  CHECK(read_file(path).empty());
}
