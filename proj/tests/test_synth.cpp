#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "vqr/error.hpp"
#include "vqr/metrics.hpp"
#include "vqr/synth.hpp"

using namespace vqr;

namespace {

AgeGroup group_of(const ObservationPair& p) {
  return age_group(AgeAtAdmission{static_cast<std::int64_t>(std::llround(p.age_months * 30.4375))});
}

}  // namespace

TEST_CASE("synthetic cohort is reproducible") {
  SynthConfig cfg;
  cfg.n_pairs = 500;
  cfg.seed = 7;
  const auto a = generate(cfg);
  const auto b = generate(cfg);
  REQUIRE(a.pairs.size() == 500);
  REQUIRE(b.pairs.size() == 500);
  for (std::size_t i = 0; i < a.pairs.size(); ++i) {
    CHECK(a.pairs[i].hr_bpm == b.pairs[i].hr_bpm);
    CHECK(a.pairs[i].bt_celsius == b.pairs[i].bt_celsius);
    CHECK(a.pairs[i].age_months == b.pairs[i].age_months);
    CHECK(a.pairs[i].patient == b.pairs[i].patient);
  }
  cfg.seed = 8;
  const auto c = generate(cfg);
  bool differs = false;
  for (std::size_t i = 0; i < a.pairs.size(); ++i) differs |= a.pairs[i].hr_bpm != c.pairs[i].hr_bpm;
  CHECK(differs);
}

TEST_CASE("synthetic cells follow the reference counts") {
  const auto c = generate(SynthConfig{});
  REQUIRE(c.pairs.size() == 4462);
  std::size_t hit = 0;
  std::size_t cold = 0;
  for (const auto& p : c.pairs) {
    CHECK(p.bt_celsius >= 33.0);
    CHECK(p.bt_celsius < 41.0);
    CHECK(p.hr_bpm >= 30.0);
    CHECK(p.hr_bpm <= 240.0);
    CHECK(p.bucket.floor_celsius == static_cast<int>(std::floor(p.bt_celsius)));
    if (p.bucket.floor_celsius == 37 && group_of(p) == AgeGroup::Child) ++hit;
    if (p.bucket.floor_celsius == 40 && group_of(p) == AgeGroup::Newborn) ++cold;
  }
  CHECK(std::abs(static_cast<double>(hit) / 4462.0 - 752.0 / 4462.0) <= 0.02);
  CHECK(cold == 0);  // empty reference cell
}

TEST_CASE("noiseless cohort follows the law exactly") {
  SynthConfig cfg;
  cfg.n_pairs = 400;
  cfg.noise_sd_bpm = 0.0;
  const auto c = generate(cfg);
  for (const auto& p : c.pairs) {
    const double expect = GroundTruth::median_hr(p.age_months) + 10.0 * (p.bt_celsius - 37.0);
    CHECK(p.hr_bpm == doctest::Approx(std::clamp(expect, 30.0, 240.0)).epsilon(1e-12));
  }
  const GroundTruth t{10.0, 0.0, true};
  CHECK(t.hr(24, 38.5, 0) - t.hr(24, 37.5, 0) == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("ground truth shape and oracle quantiles") {
  CHECK(GroundTruth::median_hr(0) == doctest::Approx(140.0));
  CHECK(GroundTruth::median_hr(1) == doctest::Approx(150.0));
  CHECK(GroundTruth::median_hr(216) == doctest::Approx(75.0));
  for (double a = 1; a < 216; a += 0.5) CHECK(GroundTruth::median_hr(a + 0.5) < GroundTruth::median_hr(a));

  const GroundTruth homo{10.0, 12.0, false};
  CHECK(oracle_quantile(homo, 60, 37, 0.5) == doctest::Approx(GroundTruth::median_hr(60)));
  CHECK(oracle_quantile(homo, 60, 37, 0.95) - oracle_quantile(homo, 60, 37, 0.5) ==
        doctest::Approx(1.6449 * 12).epsilon(1e-4));
  CHECK(oracle_quantile(homo, 60, 38, 0.5) - oracle_quantile(homo, 60, 37, 0.5) == doctest::Approx(10.0));

  const GroundTruth hetero{10.0, 12.0, true};
  CHECK(hetero.noise_scale(216) == doctest::Approx(12.0 * 75.0 / 120.0));
  CHECK(hetero.noise_scale(1) > hetero.noise_scale(100));
}

TEST_CASE("large homoscedastic cohort matches oracle quantiles") {
  SynthConfig cfg;
  cfg.n_pairs = 50000;
  cfg.seed = 3;
  cfg.heteroscedastic = false;
  const auto c = generate(cfg);
  std::vector<double> resid;
  for (const auto& p : c.pairs) resid.push_back(p.hr_bpm - oracle_quantile(c.truth, p.age_months, p.bt_celsius, 0.5));
  CHECK(std::abs(metrics::empirical_quantile(resid, 0.95) - 1.6449 * 12) <= 2.0);
  CHECK(std::abs(metrics::empirical_quantile(resid, 0.05) + 1.6449 * 12) <= 2.0);
  CHECK(std::abs(metrics::empirical_quantile(resid, 0.5)) <= 2.0);
}

TEST_CASE("raw mode produces patient records") {
  SynthConfig cfg;
  cfg.n_pairs = 200;
  cfg.raw_mode = true;
  const auto c = generate(cfg);
  CHECK(c.pairs.empty());
  REQUIRE_FALSE(c.records.empty());
  std::size_t bt = 0;
  std::set<std::string> ids;
  for (const auto& r : c.records) {
    ids.insert(r.patient);
    for (const auto& v : r.vitals) bt += v.kind == VitalKind::BodyTemperature;
  }
  CHECK(ids.size() == c.records.size());
  CHECK(bt == 200);
}

TEST_CASE("invalid synth config") {
  SynthConfig cfg;
  cfg.n_pairs = 0;
  CHECK_THROWS_AS(generate(cfg), DomainError);
  cfg.n_pairs = 10;
  cfg.noise_sd_bpm = -1;
  CHECK_THROWS_AS(generate(cfg), DomainError);
}
