#include "vqr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <boost/math/distributions/normal.hpp>

#include "vqr/error.hpp"
#include "vqr/rng.hpp"

namespace vqr {

namespace {

constexpr double kDecay = 0.02;  // per month
constexpr Timestamp kEpoch = 1'600'000'000;

std::string patient_id(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "S%06zu", i + 1);
  return buf;
}

// Draws an index with probability proportional to weights[i].
std::size_t draw_weighted(Rng& rng, const std::vector<double>& cumulative) {
  const double u = rng.uniform() * cumulative.back();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cumulative.begin(),
                                                           static_cast<std::ptrdiff_t>(cumulative.size()) - 1));
}

std::vector<double> cumulate(const std::vector<double>& w) {
  std::vector<double> c(w.size());
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) c[i] = (s += w[i]);
  return c;
}

// BT on a 0.1 grid inside the bucket.
double draw_bt(Rng& rng, int bucket) {
  return static_cast<double>(10 * bucket + static_cast<int>(rng.below(10))) / 10.0;
}

AgeAtAdmission draw_age(Rng& rng, AgeGroup group) {
  const auto [lo, hi] = age_group_days(group);
  return AgeAtAdmission{rng.between(lo, hi)};
}

std::vector<PatientRecord> generate_raw(const SynthConfig& config, const GroundTruth& truth) {
  Rng rng(mix_seed(config.seed, 1));

  std::vector<double> group_weights(5, 0.0);
  for (const auto& row : kReferenceCounts) {
    for (std::size_t g = 0; g < 5; ++g) group_weights[g] += row[g];
  }
  const auto group_cum = cumulate(group_weights);
  std::array<std::vector<double>, 5> bucket_cum;
  for (std::size_t g = 0; g < 5; ++g) {
    std::vector<double> w;
    for (const auto& row : kReferenceCounts) w.push_back(row[g]);
    bucket_cum[g] = cumulate(w);
  }

  constexpr ComfortScale kScales[] = {ComfortScale::CAPD, ComfortScale::ComfortB, ComfortScale::FLACC,
                                      ComfortScale::RFLACC, ComfortScale::VNS, ComfortScale::RASS};
  constexpr DrugClass kDrugs[] = {DrugClass::SlowsHR, DrugClass::RaisesHR, DrugClass::Dexmedetomidine};

  std::vector<PatientRecord> records;
  std::size_t readings = 0;
  for (std::size_t p = 0; readings < config.n_pairs; ++p) {
    PatientRecord rec;
    rec.patient = patient_id(p);
    const auto group = static_cast<std::size_t>(draw_weighted(rng, group_cum));
    rec.age = draw_age(rng, kAgeGroups[group]);
    rec.excluded = rng.uniform() < 0.02;
    const double age = rec.age.months();

    const auto n_bt = std::min<std::size_t>(static_cast<std::size_t>(rng.between(2, 6)), config.n_pairs - readings);
    readings += n_bt;
    Timestamp t = kEpoch + static_cast<Timestamp>(p) * 7 * 24 * 3600 + rng.between(0, 3600);
    for (std::size_t k = 0; k < n_bt; ++k) {
      if (k > 0) t += rng.between(2 * 3600, 4 * 3600);
      const int bucket = kMinBucket + static_cast<int>(draw_weighted(rng, bucket_cum[group]));
      const double bt = draw_bt(rng, bucket);
      const double hr = std::clamp(truth.hr(age, bt, rng.normal()), kMinHeartRate, kMaxHeartRate);

      const bool axillary = rng.uniform() < 0.3;
      VitalSample reading{rec.patient, t, VitalKind::BodyTemperature, bt, TempSite::Rectal, MeasureMode::Manual};
      if (axillary) {
        reading.site = TempSite::Axillary;
        reading.value = std::round((bt - 0.5) * 10.0) / 10.0;
      }
      for (Timestamp s = t - 360; s <= t + 360; s += 15) {
        const double v = std::clamp(std::round(hr + 2.0 * rng.normal()), 1.0, 300.0);
        rec.vitals.push_back({rec.patient, s, VitalKind::HeartRate, v, std::nullopt, MeasureMode::Continuous});
      }
      rec.vitals.push_back(reading);

      if (rng.uniform() < 0.5) {
        const auto scale = kScales[rng.below(std::size(kScales))];
        const auto range = legal_range(scale);
        const bool agitated = rng.uniform() < 0.15;
        int score = 0;
        switch (scale) {
          case ComfortScale::CAPD: score = agitated ? static_cast<int>(rng.between(9, range.hi)) : static_cast<int>(rng.between(0, 8)); break;
          case ComfortScale::ComfortB: score = agitated ? static_cast<int>(rng.between(18, range.hi)) : static_cast<int>(rng.between(11, 17)); break;
          case ComfortScale::RASS: score = agitated ? static_cast<int>(rng.between(2, range.hi)) : static_cast<int>(rng.between(-2, 1)); break;
          default: score = agitated ? static_cast<int>(rng.between(4, range.hi)) : static_cast<int>(rng.between(0, 3)); break;
        }
        rec.assessments.push_back({rec.patient, t + rng.between(-600, 600), scale, score});
      }
      if (rng.uniform() < 0.1) {
        const auto start = t - rng.between(60, 1800);
        rec.medications.push_back({rec.patient, kDrugs[rng.below(std::size(kDrugs))], start, t + rng.between(0, 1800)});
      }
    }
    std::stable_sort(rec.vitals.begin(), rec.vitals.end(),
                     [](const VitalSample& a, const VitalSample& b) { return a.timestamp < b.timestamp; });
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace

double GroundTruth::median_hr(double age_months) noexcept {
  if (age_months < 1.0) return 140.0 + 10.0 * age_months * (2.0 - age_months);
  const double floor_term = std::exp(-kDecay * 215.0);
  return 75.0 + 75.0 * (std::exp(-kDecay * (age_months - 1.0)) - floor_term) / (1.0 - floor_term);
}

double GroundTruth::noise_scale(double age_months) const noexcept {
  return heteroscedastic ? noise_sd * median_hr(age_months) / 120.0 : noise_sd;
}

double GroundTruth::hr(double age_months, double bt_celsius, double z) const noexcept {
  return median_hr(age_months) + slope * (bt_celsius - 37.0) + noise_scale(age_months) * z;
}

double oracle_quantile(const GroundTruth& truth, double age_months, double bt_celsius, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw DomainError("oracle_quantile: tau must lie in (0, 1)");
  const double z = tau == 0.5 ? 0.0 : boost::math::quantile(boost::math::normal_distribution<double>(), tau);
  return truth.hr(age_months, bt_celsius, z);
}

SynthCohort generate(const SynthConfig& config) {
  if (config.n_pairs == 0) throw DomainError("synth: n_pairs must be positive");
  if (!(config.noise_sd_bpm >= 0.0) || !std::isfinite(config.noise_sd_bpm)) {
    throw DomainError("synth: noise_sd_bpm must be a finite non-negative number");
  }
  if (!std::isfinite(config.bt_slope_bpm_per_c)) throw DomainError("synth: bt slope must be finite");

  SynthCohort out;
  out.truth = GroundTruth{config.bt_slope_bpm_per_c, config.noise_sd_bpm, config.heteroscedastic};
  if (config.raw_mode) {
    out.records = generate_raw(config, out.truth);
    return out;
  }

  std::vector<double> weights;
  for (const auto& row : kReferenceCounts) weights.insert(weights.end(), row.begin(), row.end());
  const auto cum = cumulate(weights);

  Rng rng(mix_seed(config.seed, 0));
  out.pairs.reserve(config.n_pairs);
  for (std::size_t i = 0; i < config.n_pairs; ++i) {
    const auto cell = draw_weighted(rng, cum);
    const int bucket = kMinBucket + static_cast<int>(cell / 5);
    const auto group = kAgeGroups[cell % 5];
    const AgeAtAdmission age = draw_age(rng, group);
    const double bt = draw_bt(rng, bucket);
    const double z = rng.normal();
    const double hr = std::clamp(out.truth.hr(age.months(), bt, z), kMinHeartRate, kMaxHeartRate);
    out.pairs.push_back(ObservationPair::make(patient_id(i), age.months(), bt, hr,
                                              kEpoch + static_cast<Timestamp>(i) * 60));
  }
  return out;
}

}  // namespace vqr
