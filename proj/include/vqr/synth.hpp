#pragma once

// Seeded synthetic cohorts with a known heart-rate law.
//
//   hr = median_hr(age) + slope * (bt - 37) + sd(age) * z,   z ~ N(0, 1)
//
// clamped to [30, 240]. Observations are spread over (temperature bucket,
// age group) cells in proportion to the published cohort counts.

#include <array>
#include <cstdint>
#include <vector>

#include "vqr/domain.hpp"

namespace vqr {

// Observation counts per (bucket 33..40, age group) of the reference cohort.
inline constexpr std::array<std::array<int, 5>, kBucketCount> kReferenceCounts = {{
    {2, 2, 0, 1, 1},
    {8, 3, 0, 4, 2},
    {10, 15, 3, 18, 13},
    {110, 335, 139, 640, 391},
    {136, 442, 201, 752, 420},
    {48, 168, 53, 243, 117},
    {5, 28, 13, 78, 28},
    {0, 3, 2, 21, 7},
}};

struct SynthConfig {
  std::size_t n_pairs = 4462;  // raw mode: number of BT readings
  std::uint64_t seed = 1;
  double bt_slope_bpm_per_c = 10.0;
  double noise_sd_bpm = 12.0;
  bool heteroscedastic = true;  // sd(age) = noise_sd * median_hr(age) / 120
  bool raw_mode = false;
};

struct GroundTruth {
  double slope = 10.0;
  double noise_sd = 12.0;
  bool heteroscedastic = true;

  // 140 bpm at birth, peak 150 at one month, then exponential decay to 75 at 216 months.
  static double median_hr(double age_months) noexcept;
  double noise_scale(double age_months) const noexcept;
  // Unclamped law evaluated at a standard-normal draw z.
  double hr(double age_months, double bt_celsius, double z) const noexcept;
};

// Conditional tau-quantile of the unclamped law.
double oracle_quantile(const GroundTruth& truth, double age_months, double bt_celsius, double tau);

struct SynthCohort {
  std::vector<ObservationPair> pairs;    // filled unless raw_mode
  std::vector<PatientRecord> records;    // filled in raw_mode
  GroundTruth truth;
};

// Throws DomainError for an invalid config.
SynthCohort generate(const SynthConfig& config);

}  // namespace vqr
