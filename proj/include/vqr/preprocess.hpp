#pragma once

// Vital-sign preprocessing: from raw patient records to one (age, BT, HR)
// observation per patient and temperature bucket.
//
// Per patient the stages run in this order:
//   1. drop HR and BT samples taken inside a medication interval
//   2. normalize axillary BT (+0.5 C)
//   3. median HR per one-minute slot
//   4. pair each BT reading with the median of minute medians within +/-5 min
//   5. drop pairs linked to a comfort assessment that signals movement
//   6. drop pairs whose BT falls outside [33, 41)
//   7. drop pairs with HR outside [30, 240]
// and finally keep the earliest pair per (patient, bucket) across the cohort.

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "vqr/domain.hpp"

namespace vqr {

struct MinuteMedian {
  Timestamp minute_start = 0;  // multiple of 60
  double median_hr = 0.0;
};
using MinuteMedianSeries = std::vector<MinuteMedian>;

struct BtEvent {
  Timestamp timestamp = 0;
  double bt_celsius = 0.0;  // already normalized
};

struct RawPair {
  Timestamp timestamp = 0;  // of the BT reading
  double bt_celsius = 0.0;
  double hr_bpm = 0.0;
};

inline constexpr Timestamp kPairingHalfWindowSeconds = 300;

struct PipelineAudit {
  std::size_t pairs_before = 0;  // BT readings considered
  std::size_t removed_medication = 0;
  std::size_t removed_unpaired = 0;  // no HR minute within +/-5 min
  std::size_t removed_movement = 0;
  std::size_t removed_bt_range = 0;
  std::size_t removed_hr_bounds = 0;
  std::size_t removed_dedupe = 0;
  std::size_t pairs_after = 0;
  std::size_t pairs_without_assessment = 0;  // kept because no score was linked
  // counts[bucket - 33][age group]
  std::array<std::array<std::size_t, 5>, kBucketCount> counts{};

  std::size_t removals() const noexcept {
    return removed_medication + removed_unpaired + removed_movement + removed_bt_range +
           removed_hr_bounds + removed_dedupe;
  }
  friend bool operator==(const PipelineAudit&, const PipelineAudit&) = default;
};

// Throws DomainError when the score is outside the scale's legal range.
bool is_calm(const ComfortAssessment& a);

double normalize_bt(double value_celsius, TempSite site) noexcept;

bool in_medication_window(Timestamp t, std::span<const MedicationInterval> meds) noexcept;

// Samples must be sorted by timestamp.
MinuteMedianSeries minute_medians(std::span<const VitalSample> hr_samples);

std::vector<RawPair> pair_hr_bt(const MinuteMedianSeries& minutes, std::span<const BtEvent> bt_events);

struct MovementGateResult {
  std::vector<RawPair> kept;
  std::size_t removed = 0;
  std::size_t kept_without_assessment = 0;
};

// `bt_times` are all BT reading times of the patient; each assessment is linked
// to the nearest one (ties go to the earlier reading).
MovementGateResult gate_movement(std::span<const RawPair> pairs,
                                 std::span<const ComfortAssessment> assessments,
                                 std::span<const Timestamp> bt_times);

std::vector<ObservationPair> filter_hr_bounds(std::span<const ObservationPair> pairs);
std::vector<RawPair> filter_hr_bounds(std::span<const RawPair> pairs);

// Keeps the earliest pair per (patient, bucket); ties go to lower HR, then lower BT.
// Output is ordered by (patient, bucket).
std::vector<ObservationPair> dedupe_per_patient_bucket(std::span<const ObservationPair> pairs);

struct PipelineResult {
  std::vector<ObservationPair> pairs;  // ordered by (patient, bucket)
  PipelineAudit audit;
};

PipelineResult run_pipeline(std::span<const PatientRecord> records);

// Table-I-shaped text: buckets x age groups plus the counter block.
std::string format_audit(const PipelineAudit& audit);

}  // namespace vqr
