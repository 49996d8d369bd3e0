#pragma once

// Shared vocabulary: patients, vital samples, comfort scores, medication
// windows, and the (age, BT, HR) observation pairs every model consumes.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vqr {

using PatientId = std::string;
using Timestamp = std::int64_t;  // seconds since Unix epoch, UTC

inline constexpr double kDaysPerMonth = 30.4375;
inline constexpr double kDaysPerYear = 365.25;
inline constexpr double kMaxAgeDays = 18.0 * kDaysPerYear;
inline constexpr double kMaxAgeMonths = 216.0;

struct AgeAtAdmission {
  std::int64_t days = 0;

  double months() const noexcept { return static_cast<double>(days) / kDaysPerMonth; }
};

enum class AgeGroup { Newborn, Infant, Toddler, Child, Teenager };
inline constexpr std::array<AgeGroup, 5> kAgeGroups = {
    AgeGroup::Newborn, AgeGroup::Infant, AgeGroup::Toddler, AgeGroup::Child, AgeGroup::Teenager};

std::string_view to_string(AgeGroup g) noexcept;

// Throws DomainError for negative ages or ages above 18 years.
AgeGroup age_group(AgeAtAdmission age);

// Inclusive day range [first, last] covered by a group.
std::pair<std::int64_t, std::int64_t> age_group_days(AgeGroup g) noexcept;

struct TemperatureBucket {
  int floor_celsius = 37;

  friend bool operator==(TemperatureBucket, TemperatureBucket) = default;
  friend auto operator<=>(TemperatureBucket, TemperatureBucket) = default;
};

inline constexpr int kMinBucket = 33;
inline constexpr int kMaxBucket = 40;
inline constexpr int kBucketCount = kMaxBucket - kMinBucket + 1;

// Some(floor(bt)) iff 33.0 <= bt < 41.0.
std::optional<TemperatureBucket> bucket_of(double bt_celsius) noexcept;

enum class VitalKind { HeartRate, BodyTemperature };
enum class TempSite { Rectal, Esophageal, Axillary, Oral };
enum class MeasureMode { Continuous, Manual };

struct VitalSample {
  PatientId patient;
  Timestamp timestamp = 0;
  VitalKind kind = VitalKind::HeartRate;
  double value = 0.0;
  std::optional<TempSite> site;  // BT only
  MeasureMode mode = MeasureMode::Continuous;
};

enum class ComfortScale { CAPD, ComfortB, FLACC, RFLACC, VNS, RASS };

struct ScoreRange {
  int lo;
  int hi;
};
ScoreRange legal_range(ComfortScale scale) noexcept;

struct ComfortAssessment {
  PatientId patient;
  Timestamp timestamp = 0;
  ComfortScale scale = ComfortScale::RASS;
  int score = 0;
};

enum class DrugClass { SlowsHR, RaisesHR, Dexmedetomidine };

struct MedicationInterval {
  PatientId patient;
  DrugClass drug_class = DrugClass::SlowsHR;
  Timestamp start = 0;
  Timestamp end = 0;  // treatment completion, inclusive
};

inline constexpr Timestamp kExtractionWindowSeconds = 96 * 3600;

struct PatientRecord {
  PatientId patient;
  AgeAtAdmission age;
  bool excluded = false;  // ECMO / pacemaker / Berlin heart
  std::vector<VitalSample> vitals;
  std::vector<ComfortAssessment> assessments;
  std::vector<MedicationInterval> medications;
};

inline constexpr double kMinHeartRate = 30.0;
inline constexpr double kMaxHeartRate = 240.0;

struct ObservationPair {
  PatientId patient;
  double age_months = 0.0;
  double bt_celsius = 0.0;
  double hr_bpm = 0.0;
  TemperatureBucket bucket;
  Timestamp timestamp = 0;

  // Validating constructor: HR within [30, 240], BT inside [33, 41), age >= 0.
  static ObservationPair make(PatientId patient, double age_months, double bt_celsius,
                              double hr_bpm, Timestamp timestamp);
};

std::string_view to_string(TempSite s) noexcept;
std::string_view to_string(ComfortScale s) noexcept;
std::string_view to_string(DrugClass d) noexcept;
std::optional<TempSite> parse_site(std::string_view s) noexcept;
std::optional<ComfortScale> parse_scale(std::string_view s) noexcept;
std::optional<DrugClass> parse_drug_class(std::string_view s) noexcept;

}  // namespace vqr
