#include "vqr/domain.hpp"

#include <cmath>

#include "vqr/error.hpp"

namespace vqr {

std::string_view to_string(AgeGroup g) noexcept {
  switch (g) {
    case AgeGroup::Newborn: return "Newborn";
    case AgeGroup::Infant: return "Infant";
    case AgeGroup::Toddler: return "Toddler";
    case AgeGroup::Child: return "Child";
    case AgeGroup::Teenager: return "Teenager";
  }
  return "?";
}

AgeGroup age_group(AgeAtAdmission age) {
  if (age.days < 0) throw DomainError("age_group: negative age");
  const auto days = static_cast<double>(age.days);
  if (days > kMaxAgeDays) {
    throw DomainError("age_group: " + std::to_string(age.days) +
                      " days is outside the 0-18 year population");
  }
  if (age.days <= 28) return AgeGroup::Newborn;
  if (days < 1.0 * kDaysPerYear) return AgeGroup::Infant;
  if (days < 2.0 * kDaysPerYear) return AgeGroup::Toddler;
  if (days < 12.0 * kDaysPerYear) return AgeGroup::Child;
  return AgeGroup::Teenager;
}

std::pair<std::int64_t, std::int64_t> age_group_days(AgeGroup g) noexcept {
  switch (g) {
    case AgeGroup::Newborn: return {0, 28};
    case AgeGroup::Infant: return {29, 365};
    case AgeGroup::Toddler: return {366, 730};
    case AgeGroup::Child: return {731, 4382};
    case AgeGroup::Teenager: return {4383, 6574};
  }
  return {0, 0};
}

std::optional<TemperatureBucket> bucket_of(double bt_celsius) noexcept {
  if (!std::isfinite(bt_celsius)) return std::nullopt;
  if (bt_celsius < kMinBucket || bt_celsius >= kMaxBucket + 1) return std::nullopt;
  return TemperatureBucket{static_cast<int>(std::floor(bt_celsius))};
}

ScoreRange legal_range(ComfortScale scale) noexcept {
  switch (scale) {
    case ComfortScale::CAPD: return {0, 32};
    case ComfortScale::ComfortB: return {6, 30};
    case ComfortScale::FLACC:
    case ComfortScale::RFLACC:
    case ComfortScale::VNS: return {0, 10};
    case ComfortScale::RASS: return {-5, 4};
  }
  return {0, 0};
}

ObservationPair ObservationPair::make(PatientId patient, double age_months, double bt_celsius,
                                      double hr_bpm, Timestamp timestamp) {
  if (!std::isfinite(hr_bpm) || hr_bpm < kMinHeartRate || hr_bpm > kMaxHeartRate) {
    throw DomainError("ObservationPair: heart rate " + std::to_string(hr_bpm) +
                      " outside [30, 240]");
  }
  if (!std::isfinite(age_months) || age_months < 0.0) {
    throw DomainError("ObservationPair: invalid age");
  }
  auto bucket = bucket_of(bt_celsius);
  if (!bucket) {
    throw DomainError("ObservationPair: body temperature " + std::to_string(bt_celsius) +
                      " outside [33, 41)");
  }
  return ObservationPair{std::move(patient), age_months, bt_celsius, hr_bpm, *bucket, timestamp};
}

std::string_view to_string(TempSite s) noexcept {
  switch (s) {
    case TempSite::Rectal: return "RECTAL";
    case TempSite::Esophageal: return "ESOPHAGEAL";
    case TempSite::Axillary: return "AXILLARY";
    case TempSite::Oral: return "ORAL";
  }
  return "";
}

std::string_view to_string(ComfortScale s) noexcept {
  switch (s) {
    case ComfortScale::CAPD: return "CAPD";
    case ComfortScale::ComfortB: return "COMFORTB";
    case ComfortScale::FLACC: return "FLACC";
    case ComfortScale::RFLACC: return "RFLACC";
    case ComfortScale::VNS: return "VNS";
    case ComfortScale::RASS: return "RASS";
  }
  return "";
}

std::string_view to_string(DrugClass d) noexcept {
  switch (d) {
    case DrugClass::SlowsHR: return "SLOWS_HR";
    case DrugClass::RaisesHR: return "RAISES_HR";
    case DrugClass::Dexmedetomidine: return "DEXMEDETOMIDINE";
  }
  return "";
}

std::optional<TempSite> parse_site(std::string_view s) noexcept {
  if (s == "RECTAL") return TempSite::Rectal;
  if (s == "ESOPHAGEAL") return TempSite::Esophageal;
  if (s == "AXILLARY") return TempSite::Axillary;
  if (s == "ORAL") return TempSite::Oral;
  return std::nullopt;
}

std::optional<ComfortScale> parse_scale(std::string_view s) noexcept {
  if (s == "CAPD") return ComfortScale::CAPD;
  if (s == "COMFORTB") return ComfortScale::ComfortB;
  if (s == "FLACC") return ComfortScale::FLACC;
  if (s == "RFLACC") return ComfortScale::RFLACC;
  if (s == "VNS") return ComfortScale::VNS;
  if (s == "RASS") return ComfortScale::RASS;
  return std::nullopt;
}

std::optional<DrugClass> parse_drug_class(std::string_view s) noexcept {
  if (s == "SLOWS_HR") return DrugClass::SlowsHR;
  if (s == "RAISES_HR") return DrugClass::RaisesHR;
  if (s == "DEXMEDETOMIDINE") return DrugClass::Dexmedetomidine;
  return std::nullopt;
}

}  // namespace vqr
