#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "vqr/domain.hpp"

namespace vqr {

struct CohortFiles {
  std::filesystem::path vitals_path;
  std::filesystem::path scores_path;
  std::filesystem::path meds_path;
  std::filesystem::path patients_path;

  // patients.csv, vitals.csv, scores.csv, meds.csv inside `dir`.
  static CohortFiles in_directory(const std::filesystem::path& dir);
};

inline constexpr std::string_view kPatientsHeader = "patient_id,age_days,excluded";
inline constexpr std::string_view kVitalsHeader = "patient_id,timestamp_s,kind,value,site,mode";
inline constexpr std::string_view kScoresHeader = "patient_id,timestamp_s,scale,score";
inline constexpr std::string_view kMedsHeader = "patient_id,drug_class,start_s,end_s";

struct RowRejection {
  std::string file;  // "patients", "vitals", "scores" or "meds"
  std::size_t line = 0;
  std::string reason;
};

struct IngestReport {
  std::size_t patients_read = 0;
  std::size_t patients_excluded = 0;
  std::size_t rows_total = 0;
  std::size_t rows_loaded = 0;
  std::size_t rows_excluded = 0;  // rows belonging to excluded patients
  std::size_t rows_rejected = 0;
  std::vector<RowRejection> rejections;
};

struct Cohort {
  std::vector<PatientRecord> records;  // sorted by patient id
  IngestReport report;
};

// Parses the four cohort files. Throws DataError on a missing file, a header
// mismatch or a duplicated patient id; malformed rows are rejected and counted.
Cohort load_cohort(const CohortFiles& files);

// Same parser over in-memory file contents.
Cohort parse_cohort(std::string_view patients, std::string_view vitals, std::string_view scores,
                    std::string_view meds);

std::vector<std::string> validate_record(const PatientRecord& record);

}  // namespace vqr
