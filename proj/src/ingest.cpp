#include "vqr/ingest.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "vqr/error.hpp"
#include "vqr/io.hpp"

namespace vqr {

CohortFiles CohortFiles::in_directory(const std::filesystem::path& dir) {
  return CohortFiles{dir / "vitals.csv", dir / "scores.csv", dir / "meds.csv", dir / "patients.csv"};
}

namespace {

struct Line {
  std::size_t number;
  std::string_view text;
};

// Splits file contents into data lines after checking the header.
std::vector<Line> data_lines(std::string_view text, std::string_view header, const char* name) {
  std::vector<Line> lines;
  std::size_t number = 0;
  bool header_seen = false;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++number;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!header_seen) {
      if (line != header) {
        throw DataError(std::string(name) + " file: header mismatch (expected \"" +
                        std::string(header) + "\")");
      }
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    lines.push_back({number, line});
  }
  if (!header_seen) throw DataError(std::string(name) + " file: missing header");
  return lines;
}

enum class Owner { Unknown, Excluded, Loaded };

}  // namespace

Cohort parse_cohort(std::string_view patients_text, std::string_view vitals_text,
                    std::string_view scores_text, std::string_view meds_text) {
  Cohort cohort;
  auto& report = cohort.report;
  std::map<std::string, PatientRecord, std::less<>> loaded;
  std::set<std::string, std::less<>> excluded;

  auto reject = [&report](const char* file, std::size_t line, std::string reason) {
    ++report.rows_rejected;
    report.rejections.push_back({file, line, std::move(reason)});
  };

  const auto patient_lines = data_lines(patients_text, kPatientsHeader, "patients");
  const auto vital_lines = data_lines(vitals_text, kVitalsHeader, "vitals");
  const auto score_lines = data_lines(scores_text, kScoresHeader, "scores");
  const auto med_lines = data_lines(meds_text, kMedsHeader, "meds");
  report.rows_total =
      patient_lines.size() + vital_lines.size() + score_lines.size() + med_lines.size();

  for (const auto& [number, text] : patient_lines) {
    const auto f = io::split_fields(text);
    if (f.size() != 3 || f[0].empty()) {
      reject("patients", number, "wrong field count");
      continue;
    }
    if (loaded.count(f[0]) || excluded.count(f[0])) {
      throw DataError("patients file: duplicate patient id '" + std::string(f[0]) + "' at line " +
                      std::to_string(number));
    }
    const auto days = io::parse_int(f[1]);
    if (!days) {
      reject("patients", number, "unparseable value");
      continue;
    }
    if (*days < 0 || static_cast<double>(*days) > kMaxAgeDays) {
      reject("patients", number, "age outside 0-18 years");
      continue;
    }
    if (f[2] != "0" && f[2] != "1") {
      reject("patients", number, "unparseable value");
      continue;
    }
    ++report.patients_read;
    if (f[2] == "1") {
      ++report.patients_excluded;
      ++report.rows_excluded;
      excluded.emplace(f[0]);
      continue;
    }
    ++report.rows_loaded;
    PatientRecord rec;
    rec.patient = std::string(f[0]);
    rec.age.days = *days;
    loaded.emplace(rec.patient, std::move(rec));
  }

  // Returns the owning record, or nullptr after accounting for the row.
  auto owner = [&](const char* file, std::size_t number,
                   std::string_view id) -> PatientRecord* {
    if (auto it = loaded.find(id); it != loaded.end()) return &it->second;
    if (excluded.count(id)) {
      ++report.rows_excluded;
    } else {
      reject(file, number, "unknown patient");
    }
    return nullptr;
  };

  for (const auto& [number, text] : vital_lines) {
    const auto f = io::split_fields(text);
    if (f.size() != 6) {
      reject("vitals", number, "wrong field count");
      continue;
    }
    PatientRecord* rec = owner("vitals", number, f[0]);
    if (!rec) continue;
    VitalSample s;
    s.patient = rec->patient;
    const auto ts = io::parse_int(f[1]);
    const auto value = io::parse_double(f[3]);
    if (!ts || !value) {
      reject("vitals", number, "unparseable value");
      continue;
    }
    s.timestamp = *ts;
    s.value = *value;
    if (f[2] == "HR") {
      s.kind = VitalKind::HeartRate;
    } else if (f[2] == "BT") {
      s.kind = VitalKind::BodyTemperature;
    } else {
      reject("vitals", number, "unknown kind");
      continue;
    }
    if (f[5] == "CONT") {
      s.mode = MeasureMode::Continuous;
    } else if (f[5] == "MANUAL") {
      s.mode = MeasureMode::Manual;
    } else {
      reject("vitals", number, "unknown mode");
      continue;
    }
    if (s.kind == VitalKind::HeartRate) {
      if (!f[4].empty()) {
        reject("vitals", number, "HR with site");
        continue;
      }
    } else {
      if (f[4].empty()) {
        reject("vitals", number, "BT without site");
        continue;
      }
      s.site = parse_site(f[4]);
      if (!s.site) {
        reject("vitals", number, "unknown site");
        continue;
      }
    }
    ++report.rows_loaded;
    rec->vitals.push_back(std::move(s));
  }

  for (const auto& [number, text] : score_lines) {
    const auto f = io::split_fields(text);
    if (f.size() != 4) {
      reject("scores", number, "wrong field count");
      continue;
    }
    PatientRecord* rec = owner("scores", number, f[0]);
    if (!rec) continue;
    const auto ts = io::parse_int(f[1]);
    const auto scale = parse_scale(f[2]);
    const auto score = io::parse_int(f[3]);
    if (!ts || !score) {
      reject("scores", number, "unparseable value");
      continue;
    }
    if (!scale) {
      reject("scores", number, "unknown scale");
      continue;
    }
    const auto range = legal_range(*scale);
    if (*score < range.lo || *score > range.hi) {
      reject("scores", number, "score outside scale range");
      continue;
    }
    ++report.rows_loaded;
    rec->assessments.push_back({rec->patient, *ts, *scale, static_cast<int>(*score)});
  }

  for (const auto& [number, text] : med_lines) {
    const auto f = io::split_fields(text);
    if (f.size() != 4) {
      reject("meds", number, "wrong field count");
      continue;
    }
    PatientRecord* rec = owner("meds", number, f[0]);
    if (!rec) continue;
    const auto drug = parse_drug_class(f[1]);
    const auto start = io::parse_int(f[2]);
    const auto end = io::parse_int(f[3]);
    if (!start || !end) {
      reject("meds", number, "unparseable value");
      continue;
    }
    if (!drug) {
      reject("meds", number, "unknown drug class");
      continue;
    }
    if (*start > *end) {
      reject("meds", number, "interval ends before it starts");
      continue;
    }
    ++report.rows_loaded;
    rec->medications.push_back({rec->patient, *drug, *start, *end});
  }

  cohort.records.reserve(loaded.size());
  for (auto& [id, rec] : loaded) {
    std::stable_sort(rec.vitals.begin(), rec.vitals.end(),
                     [](const VitalSample& a, const VitalSample& b) { return a.timestamp < b.timestamp; });
    std::stable_sort(rec.assessments.begin(), rec.assessments.end(),
                     [](const ComfortAssessment& a, const ComfortAssessment& b) {
                       return a.timestamp < b.timestamp;
                     });
    std::stable_sort(rec.medications.begin(), rec.medications.end(),
                     [](const MedicationInterval& a, const MedicationInterval& b) {
                       return a.start < b.start;
                     });
    cohort.records.push_back(std::move(rec));
  }
  return cohort;
}

Cohort load_cohort(const CohortFiles& files) {
  for (const auto* p : {&files.patients_path, &files.vitals_path, &files.scores_path, &files.meds_path}) {
    if (!std::filesystem::exists(*p)) throw DataError("file missing: " + p->string());
  }
  const auto patients = io::read_file(files.patients_path);
  const auto vitals = io::read_file(files.vitals_path);
  const auto scores = io::read_file(files.scores_path);
  const auto meds = io::read_file(files.meds_path);
  return parse_cohort(patients, vitals, scores, meds);
}

std::vector<std::string> validate_record(const PatientRecord& record) {
  std::vector<std::string> findings;
  const auto& v = record.vitals;
  if (!std::is_sorted(v.begin(), v.end(),
                      [](const VitalSample& a, const VitalSample& b) { return a.timestamp < b.timestamp; })) {
    findings.emplace_back("vitals not sorted by timestamp");
  }
  for (const auto& s : v) {
    if (s.kind == VitalKind::BodyTemperature && !s.site) {
      findings.emplace_back("BT without site");
      break;
    }
  }
  for (const auto& s : v) {
    if (s.kind == VitalKind::HeartRate && s.site) {
      findings.emplace_back("HR with site");
      break;
    }
  }
  if (!v.empty()) {
    const auto [lo, hi] = std::minmax_element(
        v.begin(), v.end(),
        [](const VitalSample& a, const VitalSample& b) { return a.timestamp < b.timestamp; });
    if (hi->timestamp - lo->timestamp > kExtractionWindowSeconds) {
      findings.emplace_back("window exceeds 96h");
    }
  }
  for (const auto& a : record.assessments) {
    const auto r = legal_range(a.scale);
    if (a.score < r.lo || a.score > r.hi) {
      findings.emplace_back("comfort score outside scale range");
      break;
    }
  }
  for (const auto& m : record.medications) {
    if (m.start > m.end) {
      findings.emplace_back("medication interval ends before it starts");
      break;
    }
  }
  return findings;
}

}  // namespace vqr
