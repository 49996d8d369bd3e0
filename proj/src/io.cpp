#include "vqr/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "vqr/error.hpp"
#include "vqr/ingest.hpp"

namespace vqr::io {

std::vector<std::string_view> split_fields(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::optional<double> parse_double(std::string_view s) noexcept {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<std::int64_t> parse_int(std::string_view s) noexcept {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string fixed(double v, int decimals) {
  char buf[64];
  const int n = std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string out(buf, static_cast<std::size_t>(n));
  // No "-0.0" for values that round to zero.
  if (out.front() == '-' && out.find_first_not_of("-0.") == std::string::npos) out.erase(0, 1);
  return out;
}

std::string exact(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string digits17(double v) {
  char buf[64];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

std::string format_pairs(const std::vector<ObservationPair>& pairs) {
  std::string out;
  out.reserve(pairs.size() * 48 + 64);
  out += kPairsHeader;
  out += '\n';
  for (const auto& p : pairs) {
    out += p.patient;
    out += ',';
    out += fixed(p.age_months, 6);
    out += ',';
    out += fixed(p.bt_celsius, 1);
    out += ',';
    out += fixed(p.hr_bpm, 1);
    out += ',';
    out += std::to_string(p.bucket.floor_celsius);
    out += ',';
    out += std::to_string(p.timestamp);
    out += '\n';
  }
  return out;
}

std::vector<ObservationPair> parse_pairs(std::string_view text) {
  std::vector<ObservationPair> pairs;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (!text.empty()) {
    auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!header_seen) {
      if (line != kPairsHeader) throw DataError("pairs file: header mismatch");
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    const auto f = split_fields(line);
    const auto where = "pairs file line " + std::to_string(line_no);
    if (f.size() != 6) throw DataError(where + ": expected 6 fields");
    const auto age = parse_double(f[1]);
    const auto bt = parse_double(f[2]);
    const auto hr = parse_double(f[3]);
    const auto bucket = parse_int(f[4]);
    const auto ts = parse_int(f[5]);
    if (f[0].empty() || !age || !bt || !hr || !bucket || !ts) {
      throw DataError(where + ": unparseable value");
    }
    try {
      auto p = ObservationPair::make(std::string(f[0]), *age, *bt, *hr, *ts);
      if (p.bucket.floor_celsius != *bucket) throw DataError(where + ": bucket inconsistent with BT");
      pairs.push_back(std::move(p));
    } catch (const DomainError& e) {
      throw DataError(where + ": " + e.what());
    }
  }
  if (!header_seen) throw DataError("pairs file: empty");
  return pairs;
}

void write_pairs(const std::filesystem::path& path, const std::vector<ObservationPair>& pairs) {
  write_file(path, format_pairs(pairs));
}

std::vector<ObservationPair> read_pairs(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError("file missing: " + path.string());
  return parse_pairs(read_file(path));
}

void write_cohort(const std::filesystem::path& dir, const std::vector<PatientRecord>& records) {
  std::filesystem::create_directories(dir);
  const auto files = CohortFiles::in_directory(dir);
  std::string patients(kPatientsHeader);
  std::string vitals(kVitalsHeader);
  std::string scores(kScoresHeader);
  std::string meds(kMedsHeader);
  patients += '\n';
  vitals += '\n';
  scores += '\n';
  meds += '\n';
  for (const auto& r : records) {
    patients += r.patient + ',' + std::to_string(r.age.days) + ',' + (r.excluded ? "1" : "0") + '\n';
    for (const auto& v : r.vitals) {
      vitals += v.patient;
      vitals += ',' + std::to_string(v.timestamp) + ',';
      vitals += v.kind == VitalKind::HeartRate ? "HR" : "BT";
      vitals += ',' + fixed(v.value, 1) + ',';
      if (v.site) vitals += to_string(*v.site);
      vitals += ',';
      vitals += v.mode == MeasureMode::Continuous ? "CONT" : "MANUAL";
      vitals += '\n';
    }
    for (const auto& a : r.assessments) {
      scores += a.patient + ',' + std::to_string(a.timestamp) + ',' + std::string(to_string(a.scale)) +
                ',' + std::to_string(a.score) + '\n';
    }
    for (const auto& m : r.medications) {
      meds += m.patient + ',' + std::string(to_string(m.drug_class)) + ',' + std::to_string(m.start) +
              ',' + std::to_string(m.end) + '\n';
    }
  }
  write_file(files.patients_path, patients);
  write_file(files.vitals_path, vitals);
  write_file(files.scores_path, scores);
  write_file(files.meds_path, meds);
}

}  // namespace vqr::io
