#pragma once

// Flat-file formats: comma-separated, header row first, '.' decimals.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vqr/domain.hpp"

namespace vqr::io {

std::vector<std::string_view> split_fields(std::string_view line, char delim = ',');

// Strict numeric parses: the whole field must be consumed.
std::optional<double> parse_double(std::string_view s) noexcept;
std::optional<std::int64_t> parse_int(std::string_view s) noexcept;

// Fixed-point decimal formatting ("%.*f").
std::string fixed(double v, int decimals);
// Shortest text that reads back to the same double (up to 17 significant digits).
std::string exact(double v);
// "%.17g": always 17 significant digits.
std::string digits17(double v);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

inline constexpr std::string_view kPairsHeader =
    "patient_id,age_months,bt_celsius,hr_bpm,bucket,timestamp_s";

std::string format_pairs(const std::vector<ObservationPair>& pairs);
std::vector<ObservationPair> parse_pairs(std::string_view text);

void write_pairs(const std::filesystem::path& path, const std::vector<ObservationPair>& pairs);
std::vector<ObservationPair> read_pairs(const std::filesystem::path& path);

// Writes patients.csv, vitals.csv, scores.csv and meds.csv under `dir`.
void write_cohort(const std::filesystem::path& dir, const std::vector<PatientRecord>& records);

}  // namespace vqr::io
