#pragma once

// Versioned text format for QuantileModelBundle.
//
//   vqr-model v1 family=<tag> levels=<l1,...> features=<n1,...> bounds=<age_min,age_max,bt_min,bt_max>
//       seed=<n> <hyperparameter>=<value> ...
//   <family body>
//   end
//
// Body numbers are written with 17 significant digits and header numbers in
// shortest round-trip form, so a round trip reproduces every parameter exactly.

#include <filesystem>
#include <string>
#include <string_view>

#include "vqr/bundle.hpp"

namespace vqr {

inline constexpr std::string_view kModelMagic = "vqr-model";
inline constexpr std::string_view kModelVersion = "v1";

std::string serialize_bundle(const QuantileModelBundle& bundle);
// Throws VersionMismatchError or CorruptModelError (with the byte offset of the
// first offending token).
QuantileModelBundle parse_bundle(std::string_view text);

void save_model(const QuantileModelBundle& bundle, const std::filesystem::path& path);
QuantileModelBundle load_model(const std::filesystem::path& path);

// First line of the serialized form.
std::string bundle_header(const QuantileModelBundle& bundle);
// 16 hex digits of the FNV-1a hash of the serialized form.
std::string model_id(const QuantileModelBundle& bundle);
std::string model_id_of_text(std::string_view text);

}  // namespace vqr
