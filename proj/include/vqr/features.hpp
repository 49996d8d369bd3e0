#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vqr {

struct FeatureRow {
  double age_months = 0.0;
  double bt_celsius = 0.0;

  double interaction() const noexcept { return age_months * bt_celsius; }
  double age_sq() const noexcept { return age_months * age_months; }
};

// Which derived columns a model family consumes.
//   AgeOnly      {age}
//   Interaction  {age, bt, age*bt}
//   Statistical  {bt, age, age^2}
//   Raw          {age, bt}
//   Custom       caller-built columns (no FeatureRow mapping)
enum class FeatureSet { AgeOnly, Interaction, Statistical, Raw, Custom };

std::string_view to_string(FeatureSet set) noexcept;
FeatureSet parse_feature_set(std::string_view s);
std::vector<std::string> feature_names(FeatureSet set);
std::size_t feature_count(FeatureSet set);
void fill_features(FeatureSet set, const FeatureRow& row, std::span<double> out);

// Column-major design matrix.
struct Design {
  FeatureSet set = FeatureSet::Custom;
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const noexcept { return columns.empty() ? 0 : columns.front().size(); }
  std::size_t cols() const noexcept { return columns.size(); }
};

Design make_design(FeatureSet set, std::span<const FeatureRow> rows);
Design custom_design(std::vector<std::vector<double>> columns);

}  // namespace vqr
