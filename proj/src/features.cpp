#include "vqr/features.hpp"

#include "vqr/error.hpp"

namespace vqr {

std::string_view to_string(FeatureSet set) noexcept {
  switch (set) {
    case FeatureSet::AgeOnly: return "age";
    case FeatureSet::Interaction: return "interaction";
    case FeatureSet::Statistical: return "statistical";
    case FeatureSet::Raw: return "raw";
    case FeatureSet::Custom: return "custom";
  }
  return "custom";
}

FeatureSet parse_feature_set(std::string_view s) {
  for (auto set : {FeatureSet::AgeOnly, FeatureSet::Interaction, FeatureSet::Statistical,
                   FeatureSet::Raw, FeatureSet::Custom}) {
    if (to_string(set) == s) return set;
  }
  throw DomainError("unknown feature set '" + std::string(s) + "'");
}

std::vector<std::string> feature_names(FeatureSet set) {
  switch (set) {
    case FeatureSet::AgeOnly: return {"age_months"};
    case FeatureSet::Interaction: return {"age_months", "bt_celsius", "age_x_bt"};
    case FeatureSet::Statistical: return {"bt_celsius", "age_months", "age_sq"};
    case FeatureSet::Raw: return {"age_months", "bt_celsius"};
    case FeatureSet::Custom: return {};
  }
  return {};
}

std::size_t feature_count(FeatureSet set) { return feature_names(set).size(); }

void fill_features(FeatureSet set, const FeatureRow& row, std::span<double> out) {
  switch (set) {
    case FeatureSet::AgeOnly:
      out[0] = row.age_months;
      return;
    case FeatureSet::Interaction:
      out[0] = row.age_months;
      out[1] = row.bt_celsius;
      out[2] = row.interaction();
      return;
    case FeatureSet::Statistical:
      out[0] = row.bt_celsius;
      out[1] = row.age_months;
      out[2] = row.age_sq();
      return;
    case FeatureSet::Raw:
      out[0] = row.age_months;
      out[1] = row.bt_celsius;
      return;
    case FeatureSet::Custom:
      throw DomainError("custom feature sets have no row mapping");
  }
}

Design make_design(FeatureSet set, std::span<const FeatureRow> rows) {
  Design d;
  d.set = set;
  d.names = feature_names(set);
  const auto p = d.names.size();
  d.columns.assign(p, std::vector<double>(rows.size()));
  std::vector<double> buf(p);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    fill_features(set, rows[i], buf);
    for (std::size_t j = 0; j < p; ++j) d.columns[j][i] = buf[j];
  }
  return d;
}

Design custom_design(std::vector<std::vector<double>> columns) {
  Design d;
  d.set = FeatureSet::Custom;
  for (std::size_t j = 0; j < columns.size(); ++j) d.names.push_back("x" + std::to_string(j));
  d.columns = std::move(columns);
  return d;
}

}  // namespace vqr
