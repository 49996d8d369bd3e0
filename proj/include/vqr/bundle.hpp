#pragma once

// A trained model family for a set of quantile levels, plus the training
// domain it is allowed to answer for.

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "vqr/domain.hpp"
#include "vqr/features.hpp"
#include "vqr/forest.hpp"
#include "vqr/gbm.hpp"
#include "vqr/linear.hpp"
#include "vqr/mlp.hpp"

namespace vqr {

// lr    least squares on age only
// mlr   least squares on {age, bt, age*bt}
// pr1   degree-1 polynomial least squares, same columns as mlr
// svr   linear epsilon-SVR on {age, bt, age*bt}
// stat  quantile regression on {bt, age, age^2}
// ols   least squares plus per-level residual quantile offsets
// qr    linear quantile regression on {age, bt, age*bt}
// gbm   gradient-boosted quantile trees on {age, bt}
// rf    quantile regression forest on {age, bt}
// mlp   multi-head pinball MLP on {age, bt}
enum class Family { LR, MLR, PR1, SVR, Stat, OLS, QR, GBM, RF, MLP };

inline constexpr Family kAllFamilies[] = {Family::LR,  Family::MLR, Family::PR1, Family::SVR, Family::Stat,
                                          Family::OLS, Family::QR,  Family::GBM, Family::RF,  Family::MLP};

std::string_view to_string(Family f) noexcept;
Family parse_family(std::string_view s);  // throws DomainError
FeatureSet family_features(Family f) noexcept;
// Families reported with R^2 and MSE.
bool is_linear(Family f) noexcept;
// Families that fit one conditional-mean model and reuse it for every level.
bool is_point(Family f) noexcept;

inline const std::vector<double> kDefaultLevels = {0.05, 0.25, 0.5, 0.75, 0.95};

struct Hyperparameters {
  GbmParams gbm;
  ForestParams rf;  // rf.seed is overwritten by the bundle seed
  MlpParams mlp;    // mlp.seed is overwritten by the bundle seed
  double svr_epsilon = 1.0;
  double svr_c = 1.0;

  friend bool operator==(const Hyperparameters&, const Hyperparameters&);
};

struct DomainBounds {
  double age_min = 0.0;
  double age_max = 0.0;
  double bt_min = 0.0;
  double bt_max = 0.0;

  bool contains(double age_months, double bt_celsius) const noexcept {
    return age_months >= age_min && age_months <= age_max && bt_celsius >= bt_min && bt_celsius <= bt_max;
  }
  friend bool operator==(const DomainBounds&, const DomainBounds&) = default;
};

struct LinearBody {
  std::vector<LinearModel> models;  // one per level
  std::vector<double> offsets;      // added to each level's prediction
};
struct GbmBody {
  std::vector<GbmModel> models;  // one per level
};
struct ForestBody {
  QuantileForest forest;
};
struct MlpBody {
  MlpModel model;
};

struct QuantileModelBundle {
  Family family = Family::GBM;
  std::vector<double> levels = kDefaultLevels;
  DomainBounds bounds;
  std::uint64_t seed = 1;
  Hyperparameters hyper;
  std::variant<LinearBody, GbmBody, ForestBody, MlpBody> body;

  FeatureSet features() const noexcept { return family_features(family); }
  // Raw per-level predictions (no rearrangement, no domain check).
  std::vector<double> predict_levels(const FeatureRow& row) const;
  // Conditional-mean model for point families; the level nearest 0.5 otherwise.
  double predict_point(const FeatureRow& row) const;
};

struct TrainOptions {
  std::vector<double> levels = kDefaultLevels;
  std::uint64_t seed = 1;
  Hyperparameters hyper;
};

// Throws FitError when a family cannot be fitted on the data.
QuantileModelBundle train_bundle(Family family, std::span<const FeatureRow> rows, std::span<const double> y,
                                 const TrainOptions& options = {});
QuantileModelBundle train_bundle(Family family, std::span<const ObservationPair> pairs,
                                 const TrainOptions& options = {});

enum class DomainStatus { InDomain, OutOfDomain };

struct PredictionBand {
  DomainStatus status = DomainStatus::OutOfDomain;
  std::vector<double> levels;
  std::vector<double> hr_bpm;  // empty when OutOfDomain; non-decreasing otherwise
  std::optional<bool> in_range;
};

// The band's lower and upper levels: 0.05 and 0.95 when present, otherwise
// the outermost levels.
std::pair<std::size_t, std::size_t> band_level_indices(std::span<const double> levels);

PredictionBand predict_band(const QuantileModelBundle& bundle, double age_months, double bt_celsius,
                            std::optional<double> observed_hr = std::nullopt);

void check_levels(std::span<const double> levels);  // throws DomainError

}  // namespace vqr
