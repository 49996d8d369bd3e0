#pragma once

// Seeded multi-experiment runner: split, tune, fit, evaluate, aggregate.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vqr/bundle.hpp"
#include "vqr/domain.hpp"

namespace vqr {

struct ExperimentConfig {
  std::vector<Family> families = {Family::OLS, Family::QR, Family::GBM};
  std::vector<double> levels = kDefaultLevels;
  std::size_t n_experiments = 5;
  std::uint64_t base_seed = 1;
  double split = 0.8;  // training fraction
  bool split_by_patient = false;
  bool tune = true;
  std::size_t jobs = 1;
  Hyperparameters hyper;  // used as-is when tune is false, and for untuned settings
};

struct FamilyRun {
  std::size_t experiment = 0;
  std::uint64_t seed = 0;
  std::optional<std::string> error;  // set when the fit failed
  std::map<double, double> per_level_pinball;
  double total_quantile_loss = 0.0;
  double coverage = 0.0;  // share of test pairs inside the outer band
  std::optional<double> r2;  // linear families
  std::optional<double> mse;
  std::string tuned;  // chosen hyperparameters, empty when untuned
};

struct Summary {
  double mean = 0.0;
  double sd = 0.0;  // sample SD; 0 for a single value
  std::size_t count = 0;
};
Summary summarize(std::span<const double> values);

struct FamilyReport {
  Family family = Family::GBM;
  std::vector<FamilyRun> runs;  // by experiment index
  Summary total_quantile_loss;
  std::map<double, Summary> per_level_pinball;
  std::optional<Summary> r2;
  std::optional<Summary> mse;
  std::size_t failures = 0;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::size_t n_pairs = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<FamilyReport> families;  // in config order
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};
// Seeded shuffle split of indices into a training fraction and the rest.
Split split_pairs(std::span<const ObservationPair> pairs, double train_fraction, std::uint64_t seed,
                  bool by_patient);

// Throws DataError with fewer than 50 pairs; per-family fit errors are
// recorded in the report.
ExperimentReport run_experiments(const ExperimentConfig& config, std::span<const ObservationPair> pairs);

// Aligned text tables: total quantile loss, linear R^2/MSE, per-level loss.
std::string format_report(const ExperimentReport& report);
// One row per (family, experiment).
std::string format_report_csv(const ExperimentReport& report);

struct ScatterRow {
  double age_months = 0.0;
  double bt_celsius = 0.0;
  double hr_true = 0.0;
  double hr_pred = 0.0;
};

// One row per pair, ordered by age then bt. Throws DomainError when `level`
// is not one of the bundle's levels.
std::vector<ScatterRow> export_quantile_scatter(const QuantileModelBundle& bundle,
                                                std::span<const ObservationPair> pairs, double level);
std::string format_scatter(std::span<const ScatterRow> rows);

}  // namespace vqr
