#pragma once

// Linear models: least squares, pinball-loss (quantile) regression and
// epsilon-insensitive support vector regression.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "vqr/features.hpp"

namespace vqr {

struct LinearModel {
  FeatureSet features = FeatureSet::Custom;
  std::vector<std::string> feature_names;
  std::vector<double> coefficients;  // aligned with feature_names
  double intercept = 0.0;

  // Throws DomainError on a feature-count mismatch.
  double predict(std::span<const double> x) const;
  // Throws DomainError for Custom feature sets.
  double predict(const FeatureRow& row) const;
};

// Averaged subgradient descent controls shared by the quantile and SVR fits.
struct SubgradientParams {
  double step_scale = 0.5;  // step = step_scale / sqrt(t) in standardized units
  std::size_t max_iterations = 50'000;
  std::size_t check_every = 100;
  double tolerance = 1e-7;  // on the averaged-iterate objective, original units
  std::size_t polish_sweeps = 50;
};

struct FitDiagnostics {
  bool converged = false;
  std::size_t iterations = 0;
  double final_loss = 0.0;
};

struct LinearFit {
  LinearModel model;
  FitDiagnostics diagnostics;
};

// Least squares through the normal equations (Cholesky). Throws FitError on a
// rank-deficient design or too few rows.
LinearModel fit_ols(const Design& x, std::span<const double> y);

// Minimizes mean pinball loss at tau.
LinearFit fit_linear_qr(const Design& x, std::span<const double> y, double tau,
                        const SubgradientParams& params = {});

// Quantile regression on {bt, age, age^2}.
LinearFit fit_statistical(std::span<const FeatureRow> rows, std::span<const double> y, double tau,
                          const SubgradientParams& params = {});

// Minimizes 0.5 |w|^2 + c_reg * sum max(0, |r| - epsilon); intercept unpenalized.
LinearFit fit_linear_svr(const Design& x, std::span<const double> y, double epsilon, double c_reg,
                         const SubgradientParams& params = {});

double svr_objective(const LinearModel& m, const Design& x, std::span<const double> y,
                     double epsilon, double c_reg);
double mean_pinball_loss(const LinearModel& m, const Design& x, std::span<const double> y,
                         double tau);
std::vector<double> residuals(const LinearModel& m, const Design& x, std::span<const double> y);

}  // namespace vqr
