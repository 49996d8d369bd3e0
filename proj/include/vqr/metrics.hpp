#pragma once

#include <map>
#include <span>
#include <vector>

namespace vqr::metrics {

// Coefficient of determination 1 - SSR/SST. Throws DomainError when y_true has
// zero variance or lengths differ.
double r2(std::span<const double> y_true, std::span<const double> y_pred);

double mse(std::span<const double> y_true, std::span<const double> y_pred);

// max(tau (y - y_hat), (tau - 1)(y - y_hat)); tau must lie in (0, 1).
double pinball(double y, double y_hat, double tau);

double mean_pinball(std::span<const double> y_true, std::span<const double> y_pred, double tau);

// Unweighted mean of per-level mean losses.
double total_quantile_loss(const std::map<double, double>& per_level_means);

// Fraction of i with q_low[i] <= y[i] <= q_high[i].
double coverage(std::span<const double> y_true, std::span<const double> q_low,
                std::span<const double> q_high);

// Lower empirical quantile: the ceil(n tau)-th smallest value. This is the
// smallest sample value minimizing the mean pinball loss at tau.
double empirical_quantile(std::span<const double> values, double tau);
// Same, but reorders `values` in place (no allocation).
double empirical_quantile_inplace(std::span<double> values, double tau);

struct EvalResult {
  double r2 = 0.0;
  double mse = 0.0;
  std::map<double, double> per_level_pinball;
  double total_quantile_loss = 0.0;
  double coverage_05_95 = 0.0;  // band between the lowest and highest level
};

}  // namespace vqr::metrics
