#pragma once

// Gradient-boosted quantile regression.
//
// Each stage fits a squared-error tree to the pinball pseudo-responses
// tau - 1[y < F], then replaces every leaf value with the tau-quantile of the
// raw residuals y - F that fell into it. F += learning_rate * tree.

#include <cstddef>
#include <span>
#include <vector>

#include "vqr/features.hpp"
#include "vqr/tree.hpp"

namespace vqr {

struct GbmParams {
  std::size_t n_trees = 200;
  int max_depth = 3;
  double learning_rate = 0.1;
  std::size_t min_leaf = 20;
};

struct GbmModel {
  double tau = 0.5;
  double base_score = 0.0;
  double learning_rate = 0.1;
  std::vector<RegressionTree> trees;

  double predict(std::span<const double> x) const { return predict_stages(x, trees.size()); }
  double predict(const FeatureRow& row) const;
  // Prediction using only the first `stages` trees.
  double predict_stages(std::span<const double> x, std::size_t stages) const;
};

// Optional training trace: train_loss[k] is the mean training pinball loss
// after k stages (k = 0 is the base score alone).
struct GbmTrace {
  std::vector<double> train_loss;
};

// `x` holds the raw {age, bt} columns. Throws FitError when n < min_leaf.
GbmModel fit_gbm_qr(const Design& x, std::span<const double> y, double tau, const GbmParams& params = {},
                    GbmTrace* trace = nullptr);

}  // namespace vqr
