#pragma once

// Quantile regression forest: a bagged squared-error forest whose leaves keep
// the training targets; a tau-quantile prediction pools the targets of the
// leaves a query reaches across all trees.

#include <cstdint>
#include <span>
#include <vector>

#include "vqr/features.hpp"
#include "vqr/tree.hpp"

namespace vqr {

struct ForestParams {
  std::size_t n_trees = 100;
  int max_depth = 8;
  std::size_t min_leaf = 5;
  bool bootstrap = true;
  std::uint64_t seed = 1;
};

struct ForestTree {
  RegressionTree tree;
  std::uint64_t bootstrap_seed = 0;
  // Training targets per node (empty for internal nodes); sorted ascending.
  std::vector<std::vector<double>> leaf_targets;
};

struct QuantileForest {
  std::vector<ForestTree> trees;

  std::vector<double> pooled_targets(std::span<const double> x) const;
  double predict_quantile(std::span<const double> x, double tau) const;
  std::vector<double> predict_quantiles(std::span<const double> x, std::span<const double> levels) const;
  // Average of per-tree leaf means.
  double predict_mean(std::span<const double> x) const;
};

QuantileForest fit_rf_quantile(const Design& x, std::span<const double> y, const ForestParams& params = {});

}  // namespace vqr
