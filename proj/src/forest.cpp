#include "vqr/forest.hpp"

#include <algorithm>
#include <numeric>

#include "vqr/error.hpp"
#include "vqr/metrics.hpp"
#include "vqr/rng.hpp"

namespace vqr {

std::vector<double> QuantileForest::pooled_targets(std::span<const double> x) const {
  std::vector<double> pooled;
  for (const auto& t : trees) {
    const auto& leaf = t.leaf_targets[t.tree.leaf_index(x)];
    pooled.insert(pooled.end(), leaf.begin(), leaf.end());
  }
  return pooled;
}

double QuantileForest::predict_quantile(std::span<const double> x, double tau) const {
  auto pooled = pooled_targets(x);
  if (pooled.empty()) throw FitError("QuantileForest: empty forest");
  return metrics::empirical_quantile_inplace(pooled, tau);
}

std::vector<double> QuantileForest::predict_quantiles(std::span<const double> x,
                                                      std::span<const double> levels) const {
  auto pooled = pooled_targets(x);
  if (pooled.empty()) throw FitError("QuantileForest: empty forest");
  std::sort(pooled.begin(), pooled.end());
  std::vector<double> out;
  out.reserve(levels.size());
  for (double tau : levels) out.push_back(metrics::empirical_quantile(pooled, tau));
  return out;
}

double QuantileForest::predict_mean(std::span<const double> x) const {
  if (trees.empty()) throw FitError("QuantileForest: empty forest");
  double s = 0.0;
  for (const auto& t : trees) s += t.tree.predict(x);
  return s / static_cast<double>(trees.size());
}

QuantileForest fit_rf_quantile(const Design& x, std::span<const double> y, const ForestParams& params) {
  const std::size_t n = y.size();
  if (n == 0) throw FitError("fit_rf_quantile: no rows");
  if (params.n_trees == 0) throw DomainError("fit_rf_quantile: n_trees must be positive");
  for (const auto& c : x.columns) {
    if (c.size() != n) throw DomainError("fit_rf_quantile: design/target length mismatch");
  }
  const TreeParams tree_params{params.max_depth, std::max<std::size_t>(params.min_leaf, 1)};

  QuantileForest forest;
  forest.trees.reserve(params.n_trees);
  std::vector<std::size_t> sample(n);
  for (std::size_t t = 0; t < params.n_trees; ++t) {
    ForestTree ft;
    ft.bootstrap_seed = mix_seed(params.seed, t);
    if (params.bootstrap) {
      Rng rng(ft.bootstrap_seed);
      for (auto& s : sample) s = static_cast<std::size_t>(rng.below(n));
      std::sort(sample.begin(), sample.end());
    } else {
      std::iota(sample.begin(), sample.end(), std::size_t{0});
    }
    const auto sorted = presort(x.columns, sample);
    auto grown = grow_tree(x.columns, y, sorted, tree_params);
    ft.leaf_targets.resize(grown.tree.nodes.size());
    for (std::size_t node = 0; node < grown.tree.nodes.size(); ++node) {
      if (!grown.tree.nodes[node].is_leaf()) continue;
      auto& targets = ft.leaf_targets[node];
      for (auto i : grown.leaf_samples[node]) targets.push_back(y[i]);
      std::sort(targets.begin(), targets.end());
    }
    ft.tree = std::move(grown.tree);
    forest.trees.push_back(std::move(ft));
  }
  return forest;
}

}  // namespace vqr
