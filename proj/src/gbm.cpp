#include "vqr/gbm.hpp"

#include <numeric>

#include "vqr/error.hpp"
#include "vqr/metrics.hpp"
#include "vqr/simd.hpp"

namespace vqr {

double GbmModel::predict_stages(std::span<const double> x, std::size_t stages) const {
  double s = 0.0;
  for (std::size_t k = 0; k < stages && k < trees.size(); ++k) s += trees[k].predict(x);
  return base_score + learning_rate * s;
}

double GbmModel::predict(const FeatureRow& row) const {
  const double x[2] = {row.age_months, row.bt_celsius};
  return predict(std::span<const double>(x, 2));
}

GbmModel fit_gbm_qr(const Design& x, std::span<const double> y, double tau, const GbmParams& params,
                    GbmTrace* trace) {
  if (!(tau > 0.0 && tau < 1.0)) throw DomainError("fit_gbm_qr: tau must lie in (0, 1)");
  if (!(params.learning_rate > 0.0 && params.learning_rate <= 1.0)) {
    throw DomainError("fit_gbm_qr: learning rate must lie in (0, 1]");
  }
  const std::size_t n = y.size();
  if (n == 0 || n < params.min_leaf) throw FitError("fit_gbm_qr: fewer rows than min_leaf");
  for (const auto& c : x.columns) {
    if (c.size() != n) throw DomainError("fit_gbm_qr: design/target length mismatch");
  }

  GbmModel model;
  model.tau = tau;
  model.learning_rate = params.learning_rate;
  model.base_score = metrics::empirical_quantile(y, tau);
  model.trees.reserve(params.n_trees);

  // f = base + learning_rate * acc, evaluated exactly as predict() does.
  std::vector<double> acc(n, 0.0);
  std::vector<double> f(n, model.base_score);
  std::vector<double> resid(n);
  std::vector<double> pseudo(n);
  std::vector<double> scratch;
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto sorted = presort(x.columns, all);
  const TreeParams tree_params{params.max_depth, std::max<std::size_t>(params.min_leaf, 1)};

  if (trace) {
    trace->train_loss.clear();
    trace->train_loss.push_back(simd::pinball_sum(y, f, tau) / static_cast<double>(n));
  }

  for (std::size_t stage = 0; stage < params.n_trees; ++stage) {
    simd::sub(y, f, resid);
    simd::check_weights(resid, tau, pseudo);
    // Exact fits sit at a kink; use the middle of the subgradient interval.
    for (std::size_t i = 0; i < n; ++i) {
      if (resid[i] == 0.0) pseudo[i] = tau - 0.5;
    }
    auto grown = grow_tree(x.columns, pseudo, sorted, tree_params);

    for (std::size_t node = 0; node < grown.tree.nodes.size(); ++node) {
      auto& nd = grown.tree.nodes[node];
      if (!nd.is_leaf()) continue;
      const auto& members = grown.leaf_samples[node];
      scratch.clear();
      for (auto i : members) scratch.push_back(resid[i]);
      nd.value = scratch.empty() ? 0.0 : metrics::empirical_quantile_inplace(scratch, tau);
      for (auto i : members) {
        acc[i] += nd.value;
        f[i] = model.base_score + params.learning_rate * acc[i];
      }
    }
    model.trees.push_back(std::move(grown.tree));
    if (trace) trace->train_loss.push_back(simd::pinball_sum(y, f, tau) / static_cast<double>(n));
  }
  return model;
}

}  // namespace vqr
