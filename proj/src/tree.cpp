#include "vqr/tree.hpp"

#include <algorithm>
#include <functional>

namespace vqr {

std::size_t RegressionTree::leaf_index(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& nd = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left
                                                                                           : nd.right);
  }
  return i;
}

int RegressionTree::depth() const {
  std::function<int(int)> rec = [&](int i) -> int {
    const auto& nd = nodes[static_cast<std::size_t>(i)];
    if (nd.is_leaf()) return 0;
    return 1 + std::max(rec(nd.left), rec(nd.right));
  };
  return nodes.empty() ? 0 : rec(0);
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::vector<std::vector<std::size_t>> presort(Columns x, std::span<const std::size_t> samples) {
  std::vector<std::vector<std::size_t>> sorted(x.size());
  for (std::size_t f = 0; f < x.size(); ++f) {
    auto& s = sorted[f];
    s.assign(samples.begin(), samples.end());
    const auto& col = x[f];
    std::stable_sort(s.begin(), s.end(), [&col](std::size_t a, std::size_t b) { return col[a] < col[b]; });
  }
  return sorted;
}

namespace {

class Grower {
 public:
  Grower(Columns x, std::span<const double> targets, const TreeParams& params)
      : x_(x), targets_(targets), params_(params) {}

  int grow(const std::vector<std::vector<std::size_t>>& sorted, int depth) {
    const int id = static_cast<int>(out_.tree.nodes.size());
    out_.tree.nodes.emplace_back();
    out_.leaf_samples.emplace_back();

    const auto& any = sorted.front();
    const std::size_t n = any.size();
    double sum = 0.0;
    double sumsq = 0.0;
    for (auto i : any) {
      sum += targets_[i];
      sumsq += targets_[i] * targets_[i];
    }

    int best_feature = -1;
    double best_gain = 0.0;
    double best_threshold = 0.0;
    if (depth < params_.max_depth && n >= 2 * params_.min_leaf && n >= 2) {
      const double parent = sum * sum / static_cast<double>(n);
      for (std::size_t f = 0; f < sorted.size(); ++f) {
        const auto& list = sorted[f];
        const auto& col = x_[f];
        double left = 0.0;
        for (std::size_t k = 1; k < n; ++k) {
          left += targets_[list[k - 1]];
          if (k < params_.min_leaf || n - k < params_.min_leaf) continue;
          const double a = col[list[k - 1]];
          const double b = col[list[k]];
          if (!(a < b)) continue;
          const double right = sum - left;
          const double gain = left * left / static_cast<double>(k) +
                              right * right / static_cast<double>(n - k) - parent;
          if (gain > best_gain) {
            best_gain = gain;
            best_feature = static_cast<int>(f);
            double mid = a + (b - a) / 2.0;
            if (!(mid < b)) mid = a;
            best_threshold = mid;
          }
        }
      }
    }

    if (best_feature < 0 || !(best_gain > 1e-12 * sumsq)) {
      auto& node = out_.tree.nodes[static_cast<std::size_t>(id)];
      node.value = n > 0 ? sum / static_cast<double>(n) : 0.0;
      out_.leaf_samples[static_cast<std::size_t>(id)] = any;
      return id;
    }

    const auto& col = x_[static_cast<std::size_t>(best_feature)];
    std::vector<std::vector<std::size_t>> left_sorted(sorted.size());
    std::vector<std::vector<std::size_t>> right_sorted(sorted.size());
    for (std::size_t f = 0; f < sorted.size(); ++f) {
      for (auto i : sorted[f]) {
        (col[i] <= best_threshold ? left_sorted[f] : right_sorted[f]).push_back(i);
      }
    }
    const int l = grow(left_sorted, depth + 1);
    const int r = grow(right_sorted, depth + 1);
    auto& node = out_.tree.nodes[static_cast<std::size_t>(id)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  GrownTree take() { return std::move(out_); }

 private:
  Columns x_;
  std::span<const double> targets_;
  TreeParams params_;
  GrownTree out_;
};

}  // namespace

GrownTree grow_tree(Columns x, std::span<const double> targets,
                    const std::vector<std::vector<std::size_t>>& sorted, const TreeParams& params) {
  Grower g(x, targets, params);
  g.grow(sorted, 0);
  return g.take();
}

}  // namespace vqr
