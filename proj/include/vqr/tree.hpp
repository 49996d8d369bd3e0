#pragma once

// Depth-limited binary regression trees grown on squared-error splits.

#include <cstddef>
#include <span>
#include <vector>

namespace vqr {

struct TreeNode {
  int feature = -1;  // < 0 marks a leaf
  double threshold = 0.0;  // x[feature] <= threshold goes left
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output

  bool is_leaf() const noexcept { return feature < 0; }
};

// Nodes are stored in pre-order; nodes[0] is the root.
struct RegressionTree {
  std::vector<TreeNode> nodes;

  std::size_t leaf_index(std::span<const double> x) const;
  double predict(std::span<const double> x) const { return nodes[leaf_index(x)].value; }
  int depth() const;
  std::size_t leaf_count() const;
};

struct TreeParams {
  int max_depth = 3;
  std::size_t min_leaf = 1;
};

// Column-major feature matrix view.
using Columns = std::span<const std::vector<double>>;

struct GrownTree {
  RegressionTree tree;
  // For each node, the sample entries (data indices, possibly repeated) that
  // reached it; filled for leaves only.
  std::vector<std::vector<std::size_t>> leaf_samples;
};

// Sample entries sorted by each feature; reused across trees grown on the
// same sample.
std::vector<std::vector<std::size_t>> presort(Columns x, std::span<const std::size_t> samples);

// Grows a tree on `targets` indexed by data index. Leaves hold the mean target.
GrownTree grow_tree(Columns x, std::span<const double> targets,
                    const std::vector<std::vector<std::size_t>>& sorted, const TreeParams& params);

}  // namespace vqr
