// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "facetpart/log_model.hpp"
#include "facetpart/partition.hpp"
#include "facetpart/ratio_opt.hpp"

namespace facetpart {

struct FeatureOptions {
  bool opaque = true;      // pass through the impression's own features
  bool quartiles = false;  // append the 25/50/75% smallest facet values

  bool operator==(const FeatureOptions&) const = default;
};

// Concatenates the opaque feature vector (when present and enabled) with the
// quartile values. The q-quartile is the (floor(q*n) + 1)-th smallest valued
// entity, clamped to n.
std::vector<double> extract_features(const Impression& impression,
                                     const FeatureOptions& options);

enum class SplitCriterion { kMinCn, kMse };

struct TreeConfig {
  SplitCriterion criterion = SplitCriterion::kMse;
  std::size_t min_leaf = 30;
  std::size_t max_depth = 6;
  FeatureOptions features;
  // Optimizer used for every node's final ratio vector.
  RatioOptimizerOptions optimizer;
  // Restarts used while scoring candidate splits under kMinCn.
  std::size_t split_restarts = 3;
  // Cap on thresholds tried per dimension under kMinCn (evenly spaced among
  // the distinct midpoints); 0 tries all of them.
  std::size_t max_thresholds = 32;
  std::size_t cv_folds = 5;
  double se_factor = 0.5;

  bool operator==(const TreeConfig&) const = default;
};

struct TreeNode {
  int feature = -1;  // -1 for a leaf
  double threshold = 0.0;
  int left = -1;   // x[feature] <= threshold
  int right = -1;  // x[feature] >  threshold
  RatioVector ratios;
  double cn = 1.0;           // training C_n of the node's own samples
  std::size_t samples = 0;

  bool is_leaf() const noexcept { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

class RatioTree {
 public:
  RatioTree() = default;
  RatioTree(std::vector<TreeNode> nodes, std::size_t k, std::size_t dimension,
            std::size_t total_samples, TreeConfig config);

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  const TreeNode& root() const { return nodes_.front(); }
  std::size_t k() const noexcept { return k_; }
  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t total_samples() const noexcept { return total_samples_; }
  const TreeConfig& config() const noexcept { return config_; }

  std::size_t leaf_count() const;
  std::size_t depth() const;

  // Index of the leaf that `features` routes to. Throws InvalidArgument on a
  // dimension mismatch.
  std::size_t leaf_index(std::span<const double> features) const;
  const RatioVector& predict(std::span<const double> features) const {
    return nodes_[leaf_index(features)].ratios;
  }

  // Sum over leaves of (leaf samples / total) * leaf C_n.
  double weighted_cn() const;

  // Copy with the subtree below each listed node replaced by that node.
  RatioTree collapse(std::span<const std::size_t> node_indices) const;

  bool operator==(const RatioTree&) const = default;

 private:
  std::vector<TreeNode> nodes_;
  std::size_t k_ = 2;
  std::size_t dimension_ = 0;
  std::size_t total_samples_ = 0;
  TreeConfig config_;
};

// Grows a full tree. Every node stores the C_n-minimizing ratio vector of its
// samples. Throws InvalidArgument for an empty log, k < 2 or impressions
// without features.
RatioTree fit_tree(const SearchLog& train, std::size_t k,
                   const TreeConfig& config = {});

struct PruneStep {
  double alpha = 0.0;
  RatioTree tree;
};

// Weakest-link sequence T_0 = tree, ..., T_M = root only, with training loss
// equal to weighted_cn().
std::vector<PruneStep> cost_complexity_sequence(const RatioTree& tree);

struct PruneReport {
  std::vector<double> alphas;
  std::vector<double> cv_scores;  // held-out C_n per alpha
  std::vector<double> cv_se;
  std::size_t chosen = 0;
};

// Minimal cost-complexity pruning. Folds are contiguous in timestamp order;
// the held-out score of a subtree is the mean width of the range containing
// each held-out z. Picks the smallest subtree whose score is within
// se_factor * SE of the best.
RatioTree prune_tree(const RatioTree& tree, const SearchLog& train,
                     PruneReport* report = nullptr);

inline const RatioVector& predict_ratio(const RatioTree& tree,
                                        std::span<const double> features) {
  return tree.predict(features);
}

// True when `sub` can be obtained from `full` by collapsing internal nodes.
bool is_subtree(const RatioTree& sub, const RatioTree& full);

void save_tree(std::ostream& out, const RatioTree& tree);
void save_tree(const std::filesystem::path& path, const RatioTree& tree);
RatioTree load_tree(std::istream& in);
RatioTree load_tree(const std::filesystem::path& path);

}  // namespace facetpart
