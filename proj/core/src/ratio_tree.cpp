// SPDX-License-Identifier: Apache-2.0

#include "facetpart/ratio_tree.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "facetpart/error.hpp"
#include "json_io.hpp"

namespace facetpart {

std::vector<double> extract_features(const Impression& impression,
                                     const FeatureOptions& options) {
  std::vector<double> out;
  if (options.opaque && impression.features()) {
    out = *impression.features();
  }
  if (options.quartiles) {
    std::vector<double> v;
    v.reserve(impression.valued_count());
    for (const Entity& e : impression.entities()) {
      if (e.value) v.push_back(*e.value);
    }
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    for (double q : {0.25, 0.5, 0.75}) {
      const auto pos = static_cast<std::size_t>(std::floor(q * static_cast<double>(n))) + 1;
      out.push_back(v[std::min(pos, n) - 1]);
    }
  }
  return out;
}

RatioTree::RatioTree(std::vector<TreeNode> nodes, std::size_t k, std::size_t dimension,
                     std::size_t total_samples, TreeConfig config)
    : nodes_(std::move(nodes)),
      k_(k),
      dimension_(dimension),
      total_samples_(total_samples),
      config_(std::move(config)) {
  if (nodes_.empty()) throw InvalidArgument("a tree needs at least one node");
  if (k_ < 2) throw InvalidArgument("k must be at least 2");
  const auto count = static_cast<int>(nodes_.size());
  for (const TreeNode& n : nodes_) {
    if (n.ratios.size() != k_ - 1) throw InvalidArgument("node ratio vector has wrong k");
    if (n.is_leaf()) continue;
    if (static_cast<std::size_t>(n.feature) >= dimension_) {
      throw InvalidArgument("split feature out of range");
    }
    if (n.left <= 0 || n.left >= count || n.right <= 0 || n.right >= count) {
      throw InvalidArgument("child index out of range");
    }
  }
}

std::size_t RatioTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::size_t RatioTree::depth() const {
  const std::function<std::size_t(int)> d = [&](int i) -> std::size_t {
    const TreeNode& n = nodes_[static_cast<std::size_t>(i)];
    return n.is_leaf() ? 0 : 1 + std::max(d(n.left), d(n.right));
  };
  return d(0);
}

std::size_t RatioTree::leaf_index(std::span<const double> features) const {
  if (features.size() != dimension_) {
    throw InvalidArgument("feature vector has dimension " + std::to_string(features.size()) +
                          ", tree expects " + std::to_string(dimension_));
  }
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const TreeNode& n = nodes_[i];
    i = static_cast<std::size_t>(features[static_cast<std::size_t>(n.feature)] <= n.threshold
                                     ? n.left
                                     : n.right);
  }
  return i;
}

double RatioTree::weighted_cn() const {
  double total = 0.0;
  for (const TreeNode& n : nodes_) {
    if (n.is_leaf()) {
      total += static_cast<double>(n.samples) / static_cast<double>(total_samples_) * n.cn;
    }
  }
  return total;
}

RatioTree RatioTree::collapse(std::span<const std::size_t> node_indices) const {
  std::vector<bool> cut(nodes_.size(), false);
  for (std::size_t i : node_indices) {
    if (i >= nodes_.size()) throw InvalidArgument("node index out of range");
    cut[i] = true;
  }
  // Preorder copy that stops at collapsed nodes.
  std::vector<TreeNode> out;
  const std::function<int(std::size_t)> copy = [&](std::size_t i) -> int {
    const auto at = static_cast<int>(out.size());
    out.push_back(nodes_[i]);
    if (nodes_[i].is_leaf() || cut[i]) {
      TreeNode& n = out.back();
      n.feature = -1;
      n.threshold = 0.0;
      n.left = n.right = -1;
      return at;
    }
    const int l = copy(static_cast<std::size_t>(nodes_[i].left));
    const int r = copy(static_cast<std::size_t>(nodes_[i].right));
    out[static_cast<std::size_t>(at)].left = l;
    out[static_cast<std::size_t>(at)].right = r;
    return at;
  };
  copy(0);
  return RatioTree(std::move(out), k_, dimension_, total_samples_, config_);
}

namespace {

struct Sample {
  std::vector<double> x;
  double z = 0.0;
  std::size_t size = 0;
};

std::vector<Sample> prepare(const SearchLog& log, const FeatureOptions& features) {
  std::vector<Sample> out;
  out.reserve(log.size());
  for (const Impression& imp : log.impressions()) {
    out.push_back({extract_features(imp, features), compute_z(imp), imp.valued_count()});
  }
  return out;
}

RatioFit fit_node(const std::vector<Sample>& s, std::span<const std::size_t> idx,
                  std::size_t k, const RatioOptimizerOptions& options) {
  std::vector<double> z;
  std::vector<std::size_t> sizes;
  z.reserve(idx.size());
  sizes.reserve(idx.size());
  for (std::size_t i : idx) {
    z.push_back(s[i].z);
    sizes.push_back(s[i].size);
  }
  return optimize_ratio(EmpiricalCdf(std::move(z), sizes), k, options);
}

bool improves(double candidate, double incumbent) {
  return candidate < incumbent - 1e-12 * std::max(1.0, std::abs(incumbent));
}

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double score = std::numeric_limits<double>::infinity();
};

class Grower {
 public:
  Grower(const std::vector<Sample>& samples, std::size_t k, const TreeConfig& config,
         std::size_t dimension)
      : s_(samples), k_(k), c_(config), dim_(dimension) {}

  std::vector<TreeNode> grow() {
    std::vector<std::size_t> all(s_.size());
    std::iota(all.begin(), all.end(), 0);
    build(all, 0);
    return std::move(nodes_);
  }

 private:
  int build(const std::vector<std::size_t>& idx, std::size_t depth) {
    const RatioFit fit = fit_node(s_, idx, k_, c_.optimizer);
    const auto at = static_cast<int>(nodes_.size());
    TreeNode node;
    node.ratios = fit.ratios;
    node.cn = fit.cn;
    node.samples = idx.size();
    nodes_.push_back(node);

    if (depth >= c_.max_depth || idx.size() < 2 * std::max<std::size_t>(c_.min_leaf, 1)) {
      return at;
    }
    const Split split = c_.criterion == SplitCriterion::kMse ? best_mse(idx) : best_cn(idx, fit.cn);
    if (split.feature < 0) return at;

    std::vector<std::size_t> left, right;
    for (std::size_t i : idx) {
      (s_[i].x[static_cast<std::size_t>(split.feature)] <= split.threshold ? left : right)
          .push_back(i);
    }
    if (left.empty() || right.empty()) return at;
    const int l = build(left, depth + 1);
    const int r = build(right, depth + 1);
    TreeNode& n = nodes_[static_cast<std::size_t>(at)];
    n.feature = split.feature;
    n.threshold = split.threshold;
    n.left = l;
    n.right = r;
    return at;
  }

  // Positions p in `sorted` such that a cut before p leaves at least min_leaf
  // samples on each side and separates distinct values.
  std::vector<std::size_t> cut_positions(const std::vector<std::size_t>& sorted,
                                         std::size_t f) const {
    const std::size_t n = sorted.size();
    const std::size_t m = std::max<std::size_t>(c_.min_leaf, 1);
    std::vector<std::size_t> cuts;
    for (std::size_t p = m; p + m <= n; ++p) {
      if (s_[sorted[p - 1]].x[f] < s_[sorted[p]].x[f]) cuts.push_back(p);
    }
    return cuts;
  }

  std::vector<std::size_t> sorted_by(const std::vector<std::size_t>& idx, std::size_t f) const {
    std::vector<std::size_t> sorted = idx;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [&](std::size_t a, std::size_t b) { return s_[a].x[f] < s_[b].x[f]; });
    return sorted;
  }

  double threshold_at(const std::vector<std::size_t>& sorted, std::size_t f, std::size_t p) const {
    return std::midpoint(s_[sorted[p - 1]].x[f], s_[sorted[p]].x[f]);
  }

  Split best_mse(const std::vector<std::size_t>& idx) const {
    double sum = 0.0, sq = 0.0;
    for (std::size_t i : idx) {
      sum += s_[i].z;
      sq += s_[i].z * s_[i].z;
    }
    const auto sse = [](double s, double q, double n) { return n > 0 ? q - s * s / n : 0.0; };
    const double parent = sse(sum, sq, static_cast<double>(idx.size()));

    Split best;
    best.score = parent;
    for (std::size_t f = 0; f < dim_; ++f) {
      const auto sorted = sorted_by(idx, f);
      std::vector<double> ps(sorted.size() + 1, 0.0), pq(sorted.size() + 1, 0.0);
      for (std::size_t p = 0; p < sorted.size(); ++p) {
        ps[p + 1] = ps[p] + s_[sorted[p]].z;
        pq[p + 1] = pq[p] + s_[sorted[p]].z * s_[sorted[p]].z;
      }
      const double n = static_cast<double>(sorted.size());
      for (std::size_t p : cut_positions(sorted, f)) {
        const double np = static_cast<double>(p);
        const double score = sse(ps[p], pq[p], np) + sse(sum - ps[p], sq - pq[p], n - np);
        if (improves(score, best.score)) {
          best = {static_cast<int>(f), threshold_at(sorted, f, p), score};
        }
      }
    }
    return best;
  }

  Split best_cn(const std::vector<std::size_t>& idx, double parent_cn) const {
    RatioOptimizerOptions opts = c_.optimizer;
    opts.restarts = std::max<std::size_t>(1, std::min(opts.restarts, c_.split_restarts));
    const double n = static_cast<double>(idx.size());

    Split best;
    best.score = parent_cn;
    for (std::size_t f = 0; f < dim_; ++f) {
      const auto sorted = sorted_by(idx, f);
      auto cuts = cut_positions(sorted, f);
      if (c_.max_thresholds > 0 && cuts.size() > c_.max_thresholds) {
        std::vector<std::size_t> kept;
        const double step = static_cast<double>(cuts.size()) / static_cast<double>(c_.max_thresholds);
        for (std::size_t t = 0; t < c_.max_thresholds; ++t) {
          kept.push_back(cuts[static_cast<std::size_t>((static_cast<double>(t) + 0.5) * step)]);
        }
        cuts = std::move(kept);
      }
      for (std::size_t p : cuts) {
        const std::span<const std::size_t> all(sorted);
        const double cl = fit_node(s_, all.first(p), k_, opts).cn;
        const double cr = fit_node(s_, all.subspan(p), k_, opts).cn;
        const double np = static_cast<double>(p);
        const double score = np / n * cl + (n - np) / n * cr;
        if (improves(score, best.score)) {
          best = {static_cast<int>(f), threshold_at(sorted, f, p), score};
        }
      }
    }
    return best;
  }

  const std::vector<Sample>& s_;
  std::size_t k_;
  const TreeConfig& c_;
  std::size_t dim_;
  std::vector<TreeNode> nodes_;
};

std::size_t feature_dimension(const std::vector<Sample>& s) {
  const std::size_t d = s.front().x.size();
  for (const Sample& x : s) {
    if (x.x.size() != d) throw InvalidArgument("impressions have differing feature dimensions");
  }
  return d;
}

}  // namespace

RatioTree fit_tree(const SearchLog& train, std::size_t k, const TreeConfig& config) {
  if (train.empty()) throw InvalidArgument("empty training log");
  if (k < 2) throw InvalidArgument("tree needs k >= 2");
  const auto samples = prepare(train, config.features);
  const std::size_t dim = feature_dimension(samples);
  if (dim == 0) throw InvalidArgument("impressions carry no features for the tree");
  Grower g(samples, k, config, dim);
  return RatioTree(g.grow(), k, dim, samples.size(), config);
}

std::vector<PruneStep> cost_complexity_sequence(const RatioTree& tree) {
  std::vector<PruneStep> seq{{0.0, tree}};
  RatioTree cur = tree;
  while (cur.leaf_count() > 1) {
    const auto& nodes = cur.nodes();
    const double total = static_cast<double>(cur.total_samples());
    // Subtree loss and leaf count for every node, children before parents.
    std::vector<double> loss(nodes.size());
    std::vector<std::size_t> leaves(nodes.size());
    for (std::size_t i = nodes.size(); i-- > 0;) {
      const TreeNode& n = nodes[i];
      if (n.is_leaf()) {
        loss[i] = static_cast<double>(n.samples) / total * n.cn;
        leaves[i] = 1;
      } else {
        const auto l = static_cast<std::size_t>(n.left), r = static_cast<std::size_t>(n.right);
        loss[i] = loss[l] + loss[r];
        leaves[i] = leaves[l] + leaves[r];
      }
    }
    std::vector<double> g(nodes.size(), std::numeric_limits<double>::infinity());
    double alpha = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i].is_leaf()) continue;
      const double own = static_cast<double>(nodes[i].samples) / total * nodes[i].cn;
      g[i] = std::max(0.0, (own - loss[i]) / static_cast<double>(leaves[i] - 1));
      alpha = std::min(alpha, g[i]);
    }
    std::vector<std::size_t> weakest;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (g[i] <= alpha + 1e-15 * std::max(1.0, alpha)) weakest.push_back(i);
    }
    cur = cur.collapse(weakest);
    seq.push_back({alpha, cur});
  }
  return seq;
}

namespace {

// Largest-alpha step whose alpha does not exceed beta.
const RatioTree& tree_at(const std::vector<PruneStep>& seq, double beta) {
  std::size_t m = 0;
  while (m + 1 < seq.size() && seq[m + 1].alpha <= beta) ++m;
  return seq[m].tree;
}

}  // namespace

RatioTree prune_tree(const RatioTree& tree, const SearchLog& train, PruneReport* report) {
  const auto seq = cost_complexity_sequence(tree);
  if (seq.size() == 1) {
    if (report) *report = {{0.0}, {}, {}, 0};
    return tree;
  }
  const TreeConfig& config = tree.config();
  const std::size_t m = seq.size();
  std::vector<double> betas(m);
  for (std::size_t i = 0; i + 1 < m; ++i) {
    betas[i] = std::sqrt(seq[i].alpha * seq[i + 1].alpha);
  }
  betas[m - 1] = std::numeric_limits<double>::infinity();

  // losses[i]: held-out range widths for candidate i, pooled over folds.
  std::vector<std::vector<double>> losses(m);
  const auto folds = time_ordered_folds(train, config.cv_folds);
  std::vector<bool> held(train.size());
  for (const auto& fold : folds) {
    std::fill(held.begin(), held.end(), false);
    for (std::size_t i : fold) held[i] = true;
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (!held[i]) rest.push_back(i);
    }
    if (rest.empty() || fold.empty()) continue;
    const auto fold_seq = cost_complexity_sequence(fit_tree(subset(train, rest), tree.k(), config));
    for (std::size_t i : fold) {
      const Impression& imp = train[i];
      const auto x = extract_features(imp, config.features);
      const double z = compute_z(imp);
      for (std::size_t c = 0; c < m; ++c) {
        losses[c].push_back(range_width_at(tree_at(fold_seq, betas[c]).predict(x), z));
      }
    }
  }

  PruneReport rep;
  for (std::size_t c = 0; c < m; ++c) {
    const auto& l = losses[c];
    const double n = static_cast<double>(l.size());
    const double mu = std::accumulate(l.begin(), l.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : l) ss += (v - mu) * (v - mu);
    rep.alphas.push_back(seq[c].alpha);
    rep.cv_scores.push_back(mu);
    rep.cv_se.push_back(l.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0);
  }
  const auto best = static_cast<std::size_t>(
      std::min_element(rep.cv_scores.begin(), rep.cv_scores.end()) - rep.cv_scores.begin());
  const double limit = rep.cv_scores[best] + config.se_factor * rep.cv_se[best];
  rep.chosen = best;
  for (std::size_t c = m; c-- > best;) {
    if (rep.cv_scores[c] <= limit) {
      rep.chosen = c;
      break;
    }
  }
  if (report) *report = rep;
  return seq[rep.chosen].tree;
}

bool is_subtree(const RatioTree& sub, const RatioTree& full) {
  if (sub.k() != full.k() || sub.dimension() != full.dimension()) return false;
  const std::function<bool(int, int)> match = [&](int a, int b) {
    const TreeNode& x = sub.nodes()[static_cast<std::size_t>(a)];
    const TreeNode& y = full.nodes()[static_cast<std::size_t>(b)];
    if (x.ratios != y.ratios || x.cn != y.cn || x.samples != y.samples) return false;
    if (x.is_leaf()) return true;
    if (y.is_leaf() || x.feature != y.feature || x.threshold != y.threshold) return false;
    return match(x.left, y.left) && match(x.right, y.right);
  };
  return match(0, 0);
}

void save_tree(std::ostream& out, const RatioTree& tree) {
  detail::ojson j;
  j["k"] = tree.k();
  j["dimension"] = tree.dimension();
  j["total_samples"] = tree.total_samples();
  j["config"] = detail::to_json(tree.config());
  auto nodes = detail::ojson::array();
  for (const TreeNode& n : tree.nodes()) {
    detail::ojson o;
    o["feature"] = n.feature;
    o["threshold"] = n.threshold;
    o["left"] = n.left;
    o["right"] = n.right;
    o["ratios"] = n.ratios.values();
    o["cn"] = n.cn;
    o["samples"] = n.samples;
    nodes.push_back(std::move(o));
  }
  j["nodes"] = std::move(nodes);
  out << j.dump(1) << '\n';
}

void save_tree(const std::filesystem::path& path, const RatioTree& tree) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  save_tree(out, tree);
}

RatioTree load_tree(std::istream& in) {
  try {
    const auto j = nlohmann::json::parse(in);
    TreeConfig config;
    if (auto it = j.find("config"); it != j.end()) detail::from_json(*it, config);
    std::vector<TreeNode> nodes;
    for (const auto& o : j.at("nodes")) {
      TreeNode n;
      n.feature = o.at("feature").get<int>();
      n.threshold = o.at("threshold").get<double>();
      n.left = o.at("left").get<int>();
      n.right = o.at("right").get<int>();
      n.ratios = RatioVector(o.at("ratios").get<std::vector<double>>());
      n.cn = o.at("cn").get<double>();
      n.samples = o.at("samples").get<std::size_t>();
      nodes.push_back(std::move(n));
    }
    return RatioTree(std::move(nodes), j.at("k").get<std::size_t>(),
                     j.at("dimension").get<std::size_t>(),
                     j.at("total_samples").get<std::size_t>(), config);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed tree file: ") + e.what());
  }
}

RatioTree load_tree(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open tree file '" + path.string() + "'");
  return load_tree(in);
}

}  // namespace facetpart
