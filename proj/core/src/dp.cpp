// SPDX-License-Identifier: Apache-2.0

#include "facetpart/dp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "facetpart/error.hpp"
#include "facetpart/partition.hpp"

namespace facetpart {

namespace {

void check_inputs(std::span<const ValuedEntity> entities, std::span<const double> p,
                  std::size_t k) {
  if (k == 0) throw InvalidArgument("k must be at least 1");
  if (entities.empty()) throw InvalidArgument("no valued entities to partition");
  if (p.size() != entities.size()) {
    throw InvalidArgument("probabilities must align with entities");
  }
}

bool tie_or_better(double candidate, double best) {
  return candidate <= best + kObjectiveTieTolerance * std::max(1.0, std::abs(best));
}

bool strictly_better(double candidate, double best) {
  return candidate < best - kObjectiveTieTolerance * std::max(1.0, std::abs(best));
}

// Fenwick tree over compressed ranks holding counts and probability mass.
class RankIndex {
 public:
  explicit RankIndex(std::size_t n) : count_(n + 1, 0), mass_(n + 1, 0.0) {}

  void clear() {
    std::fill(count_.begin(), count_.end(), 0);
    std::fill(mass_.begin(), mass_.end(), 0.0);
    total_mass_ = 0.0;
  }

  void insert(std::size_t pos, double p) {
    total_mass_ += p;
    for (std::size_t i = pos + 1; i < count_.size(); i += i & (~i + 1)) {
      ++count_[i];
      mass_[i] += p;
    }
  }

  // Entities with compressed rank < pos.
  std::size_t count_below(std::size_t pos) const {
    std::size_t c = 0;
    for (std::size_t i = pos; i > 0; i -= i & (~i + 1)) c += count_[i];
    return c;
  }

  // Mass of entities with compressed rank > pos.
  double mass_above(std::size_t pos) const {
    double m = 0.0;
    for (std::size_t i = pos + 1; i > 0; i -= i & (~i + 1)) m += mass_[i];
    return total_mass_ - m;
  }

 private:
  std::vector<std::size_t> count_;
  std::vector<double> mass_;
  double total_mass_ = 0.0;
};

struct Blocks {
  std::vector<std::size_t> order;   // entity indices sorted by value
  std::vector<std::size_t> offset;  // block b covers order[offset[b], offset[b+1])
  std::vector<double> value;        // distinct value of each block

  std::size_t count() const noexcept { return value.size(); }
  double separator_before(std::size_t b) const {
    return std::midpoint(value[b - 1], value[b]);
  }
};

Blocks make_blocks(std::span<const ValuedEntity> entities) {
  Blocks bl;
  bl.order.resize(entities.size());
  std::iota(bl.order.begin(), bl.order.end(), 0);
  std::stable_sort(bl.order.begin(), bl.order.end(), [&](std::size_t a, std::size_t b) {
    return entities[a].value < entities[b].value;
  });
  for (std::size_t i = 0; i < bl.order.size(); ++i) {
    const double v = entities[bl.order[i]].value;
    if (i == 0 || v != bl.value.back()) {
      bl.offset.push_back(i);
      bl.value.push_back(v);
    }
  }
  bl.offset.push_back(bl.order.size());
  return bl;
}

}  // namespace

double expected_rr(std::span<const ValuedEntity> entities, std::span<const double> p,
                   const SeparatorSet& s) {
  if (p.size() != entities.size()) {
    throw InvalidArgument("probabilities must align with entities");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < entities.size(); ++i) {
    if (p[i] == 0.0) continue;
    total += p[i] * static_cast<double>(refined_rank(entities, i, s));
  }
  return total;
}

SeparatorSet dp_partition(std::span<const ValuedEntity> entities,
                          std::span<const double> p, std::size_t k) {
  check_inputs(entities, p, k);
  const Blocks bl = make_blocks(entities);
  const std::size_t g = bl.count();
  const std::size_t ranges = std::min(k, g);
  if (ranges == 1) return SeparatorSet({}, k);

  // Compressed rank of each entity.
  const std::size_t n = entities.size();
  std::vector<std::size_t> by_rank(n);
  std::iota(by_rank.begin(), by_rank.end(), 0);
  std::sort(by_rank.begin(), by_rank.end(), [&](std::size_t a, std::size_t b) {
    return entities[a].rank < entities[b].rank;
  });
  std::vector<std::size_t> crank(n);
  for (std::size_t i = 0; i < n; ++i) crank[by_rank[i]] = i;

  // cost[a * (g + 1) + b]: expected refined rank mass of blocks [a, b) as one
  // range. Extending a segment by x adds p(x) * (1 + #members ranked above x)
  // and 1 to the rank of every member ranked below x.
  std::vector<double> cost((g + 1) * (g + 1), 0.0);
  RankIndex index(n);
  for (std::size_t a = 0; a < g; ++a) {
    index.clear();
    double cur = 0.0;
    for (std::size_t b = a + 1; b <= g; ++b) {
      for (std::size_t i = bl.offset[b - 1]; i < bl.offset[b]; ++i) {
        const std::size_t e = bl.order[i];
        const std::size_t r = crank[e];
        cur += p[e] * static_cast<double>(1 + index.count_below(r)) + index.mass_above(r);
        index.insert(r, p[e]);
      }
      cost[a * (g + 1) + b] = cur;
    }
  }
  const auto seg = [&](std::size_t a, std::size_t b) { return cost[a * (g + 1) + b]; };

  // best[j][a]: cheapest split of blocks [a, g) into exactly j ranges.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> best(ranges + 1, std::vector<double>(g + 1, kInf));
  for (std::size_t a = 0; a < g; ++a) best[1][a] = seg(a, g);
  for (std::size_t j = 2; j <= ranges; ++j) {
    for (std::size_t a = 0; a + j <= g; ++a) {
      double m = kInf;
      for (std::size_t b = a + 1; b + (j - 1) <= g; ++b) {
        m = std::min(m, seg(a, b) + best[j - 1][b]);
      }
      best[j][a] = m;
    }
  }

  // Smallest feasible boundary at each step gives the lexicographically
  // smallest optimal separator list.
  std::vector<double> seps;
  std::size_t a = 0;
  for (std::size_t j = ranges; j >= 2; --j) {
    for (std::size_t b = a + 1; b + (j - 1) <= g; ++b) {
      if (tie_or_better(seg(a, b) + best[j - 1][b], best[j][a])) {
        seps.push_back(bl.separator_before(b));
        a = b;
        break;
      }
    }
  }
  return SeparatorSet(std::move(seps), k);
}

SeparatorSet brute_force_partition(std::span<const ValuedEntity> entities,
                                   std::span<const double> p, std::size_t k,
                                   std::size_t cap) {
  check_inputs(entities, p, k);
  const auto mids = candidate_midpoints(entities);
  const std::size_t choose = std::min(k - 1, mids.size());
  if (choose == 0) return SeparatorSet({}, k);

  // C(mids, choose), stopping once it passes the cap.
  double combos = 1.0;
  for (std::size_t i = 0; i < choose; ++i) {
    combos = combos * static_cast<double>(mids.size() - i) / static_cast<double>(i + 1);
  }
  if (combos > static_cast<double>(cap)) {
    throw InvalidArgument("brute force would enumerate more than " +
                          std::to_string(cap) + " separator sets");
  }

  std::vector<std::size_t> idx(choose);
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<double> best_seps;
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> seps(choose);
  while (true) {
    for (std::size_t i = 0; i < choose; ++i) seps[i] = mids[idx[i]];
    const double v = expected_rr(entities, p, SeparatorSet(seps, k));
    if (best_seps.empty() || strictly_better(v, best)) {
      best = v;
      best_seps = seps;
    }
    // Next combination in lexicographic order.
    std::size_t i = choose;
    while (i > 0 && idx[i - 1] == mids.size() - choose + (i - 1)) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < choose; ++j) idx[j] = idx[j - 1] + 1;
  }
  return SeparatorSet(std::move(best_seps), k);
}

SeparatorSet greedy_partition(std::span<const ValuedEntity> entities,
                              std::span<const double> p, std::size_t k) {
  check_inputs(entities, p, k);
  const auto mids = candidate_midpoints(entities);
  SeparatorSet current({}, k);
  const std::size_t steps = std::min(k - 1, mids.size());
  for (std::size_t step = 0; step < steps; ++step) {
    double best = std::numeric_limits<double>::infinity();
    std::optional<SeparatorSet> pick;
    for (double m : mids) {
      if (std::binary_search(current.values().begin(), current.values().end(), m)) {
        continue;
      }
      SeparatorSet trial = current.with(m);
      const double v = expected_rr(entities, p, trial);
      if (!pick || strictly_better(v, best)) {
        best = v;
        pick = std::move(trial);
      }
    }
    current = SeparatorSet(pick->values(), k);
  }
  return current;
}

}  // namespace facetpart
