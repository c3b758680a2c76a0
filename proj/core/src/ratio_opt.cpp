// SPDX-License-Identifier: Apache-2.0

#include "facetpart/ratio_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include "facetpart/error.hpp"
#include "facetpart/metric.hpp"
#include "combinatorics.hpp"
#include "random.hpp"

namespace facetpart {

double compute_z(const Impression& impression) {
  const Entity& clicked = impression.clicked();
  if (!clicked.value) {
    throw ValidationError("query '" + impression.query_id() +
                          "': clicked entity has no value");
  }
  std::size_t at_or_below = 0;
  for (const Entity& e : impression.entities()) {
    if (e.value && *e.value <= *clicked.value) ++at_or_below;
  }
  return static_cast<double>(at_or_below) /
         static_cast<double>(impression.valued_count());
}

EmpiricalCdf::EmpiricalCdf(std::vector<double> z, std::span<const std::size_t> sizes)
    : z_sorted_(std::move(z)) {
  if (z_sorted_.empty()) throw InvalidArgument("empirical CDF needs at least one z");
  std::sort(z_sorted_.begin(), z_sorted_.end());

  std::vector<std::size_t> distinct(sizes.begin(), sizes.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  for (std::size_t m : distinct) {
    for (std::size_t j = 1; j < m; ++j) {
      x_sorted_.push_back(static_cast<double>(j) / static_cast<double>(m));
    }
  }
  std::sort(x_sorted_.begin(), x_sorted_.end());
  x_sorted_.erase(std::unique(x_sorted_.begin(), x_sorted_.end()), x_sorted_.end());

  const double n = static_cast<double>(z_sorted_.size());
  y_.reserve(x_sorted_.size());
  auto it = z_sorted_.begin();
  for (double x : x_sorted_) {
    it = std::lower_bound(it, z_sorted_.end(), x);
    y_.push_back(static_cast<double>(it - z_sorted_.begin()) / n);
  }
  const auto below_one = std::lower_bound(z_sorted_.begin(), z_sorted_.end(), 1.0);
  y_below_one_ = static_cast<double>(below_one - z_sorted_.begin()) / n;
}

EmpiricalCdf cache_cdf(const SearchLog& train) {
  if (train.empty()) throw InvalidArgument("empty training log");
  std::vector<double> z;
  std::vector<std::size_t> sizes;
  z.reserve(train.size());
  sizes.reserve(train.size());
  for (const Impression& imp : train.impressions()) {
    z.push_back(compute_z(imp));
    sizes.push_back(imp.valued_count());
  }
  return EmpiricalCdf(std::move(z), sizes);
}

double cdf_lookup(const EmpiricalCdf& cdf, double r, ProbeCounter* counter) {
  if (counter) ++counter->lookups;
  if (r <= 0.0) return 0.0;
  if (r >= 1.0) return 1.0;
  // Smallest cached x >= r; no z lies strictly between r and it.
  const auto& x = cdf.x_sorted();
  std::size_t lo = 0;
  std::size_t hi = x.size();
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (counter) ++counter->comparisons;
    if (x[mid] < r) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  return lo == x.size() ? cdf.y_below_one() : cdf.y()[lo];
}

namespace {

template <typename F>
double cn_with(const RatioVector& ratios, F&& cdf_at) {
  double total = 0.0;
  double prev_r = 0.0;
  double prev_f = 0.0;
  for (double r : ratios.values()) {
    const double f = cdf_at(r);
    total += (r - prev_r) * (f - prev_f);
    prev_r = r;
    prev_f = f;
  }
  return total + (1.0 - prev_r) * (1.0 - prev_f);
}

}  // namespace

double surrogate_cn(const EmpiricalCdf& cdf, const RatioVector& ratios,
                    ProbeCounter* counter) {
  return cn_with(ratios, [&](double r) { return cdf_lookup(cdf, r, counter); });
}

double surrogate_cn_recount(std::span<const double> z, const RatioVector& ratios,
                            ProbeCounter* counter) {
  if (z.empty()) throw InvalidArgument("empirical CDF needs at least one z");
  const double n = static_cast<double>(z.size());
  return cn_with(ratios, [&](double r) {
    if (counter) {
      ++counter->lookups;
      counter->comparisons += z.size();
    }
    std::size_t below = 0;
    for (double v : z) below += v < r ? 1 : 0;
    return static_cast<double>(below) / n;
  });
}

double range_width_at(const RatioVector& ratios, double z) {
  const auto& r = ratios.values();
  const auto j = static_cast<std::size_t>(std::upper_bound(r.begin(), r.end(), z) - r.begin());
  const double lo = j == 0 ? 0.0 : r[j - 1];
  const double hi = j == r.size() ? 1.0 : r[j];
  return hi - lo;
}

namespace {

// Smallest width the reparameterization produces; keeps ratios strictly
// increasing and inside (0, 1) for any finite u.
constexpr double kMinWidth = 1e-12;

using detail::uniform01;

}  // namespace

RatioVector ratios_from_free(std::span<const double> u) {
  double top = 0.0;
  for (double v : u) top = std::max(top, v);
  std::vector<double> w(u.size() + 1);
  double sum = 0.0;
  for (std::size_t i = 0; i <= u.size(); ++i) {
    const double v = i < u.size() ? u[i] : 0.0;
    w[i] = std::isfinite(v) ? std::exp(v - top) : (v > 0 ? 1.0 : 0.0);
    sum += w[i];
  }
  double clamped = 0.0;
  for (double& x : w) {
    x = std::max(x / sum, kMinWidth);
    clamped += x;
  }
  for (double& x : w) x /= clamped;
  return RatioVector::from_widths(w);
}

std::vector<double> free_from_ratios(const RatioVector& ratios) {
  const auto w = ratios.widths();
  std::vector<double> u(w.size() - 1);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::log(w[i] / w.back());
  return u;
}

RatioFit optimize_ratio(const EmpiricalCdf& cdf, std::size_t k,
                        const RatioOptimizerOptions& options) {
  if (k < 2) throw InvalidArgument("ratio optimization needs k >= 2");
  if (options.restarts == 0) throw InvalidArgument("restarts must be at least 1");

  const Objective objective = [&](std::span<const double> u) {
    return surrogate_cn(cdf, ratios_from_free(u));
  };
  MinimizeOptions mo;
  mo.tolerance = options.tolerance;
  mo.max_evaluations = options.max_evaluations;

  std::mt19937_64 rng(options.seed);
  RatioFit fit{RatioVector::quantile(k), std::numeric_limits<double>::infinity(), 0};
  for (std::size_t restart = 0; restart < options.restarts; ++restart) {
    std::vector<double> u0(k - 1, 0.0);
    if (restart > 0) {
      // Uniform point on the simplex: normalized unit exponentials.
      std::vector<double> e(k);
      for (double& x : e) x = -std::log1p(-uniform01(rng));
      for (std::size_t i = 0; i + 1 < k; ++i) {
        u0[i] = std::log(std::max(e[i], kMinWidth) / std::max(e[k - 1], kMinWidth));
      }
    }
    const MinimizeResult r = options.method == OptimizerMethod::kPowell
                                 ? minimize_powell(objective, u0, mo)
                                 : minimize_nelder_mead(objective, u0, mo);
    fit.evaluations += r.evaluations;
    if (r.value < fit.cn) {
      fit.cn = r.value;
      fit.ratios = ratios_from_free(r.x);
    }
  }
  return fit;
}

namespace {

using detail::binomial;
using detail::for_each_tuple;

void check_grid(std::size_t k, std::size_t points, std::size_t cap) {
  if (k < 2 || k > kMaxGridK) {
    throw InvalidArgument("grid search supports 2 <= k <= " + std::to_string(kMaxGridK));
  }
  if (points < k - 1) throw InvalidArgument("too few grid points for k ranges");
  if (binomial(points, k - 1) > static_cast<double>(cap)) {
    throw InvalidArgument("grid search would evaluate more than " + std::to_string(cap) +
                          " ratio vectors");
  }
}

}  // namespace

GridResult grid_search_surrogate(const EmpiricalCdf& cdf, std::size_t k, std::size_t cap) {
  const auto& x = cdf.x_sorted();
  const auto& y = cdf.y();
  check_grid(k, x.size(), cap);
  GridResult best{RatioVector::quantile(k), std::numeric_limits<double>::infinity(), 0};
  std::vector<std::size_t> best_idx;
  for_each_tuple(x.size(), k - 1, [&](std::span<const std::size_t> idx) {
    ++best.evaluated;
    double total = 0.0;
    double prev_r = 0.0;
    double prev_f = 0.0;
    for (std::size_t i : idx) {
      total += (x[i] - prev_r) * (y[i] - prev_f);
      prev_r = x[i];
      prev_f = y[i];
    }
    total += (1.0 - prev_r) * (1.0 - prev_f);
    if (total < best.value) {
      best.value = total;
      best_idx.assign(idx.begin(), idx.end());
    }
  });
  std::vector<double> r;
  for (std::size_t i : best_idx) r.push_back(x[i]);
  best.ratios = RatioVector(std::move(r));
  return best;
}

GridResult grid_search_arr(const SearchLog& log, std::span<const double> candidates,
                           std::size_t k, std::size_t cap) {
  std::vector<double> c(candidates.begin(), candidates.end());
  std::sort(c.begin(), c.end());
  c.erase(std::unique(c.begin(), c.end()), c.end());
  for (double v : c) {
    if (!(v > 0.0 && v < 1.0)) throw InvalidArgument("grid candidates must lie in (0, 1)");
  }
  check_grid(k, c.size(), cap);
  const RatioArrEvaluator eval(log);
  GridResult best{RatioVector::quantile(k), std::numeric_limits<double>::infinity(), 0};
  std::vector<double> r(k - 1);
  for_each_tuple(c.size(), k - 1, [&](std::span<const std::size_t> idx) {
    ++best.evaluated;
    for (std::size_t i = 0; i < idx.size(); ++i) r[i] = c[idx[i]];
    RatioVector rv(r);
    const double v = eval.arr(rv);
    if (v < best.value) {
      best.value = v;
      best.ratios = std::move(rv);
    }
  });
  return best;
}

namespace {

constexpr std::size_t kDropped = std::numeric_limits<std::size_t>::max();

}  // namespace

RatioArrEvaluator::RatioArrEvaluator(const SearchLog& log) {
  if (log.empty()) throw InvalidArgument("empty log");
  entries_.reserve(log.size());
  for (const Impression& imp : log.impressions()) {
    const auto valued = imp.valued();
    const Entity& clicked = imp.clicked();
    if (!clicked.value) {
      throw ValidationError("query '" + imp.query_id() + "': clicked entity has no value");
    }
    std::vector<ValuedEntity> sorted = valued;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const ValuedEntity& a, const ValuedEntity& b) { return a.value < b.value; });
    Entry e;
    e.n = sorted.size();
    const double cv = *clicked.value;
    e.clicked_boundary_lo = static_cast<std::size_t>(
        std::lower_bound(sorted.begin(), sorted.end(), cv,
                         [](const ValuedEntity& a, double v) { return a.value < v; }) -
        sorted.begin());

    // Mirrors the sort path of ratio_to_separators.
    e.snap.assign(e.n + 1, kDropped);
    for (std::size_t c = 1; c < e.n; ++c) {
      std::size_t b = c;
      if (sorted[c - 1].value == sorted[c].value) {
        std::size_t lo = c - 1;
        while (lo > 0 && sorted[lo - 1].value == sorted[c].value) --lo;
        std::size_t hi = c + 1;
        while (hi < e.n && sorted[hi].value == sorted[c].value) ++hi;
        b = (hi - c <= c - lo) ? hi : lo;
      }
      if (b > 0 && b < e.n) e.snap[c] = b;
    }

    e.prefix.assign(e.n + 1, 0);
    for (std::size_t p = 0; p < e.n; ++p) {
      e.prefix[p + 1] = e.prefix[p] + (sorted[p].rank <= clicked.rank ? 1 : 0);
    }
    entries_.push_back(std::move(e));
  }
}

std::size_t RatioArrEvaluator::refined_rank(const Entry& e, const RatioVector& ratios) const {
  std::size_t lo = 0;
  std::size_t hi = e.n;
  std::size_t last = 0;
  for (double r : ratios.values()) {
    const std::size_t b = e.snap[raw_cut_index(r, e.n)];
    if (b == kDropped || b <= last) continue;
    last = b;
    if (b <= e.clicked_boundary_lo) {
      lo = b;
    } else {
      hi = b;
      break;
    }
  }
  return e.prefix[hi] - e.prefix[lo];
}

double RatioArrEvaluator::arr(const RatioVector& ratios) const {
  double sum = 0.0;
  for (const Entry& e : entries_) sum += static_cast<double>(refined_rank(e, ratios));
  return sum / static_cast<double>(entries_.size());
}

std::vector<std::size_t> RatioArrEvaluator::refined_ranks(const RatioVector& ratios) const {
  std::vector<std::size_t> out;
  out.reserve(entries_.size());
  for (const Entry& e : entries_) out.push_back(refined_rank(e, ratios));
  return out;
}

void write_cdf_curve(std::ostream& out, const EmpiricalCdf& cdf,
                     std::span<const double> grid) {
  out << "r,F_n\n";
  for (double r : grid) out << format_double(r) << ',' << format_double(cdf_lookup(cdf, r)) << '\n';
}

void write_cn_curve(std::ostream& out, const EmpiricalCdf& cdf,
                    std::span<const double> grid) {
  out << "r1,C_n\n";
  for (double r : grid) {
    if (!(r > 0.0 && r < 1.0)) continue;
    out << format_double(r) << ',' << format_double(surrogate_cn(cdf, RatioVector({r}))) << '\n';
  }
}

}  // namespace facetpart
