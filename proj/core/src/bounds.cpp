// SPDX-License-Identifier: Apache-2.0

#include "facetpart/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>

#include <nlohmann/json.hpp>

#include "facetpart/error.hpp"
#include "facetpart/metric.hpp"
#include "facetpart/optimize.hpp"
#include "facetpart/ratio_opt.hpp"
#include "combinatorics.hpp"
#include "random.hpp"

namespace facetpart {

namespace {

constexpr double kSlackTolerance = 1e-12;

// sum_j (r_j - r_{j-1}) * (g(r_j) - g(r_{j-1})) with g(0) = g(1) = 0 implied by
// the caller passing D = F_n - F, which vanishes at both ends.
template <typename D>
double signed_deviation(std::span<const double> r, D&& d) {
  double total = 0.0;
  double prev_r = 0.0;
  double prev_d = 0.0;
  for (double x : r) {
    const double v = d(x);
    total += (x - prev_r) * (v - prev_d);
    prev_r = x;
    prev_d = v;
  }
  return total + (1.0 - prev_r) * (0.0 - prev_d);
}

// Every increasing (k-1)-tuple of {1/res, ..., (res-1)/res}, stored flat.
struct GridTuples {
  std::size_t m = 0;
  std::vector<std::uint32_t> flat;

  std::size_t size() const { return m == 0 ? 0 : flat.size() / m; }
  std::span<const std::uint32_t> at(std::size_t t) const { return {flat.data() + t * m, m}; }
};

GridTuples all_tuples(std::size_t res, std::size_t k) {
  GridTuples g;
  g.m = k - 1;
  detail::for_each_tuple(res - 1, g.m, [&](std::span<const std::size_t> idx) {
    for (std::size_t i : idx) g.flat.push_back(static_cast<std::uint32_t>(i + 1));
  });
  return g;
}

void check_common(std::size_t n, std::size_t k, double epsilon, std::size_t trials,
                  std::size_t res) {
  if (n == 0) throw InvalidArgument("n must be positive");
  if (k < 2) throw InvalidArgument("k must be at least 2");
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  if (trials == 0) throw InvalidArgument("trials must be positive");
  if (res < k) throw InvalidArgument("grid resolution too coarse for k ranges");
}

std::vector<double> sample_sorted(const ValueCdf& cdf, std::size_t n, std::mt19937_64& rng) {
  std::vector<double> z(n);
  for (double& v : z) v = cdf.inverse(detail::uniform01(rng));
  std::sort(z.begin(), z.end());
  return z;
}

double empirical_at(const std::vector<double>& z_sorted, double r) {
  const auto it = std::lower_bound(z_sorted.begin(), z_sorted.end(), r);
  return static_cast<double>(it - z_sorted.begin()) / static_cast<double>(z_sorted.size());
}

double mc_slack(double bound, std::size_t trials) {
  const double p = std::min(bound, 1.0);
  return 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

struct TrialOutcome {
  double sup = 0.0;
  std::size_t violations = 0;
};

// Sup of |C_n - C| over `tuples`, checking the decomposition inequality at
// each one. With `refine`, a short Nelder-Mead search from the best grid
// point over the continuous simplex follows.
TrialOutcome trial_sup(const ValueCdf& cdf, const std::vector<double>& z,
                       std::size_t res, const GridTuples& tuples, bool refine) {
  std::vector<double> dg(res + 1, 0.0);
  for (std::size_t i = 1; i < res; ++i) {
    const double r = static_cast<double>(i) / static_cast<double>(res);
    dg[i] = empirical_at(z, r) - cdf(r);
  }

  TrialOutcome out;
  std::size_t best_t = 0;
  std::vector<double> r(tuples.m);
  for (std::size_t t = 0; t < tuples.size(); ++t) {
    const auto idx = tuples.at(t);
    double bound = 0.0;
    for (std::size_t j = 0; j < idx.size(); ++j) {
      r[j] = static_cast<double>(idx[j]) / static_cast<double>(res);
      bound += std::abs(dg[idx[j]]);
    }
    std::size_t j = 0;
    const double dev = std::abs(signed_deviation(r, [&](double) { return dg[idx[j++]]; }));
    if (dev > bound + kSlackTolerance) ++out.violations;
    if (dev > out.sup) {
      out.sup = dev;
      best_t = t;
    }
  }
  if (!refine || tuples.size() == 0) return out;

  const auto d = [&](double x) { return empirical_at(z, x) - cdf(x); };
  const auto start = tuples.at(best_t);
  std::vector<double> r0;
  for (std::uint32_t i : start) r0.push_back(static_cast<double>(i) / static_cast<double>(res));
  std::size_t violations = 0;
  const Objective neg = [&](std::span<const double> u) {
    const RatioVector rv = ratios_from_free(u);
    double bound = 0.0;
    for (double x : rv.values()) bound += std::abs(d(x));
    const double dev = std::abs(signed_deviation(rv.values(), d));
    if (dev > bound + kSlackTolerance) ++violations;
    return -dev;
  };
  MinimizeOptions mo;
  mo.max_evaluations = 200;
  mo.initial_step = 0.05;
  mo.tolerance = 1e-9;
  const MinimizeResult m = minimize_nelder_mead(neg, free_from_ratios(RatioVector(r0)), mo);
  out.sup = std::max(out.sup, -m.value);
  out.violations += violations;
  return out;
}

BoundReport run_trials(std::string name, const ValueCdf& cdf, std::size_t n, std::size_t k,
                       double epsilon, std::size_t trials, std::size_t res,
                       std::uint64_t seed, bool keep, double bound,
                       const GridTuples& tuples, bool refine) {
  BoundReport rep;
  rep.name = std::move(name);
  rep.n = n;
  rep.k = k;
  rep.epsilon = epsilon;
  rep.trials = trials;
  rep.theoretical_bound = bound;
  rep.mc_slack = mc_slack(bound, trials);

  std::size_t exceed = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    auto rng = detail::stream(seed, t);
    const auto z = sample_sorted(cdf, n, rng);
    const TrialOutcome o = trial_sup(cdf, z, res, tuples, refine);
    if (o.sup > epsilon) ++exceed;
    rep.max_deviation = std::max(rep.max_deviation, o.sup);
    rep.decomposition_violations += o.violations;
    if (keep) rep.trial_deviations.push_back(o.sup);
  }
  rep.observed_exceedance_rate = static_cast<double>(exceed) / static_cast<double>(trials);
  rep.pass = rep.observed_exceedance_rate <= std::min(bound, 1.0) + rep.mc_slack;
  return rep;
}

}  // namespace

double true_cn(const ValueCdf& cdf, const RatioVector& ratios) {
  double total = 0.0;
  double prev_r = 0.0;
  double prev_f = 0.0;
  for (double r : ratios.values()) {
    const double f = cdf(r);
    total += (r - prev_r) * (f - prev_f);
    prev_r = r;
    prev_f = f;
  }
  return total + (1.0 - prev_r) * (1.0 - prev_f);
}

double theorem1_bound(std::size_t n, std::size_t k, double epsilon) {
  if (k < 2) throw InvalidArgument("k must be at least 2");
  const double km1 = static_cast<double>(k - 1);
  return 2.0 * std::exp(-2.0 * static_cast<double>(n) * epsilon * epsilon / (km1 * km1));
}

double theorem3_bound(std::size_t n, double epsilon) {
  return 2.0 * std::exp(-2.0 * static_cast<double>(n) * epsilon * epsilon);
}

BoundReport check_theorem1(const ValueCdf& true_cdf, const Theorem1Options& o) {
  check_common(o.n, o.k, o.epsilon, o.trials, o.grid_resolution);
  const GridTuples tuples = all_tuples(o.grid_resolution, o.k);
  return run_trials("theorem1", true_cdf, o.n, o.k, o.epsilon, o.trials, o.grid_resolution,
                    o.seed, o.keep_trials, theorem1_bound(o.n, o.k, o.epsilon), tuples,
                    /*refine=*/true);
}

bool is_strongly_concave(const ValueCdf& cdf, std::size_t grid_resolution, double delta) {
  if (grid_resolution < 2) throw InvalidArgument("grid resolution must be at least 2");
  const double h = 1.0 / static_cast<double>(grid_resolution);
  for (std::size_t i = 1; i < grid_resolution; ++i) {
    const double x = static_cast<double>(i) * h;
    const double second = cdf(x - h) - 2.0 * cdf(x) + cdf(std::min(1.0, x + h));
    if (!(second < -delta)) return false;
  }
  return true;
}

Theorem2Report check_theorem2(const ValueCdf& cdf, std::size_t k, std::size_t res) {
  if (k < 2 || k > kMaxGridK) {
    throw InvalidArgument("width check supports 2 <= k <= " + std::to_string(kMaxGridK));
  }
  if (res < k) throw InvalidArgument("grid resolution too coarse for k ranges");
  std::vector<double> fg(res + 1);
  for (std::size_t i = 0; i <= res; ++i) {
    fg[i] = cdf(static_cast<double>(i) / static_cast<double>(res));
  }
  fg[0] = 0.0;
  fg[res] = 1.0;

  Theorem2Report rep;
  rep.value = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best;
  const double h = 1.0 / static_cast<double>(res);
  detail::for_each_tuple(res - 1, k - 1, [&](std::span<const std::size_t> idx) {
    double total = 0.0;
    std::size_t prev = 0;
    for (std::size_t i : idx) {
      total += static_cast<double>(i + 1 - prev) * h * (fg[i + 1] - fg[prev]);
      prev = i + 1;
    }
    total += static_cast<double>(res - prev) * h * (1.0 - fg[prev]);
    if (total < rep.value) {
      rep.value = total;
      best.assign(idx.begin(), idx.end());
    }
  });

  std::vector<double> r;
  for (std::size_t i : best) r.push_back(static_cast<double>(i + 1) * h);
  rep.optimum = RatioVector(std::move(r));
  rep.widths = rep.optimum.widths();
  rep.monotone = true;
  for (std::size_t j = 1; j < rep.widths.size(); ++j) {
    if (rep.widths[j - 1] > rep.widths[j] + kSlackTolerance) rep.monotone = false;
  }
  rep.applicable = is_strongly_concave(cdf, res);
  rep.pass = rep.applicable && rep.monotone;
  return rep;
}

BoundReport check_theorem3(const ValueCdf& true_cdf, const Theorem3Options& o) {
  check_common(o.n, o.k, o.epsilon, o.trials, o.grid_resolution);
  if (!(o.neighborhood_radius >= 0.0)) {
    throw InvalidArgument("neighborhood radius must be non-negative");
  }
  const double bound = theorem3_bound(o.n, o.epsilon);
  const auto inapplicable = [&] {
    BoundReport rep;
    rep.name = "theorem3";
    rep.n = o.n;
    rep.k = o.k;
    rep.epsilon = o.epsilon;
    rep.trials = o.trials;
    rep.theoretical_bound = bound;
    rep.mc_slack = mc_slack(bound, o.trials);
    rep.applicable = false;
    rep.pass = false;
    return rep;
  };
  if (!is_strongly_concave(true_cdf, o.grid_resolution)) return inapplicable();

  // Region near R*: grid points within the radius whose widths stay
  // non-decreasing.
  const Theorem2Report star = check_theorem2(true_cdf, o.k, o.grid_resolution);
  const auto& rs = star.optimum.values();
  const double res = static_cast<double>(o.grid_resolution);
  GridTuples region;
  region.m = o.k - 1;
  detail::for_each_tuple(o.grid_resolution - 1, region.m, [&](std::span<const std::size_t> idx) {
    double prev = 0.0;
    double prev_width = 0.0;
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const double r = static_cast<double>(idx[j] + 1) / res;
      if (std::abs(r - rs[j]) > o.neighborhood_radius + kSlackTolerance) return;
      if (r - prev < prev_width - kSlackTolerance) return;
      prev_width = r - prev;
      prev = r;
    }
    if (1.0 - prev < prev_width - kSlackTolerance) return;
    for (std::size_t i : idx) region.flat.push_back(static_cast<std::uint32_t>(i + 1));
  });
  if (region.size() == 0) return inapplicable();

  return run_trials("theorem3", true_cdf, o.n, o.k, o.epsilon, o.trials, o.grid_resolution,
                    o.seed, o.keep_trials, bound, region, /*refine=*/false);
}

bool property1_holds(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidArgument("vectors differ in length");
  double dot = 0.0;
  double abs_sum = 0.0;
  double max_y = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += x[i] * y[i];
    abs_sum += std::abs(x[i]);
    max_y = std::max(max_y, std::abs(y[i]));
  }
  const double rhs = abs_sum * max_y;
  return std::abs(dot) <= rhs + 1e-12 * std::max(1.0, rhs);
}

std::string bound_report_json(const BoundReport& r) {
  nlohmann::ordered_json j;
  j["name"] = r.name;
  j["n"] = r.n;
  j["k"] = r.k;
  j["epsilon"] = r.epsilon;
  j["trials"] = r.trials;
  j["observed_exceedance_rate"] = r.observed_exceedance_rate;
  j["theoretical_bound"] = r.theoretical_bound;
  j["mc_slack"] = r.mc_slack;
  j["applicable"] = r.applicable;
  j["pass"] = r.pass;
  j["max_deviation"] = r.max_deviation;
  j["decomposition_violations"] = r.decomposition_violations;
  j["sup_is_lower_bound"] = true;
  return j.dump(2);
}

std::string theorem2_report_json(const Theorem2Report& r) {
  nlohmann::ordered_json j;
  j["name"] = "theorem2";
  j["applicable"] = r.applicable;
  j["monotone"] = r.monotone;
  j["pass"] = r.pass;
  j["optimum"] = r.optimum.values();
  j["widths"] = r.widths;
  j["value"] = r.value;
  return j.dump(2);
}

void write_trial_csv(std::ostream& out, const BoundReport& report) {
  out << "trial,sup_deviation\n";
  for (std::size_t t = 0; t < report.trial_deviations.size(); ++t) {
    out << t << ',' << format_double(report.trial_deviations[t]) << '\n';
  }
}

}  // namespace facetpart
