// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "facetpart/error.hpp"
#include "facetpart/ratio_opt.hpp"
#include "helpers.hpp"

namespace facetpart {
namespace {

using testing::make_impression;

using Values = std::vector<double>;

SearchLog synthetic(ValueCdf cdf, std::size_t n, std::size_t m, std::uint64_t seed) {
  SynthConfig c;
  c.n_queries = n;
  c.entities_per_query = {m, m};
  c.value_cdf = std::move(cdf);
  c.seed = seed;
  return generate_synthetic(c);
}

EmpiricalCdf lattice_cdf(std::size_t n) {
  Values z;
  for (std::size_t i = 1; i <= n; ++i) z.push_back(static_cast<double>(i) / static_cast<double>(n));
  const std::vector<std::size_t> sizes{n};
  return EmpiricalCdf(z, sizes);
}

RatioVector random_ratios(std::mt19937_64& rng, std::size_t k) {
  std::uniform_real_distribution<double> u(0.001, 0.999);
  for (;;) {
    Values r(k - 1);
    for (double& x : r) x = u(rng);
    std::sort(r.begin(), r.end());
    if (std::adjacent_find(r.begin(), r.end()) == r.end()) return RatioVector(r);
  }
}

TEST(ComputeZ, Examples) {
  EXPECT_DOUBLE_EQ(compute_z(make_impression({100.0, 300.0, 200.0, 400.0}, 1)), 0.75);
  EXPECT_DOUBLE_EQ(compute_z(make_impression({5.0, 1.0, 9.0, 7.0, 3.0}, 1)), 0.2);
  EXPECT_DOUBLE_EQ(compute_z(make_impression({4.0, 4.0, 4.0}, 0)), 1.0);
  EXPECT_DOUBLE_EQ(compute_z(make_impression({std::nullopt, 2.0, 1.0}, 1)), 1.0);
}

TEST(CacheCdf, SingleImpression) {
  const EmpiricalCdf cdf = cache_cdf(SearchLog({make_impression({100.0, 300.0, 200.0, 400.0}, 1)}));
  EXPECT_EQ(cdf.x_sorted(), (Values{0.25, 0.5, 0.75}));
  EXPECT_EQ(cdf.y(), (Values{0, 0, 0}));
  EXPECT_EQ(cdf.n(), 1u);
  EXPECT_EQ(cdf.n0(), 3u);
}

TEST(CacheCdf, TwoImpressions) {
  const EmpiricalCdf cdf = cache_cdf(
      SearchLog({make_impression({1.0, 2.0}, 0), make_impression({1.0, 2.0}, 1)}));
  EXPECT_EQ(cdf.x_sorted(), (Values{0.5}));
  EXPECT_EQ(cdf.y(), (Values{0}));
  EXPECT_DOUBLE_EQ(cdf.y_below_one(), 0.5);
}

TEST(CacheCdf, UniformZTracksDiagonal) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Values z(10000);
  for (double& x : z) x = u(rng);
  const std::vector<std::size_t> sizes{100};
  const EmpiricalCdf cdf(z, sizes);
  double worst = 0.0;
  for (std::size_t i = 0; i < cdf.n0(); ++i) {
    worst = std::max(worst, std::abs(cdf.y()[i] - cdf.x_sorted()[i]));
  }
  EXPECT_LE(worst, 0.05);
}

TEST(CacheCdf, MixedSizesMergeCandidates) {
  const EmpiricalCdf cdf = cache_cdf(SearchLog(
      {make_impression({1.0, 2.0}, 0), make_impression({1.0, 2.0, 3.0, 4.0}, 3)}));
  EXPECT_EQ(cdf.x_sorted(), (Values{0.25, 0.5, 0.75}));
  EXPECT_THROW(cache_cdf(SearchLog{}), InvalidArgument);
}

TEST(CdfLookup, Examples) {
  const EmpiricalCdf cdf = cache_cdf(SearchLog({make_impression({100.0, 300.0, 200.0, 400.0}, 1)}));
  EXPECT_EQ(cdf_lookup(cdf, 0.3), 0.0);
  EXPECT_EQ(cdf_lookup(cdf, 0.1), 0.0);
  EXPECT_EQ(cdf_lookup(cdf, 0.75), 0.0);
  EXPECT_EQ(cdf_lookup(cdf, 0.76), 1.0);
  EXPECT_EQ(cdf_lookup(cdf, 0.0), 0.0);
  EXPECT_EQ(cdf_lookup(cdf, 1.0), 1.0);
}

TEST(CdfLookup, ExactHitReturnsCachedValue) {
  const EmpiricalCdf cdf = cache_cdf(synthetic(ValueCdf::concave(), 500, 10, 3));
  for (std::size_t i = 0; i < cdf.n0(); ++i) EXPECT_EQ(cdf_lookup(cdf, cdf.x_sorted()[i]), cdf.y()[i]);
}

TEST(CdfLookup, AgreesWithRecount) {
  SynthConfig c;
  c.n_queries = 800;
  c.entities_per_query = {2, 40};
  c.value_cdf = ValueCdf::concave();
  c.missing_value_rate = 0.1;
  c.seed = 12;
  const SearchLog log = generate_synthetic(c);
  const EmpiricalCdf cdf = cache_cdf(log);
  Values z;
  for (const auto& imp : log.impressions()) z.push_back(compute_z(imp));
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 1000; ++trial) {
    const RatioVector r = random_ratios(rng, 2 + rng() % 4);
    EXPECT_EQ(surrogate_cn(cdf, r), surrogate_cn_recount(z, r));
  }
  // Cached ratios and the midpoints between them are the edge cases.
  for (std::size_t i = 0; i + 1 < cdf.n0(); ++i) {
    for (double r : {cdf.x_sorted()[i], std::midpoint(cdf.x_sorted()[i], cdf.x_sorted()[i + 1])}) {
      const RatioVector R({r});
      EXPECT_EQ(surrogate_cn(cdf, R), surrogate_cn_recount(z, R)) << r;
    }
  }
}

TEST(SurrogateCn, Examples) {
  const EmpiricalCdf cdf = lattice_cdf(1000);
  EXPECT_EQ(surrogate_cn(cdf, RatioVector{}), 1.0);
  for (std::size_t k = 2; k <= 5; ++k) {
    EXPECT_NEAR(surrogate_cn(cdf, RatioVector::quantile(k)), 1.0 / static_cast<double>(k), 2e-3);
  }
}

TEST(SurrogateCn, QuadraticIdentityForTwoRanges) {
  const std::size_t n = 10000;
  const EmpiricalCdf cdf = lattice_cdf(n);
  for (int i = 1; i <= 99; ++i) {
    const double r = i / 100.0;
    EXPECT_LE(std::abs(surrogate_cn(cdf, RatioVector({r})) - (2 * r * r - 2 * r + 1)),
              2.0 / static_cast<double>(n));
  }
}

TEST(SurrogateCn, EqualsMeanContainingRangeWidth) {
  const SearchLog log = synthetic(ValueCdf::power(3.0), 600, 25, 4);
  const EmpiricalCdf cdf = cache_cdf(log);
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const RatioVector r = random_ratios(rng, 2 + rng() % 4);
    double total = 0.0;
    for (double z : cdf.z_sorted()) total += range_width_at(r, z);
    EXPECT_NEAR(total / static_cast<double>(cdf.n()), surrogate_cn(cdf, r), 1e-12);
  }
}

TEST(SurrogateCn, ApproachesNormalizedRangeSizeForLargeLists) {
  const SearchLog log = synthetic(ValueCdf::concave(), 2000, 400, 9);
  const EmpiricalCdf cdf = cache_cdf(log);
  const RatioVector r({0.3, 0.6});
  double total = 0.0;
  for (const auto& imp : log.impressions()) {
    const auto es = imp.valued();
    const SeparatorSet s = ratio_to_separators(es, r);
    const std::size_t range = s.range_of(*imp.clicked().value);
    std::size_t size = 0;
    for (const auto& e : es) size += s.range_of(e.value) == range ? 1 : 0;
    total += static_cast<double>(size) / static_cast<double>(es.size());
  }
  EXPECT_NEAR(total / static_cast<double>(log.size()), surrogate_cn(cdf, r), 0.01);
}

TEST(SurrogateCn, CachedLookupsUseLogarithmicComparisons) {
  const EmpiricalCdf cdf = cache_cdf(synthetic(ValueCdf::concave(), 3000, 60, 5));
  const double bound = std::ceil(std::log2(static_cast<double>(cdf.n0())) + 1.0);
  std::mt19937_64 rng(1);
  for (std::size_t k : {2u, 3u, 5u}) {
    for (int i = 0; i < 200; ++i) {
      ProbeCounter counter;
      surrogate_cn(cdf, random_ratios(rng, k), &counter);
      EXPECT_LE(static_cast<double>(counter.comparisons), static_cast<double>(k) * bound);
    }
  }
  ProbeCounter recount;
  surrogate_cn_recount(cdf.z_sorted(), RatioVector({0.5}), &recount);
  EXPECT_GE(recount.comparisons, cdf.n());
}

TEST(RangeWidthAt, HalfOpenRanges) {
  const RatioVector r({0.25, 0.5});
  EXPECT_DOUBLE_EQ(range_width_at(r, 0.1), 0.25);
  EXPECT_DOUBLE_EQ(range_width_at(r, 0.25), 0.25);
  EXPECT_DOUBLE_EQ(range_width_at(r, 0.5), 0.5);
  EXPECT_DOUBLE_EQ(range_width_at(r, 1.0), 0.5);
}

TEST(FreeParameters, RoundTripAndQuantileOrigin) {
  EXPECT_EQ(ratios_from_free(Values{0.0, 0.0, 0.0}).values().size(), 3u);
  const RatioVector q = ratios_from_free(Values{0.0, 0.0, 0.0});
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(q[j], (j + 1) / 4.0, 1e-15);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const RatioVector r = random_ratios(rng, 2 + rng() % 5);
    const RatioVector back = ratios_from_free(free_from_ratios(r));
    for (std::size_t j = 0; j < r.size(); ++j) EXPECT_NEAR(back[j], r[j], 1e-12);
  }
}

TEST(FreeParameters, ExtremeInputsStayValid) {
  const RatioVector r = ratios_from_free(Values{800.0, -800.0});
  EXPECT_EQ(r.size(), 2u);
  EXPECT_GT(r[0], 0.0);
  EXPECT_LT(r[1], 1.0);
}

TEST(OptimizeRatio, LinearDataSplitsAtHalf) {
  const EmpiricalCdf cdf = cache_cdf(synthetic(ValueCdf::linear(), 4000, 50, 1));
  const RatioFit fit = optimize_ratio(cdf, 2);
  EXPECT_NEAR(fit.ratios[0], 0.5, 0.02);
  EXPECT_GT(fit.evaluations, 0u);
}

TEST(OptimizeRatio, ReachesGridOptimumOnConcaveData) {
  const EmpiricalCdf cdf = cache_cdf(synthetic(ValueCdf::concave(), 2000, 50, 2));
  const GridResult grid = grid_search_surrogate(cdf, 3);
  for (OptimizerMethod m : {OptimizerMethod::kPowell, OptimizerMethod::kNelderMead}) {
    RatioOptimizerOptions o;
    o.method = m;
    o.restarts = 8;
    const RatioFit fit = optimize_ratio(cdf, 3, o);
    EXPECT_LE(fit.cn, grid.value + 1e-6);
    EXPECT_EQ(fit.cn, surrogate_cn(cdf, fit.ratios));
  }
}

TEST(OptimizeRatio, DeterministicForFixedSeed) {
  const EmpiricalCdf cdf = cache_cdf(synthetic(ValueCdf::concave(), 1000, 30, 7));
  RatioOptimizerOptions o;
  o.restarts = 1;
  o.seed = 42;
  const RatioFit a = optimize_ratio(cdf, 4, o);
  const RatioFit b = optimize_ratio(cdf, 4, o);
  EXPECT_EQ(a.ratios, b.ratios);
  EXPECT_EQ(a.evaluations, b.evaluations);
  o.restarts = 4;
  EXPECT_EQ(optimize_ratio(cdf, 4, o).ratios, optimize_ratio(cdf, 4, o).ratios);
}

TEST(OptimizeRatio, NeverWorseThanQuantile) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    const EmpiricalCdf cdf = cache_cdf(synthetic(ValueCdf::power(0.5 + trial * 0.3), 500, 20, trial));
    const std::size_t k = 2 + trial % 4;
    EXPECT_LE(optimize_ratio(cdf, k).cn, surrogate_cn(cdf, RatioVector::quantile(k)));
  }
}

TEST(OptimizeRatio, Errors) {
  const EmpiricalCdf cdf = lattice_cdf(10);
  EXPECT_THROW(optimize_ratio(cdf, 1), InvalidArgument);
  RatioOptimizerOptions o;
  o.restarts = 0;
  EXPECT_THROW(optimize_ratio(cdf, 2, o), InvalidArgument);
}

TEST(GridSearch, EvaluatesEveryPoint) {
  const EmpiricalCdf cdf = cache_cdf(SearchLog({make_impression({100.0, 300.0, 200.0, 400.0}, 1),
                                                make_impression({1.0, 2.0, 3.0, 4.0}, 0)}));
  const GridResult g = grid_search_surrogate(cdf, 2);
  EXPECT_EQ(g.evaluated, 3u);
  double best = 2.0;
  for (double x : cdf.x_sorted()) best = std::min(best, surrogate_cn(cdf, RatioVector({x})));
  EXPECT_EQ(g.value, best);
  EXPECT_EQ(grid_search_surrogate(cdf, 4).evaluated, 1u);
}

TEST(GridSearch, RefusesLargeK) {
  const EmpiricalCdf cdf = lattice_cdf(20);
  EXPECT_THROW(grid_search_surrogate(cdf, 5), InvalidArgument);
  EXPECT_THROW(grid_search_surrogate(cdf, 4, 10), InvalidArgument);
}

TEST(GridSearchArr, MatchesDirectEvaluation) {
  const SearchLog log = synthetic(ValueCdf::concave(), 300, 12, 5);
  const Values cands = cache_cdf(log).x_sorted();
  const GridResult g = grid_search_arr(log, cands, 3);
  const double direct = arr_evaluate(log, [&](const Impression& imp) {
                          return ratio_to_separators(imp.valued(), g.ratios);
                        }).arr;
  EXPECT_NEAR(g.value, direct, 1e-12);
  EXPECT_LE(g.value, direct);
}

TEST(RatioArrEvaluator, AgreesWithSeparatorPath) {
  SynthConfig c;
  c.n_queries = 400;
  c.entities_per_query = {1, 30};
  c.value_cdf = ValueCdf::concave();
  c.missing_value_rate = 0.15;
  c.query_pool = 20;
  c.seed = 19;
  const SearchLog log = generate_synthetic(c);
  const RatioArrEvaluator eval(log);
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    const RatioVector r = random_ratios(rng, 2 + rng() % 5);
    const EvalReport rep = arr_evaluate(log, [&](const Impression& imp) {
      return ratio_to_separators(imp.valued(), r);
    });
    const auto ranks = eval.refined_ranks(r);
    for (std::size_t i = 0; i < log.size(); ++i) ASSERT_EQ(ranks[i], rep.per_impression[i].rr);
    EXPECT_NEAR(eval.arr(r), rep.arr, 1e-12);
  }
}

TEST(Curves, CsvShape) {
  const EmpiricalCdf cdf = lattice_cdf(4);
  std::stringstream a;
  write_cdf_curve(a, cdf, Values{0.5});
  EXPECT_EQ(a.str(), "r,F_n\n0.5,0.25\n");
  std::stringstream b;
  write_cn_curve(b, cdf, Values{0.0, 0.5, 1.0});
  EXPECT_EQ(b.str(), "r1,C_n\n0.5,0.5\n");
}

}  // namespace
}  // namespace facetpart
