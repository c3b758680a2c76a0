// SPDX-License-Identifier: Apache-2.0

#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "facetpart/click_model.hpp"
#include "facetpart/dp.hpp"
#include "facetpart/error.hpp"
#include "helpers.hpp"

namespace facetpart {
namespace {

using testing::make_impression;
using testing::ranked;

using Values = std::vector<double>;

const auto kThree = ranked({100, 200, 300});
const Values kThreeP{0.4, 0.3, 0.3};
const auto kFour = ranked({400, 100, 200, 300});
const Values kFourP{0.2, 0.2, 0.3, 0.3};

TEST(ExpectedRr, ThreeEntityExample) {
  EXPECT_NEAR(expected_rr(kThree, kThreeP, SeparatorSet({150})), 1.3, 1e-12);
  EXPECT_NEAR(expected_rr(kThree, kThreeP, SeparatorSet({250})), 1.3, 1e-12);
}

TEST(ExpectedRr, SingletonRangesGiveOne) {
  EXPECT_DOUBLE_EQ(expected_rr(kFour, kFourP, SeparatorSet({150, 250, 350})), 1.0);
}

TEST(ExpectedRr, NoSeparatorsGivesExpectedRank) {
  EXPECT_NEAR(expected_rr(kFour, kFourP, SeparatorSet{}), 0.2 + 0.4 + 0.9 + 1.2, 1e-12);
}

TEST(ExpectedRr, RejectsMisalignedProbabilities) {
  EXPECT_THROW(expected_rr(kThree, Values{0.5, 0.5}, SeparatorSet{}), InvalidArgument);
}

// Every 3-range partition of this instance puts one value-adjacent pair in a
// shared range, and in each pair the lower-ranked entity has p = 0.3, so all
// three candidates cost exactly 1.3.
TEST(DpPartition, FourEntityInstanceOptimumIsOnePointThree) {
  for (const Values& s : {Values{150, 250}, Values{150, 350}, Values{250, 350}}) {
    EXPECT_NEAR(expected_rr(kFour, kFourP, SeparatorSet(s)), 1.3, 1e-12);
  }
  const SeparatorSet dp = dp_partition(kFour, kFourP, 3);
  EXPECT_NEAR(expected_rr(kFour, kFourP, dp), 1.3, 1e-12);
  EXPECT_EQ(dp.values(), (Values{150, 250}));
  EXPECT_EQ(dp, brute_force_partition(kFour, kFourP, 3));
  EXPECT_NEAR(expected_rr(kFour, kFourP, greedy_partition(kFour, kFourP, 3)), 1.3, 1e-12);
}

TEST(DpPartition, TieGoesToSmallestSeparator) {
  EXPECT_EQ(dp_partition(kThree, kThreeP, 2).values(), (Values{150}));
  EXPECT_EQ(brute_force_partition(kThree, kThreeP, 2).values(), (Values{150}));
}

TEST(DpPartition, KOneAndInfeasibleK) {
  EXPECT_TRUE(dp_partition(kThree, kThreeP, 1).empty());
  EXPECT_TRUE(brute_force_partition(kThree, kThreeP, 1).empty());
  const auto two = ranked({5, 7});
  const Values p{0.5, 0.5};
  EXPECT_EQ(brute_force_partition(two, p, 2).values(), (Values{6}));
  const SeparatorSet s = dp_partition(two, p, 4);
  EXPECT_EQ(s.values(), (Values{6}));
  EXPECT_TRUE(s.reduced());
}

TEST(DpPartition, MatchesBruteForceOnRandomInstances) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 400; ++trial) {
    const auto es = testing::random_entities(rng, 1 + rng() % 12, 10);
    const Values p = trial % 2 == 0 ? Values(es.size(), 1.0 / static_cast<double>(es.size()))
                                    : testing::random_probabilities(rng, es.size());
    const std::size_t k = 1 + rng() % 4;
    const SeparatorSet dp = dp_partition(es, p, k);
    const SeparatorSet bf = brute_force_partition(es, p, k);
    EXPECT_NEAR(expected_rr(es, p, dp), expected_rr(es, p, bf), 1e-12);
    EXPECT_EQ(dp, bf) << "tie-break disagreement at trial " << trial;
  }
}

TEST(DpPartition, OptimumIsNonIncreasingInK) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const auto es = testing::random_entities(rng, 2 + rng() % 20);
    const Values p = testing::random_probabilities(rng, es.size());
    double prev = expected_rr(es, p, SeparatorSet{});
    for (std::size_t k = 2; k <= 6; ++k) {
      const double cur = expected_rr(es, p, dp_partition(es, p, k));
      EXPECT_LE(cur, prev + 1e-12);
      prev = cur;
    }
  }
}

// Per-range decomposition: each range contributes p(e) times e's rank among
// the range members, independently of the other ranges.
TEST(ExpectedRr, DecomposesOverRanges) {
  std::mt19937_64 rng(30);
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  for (int trial = 0; trial < 300; ++trial) {
    const auto es = testing::random_entities(rng, 1 + rng() % 15);
    const Values p = testing::random_probabilities(rng, es.size());
    Values cuts;
    for (std::size_t i = 0, m = rng() % 4; i < m; ++i) cuts.push_back(u(rng));
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    const SeparatorSet s(cuts);
    double total = 0.0;
    for (std::size_t range = 0; range < s.range_count(); ++range) {
      for (std::size_t i = 0; i < es.size(); ++i) {
        if (s.range_of(es[i].value) != range) continue;
        std::size_t above = 0;
        for (const auto& f : es) above += s.range_of(f.value) == range && f.rank < es[i].rank;
        total += p[i] * static_cast<double>(above + 1);
      }
    }
    EXPECT_NEAR(expected_rr(es, p, s), total, 1e-12);
  }
}

TEST(ExpectedRr, InvariantWithinASegment) {
  const auto es = ranked({100, 300, 200, 400});
  const Values p{0.1, 0.2, 0.3, 0.4};
  const double at_mid = expected_rr(es, p, SeparatorSet({250}));
  for (double s : {200.0001, 220.0, 299.9999, 300.0}) {
    EXPECT_EQ(expected_rr(es, p, SeparatorSet({s})), at_mid) << s;
  }
}

TEST(GreedyPartition, NeverBeatsDp) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 300; ++trial) {
    const auto es = testing::random_entities(rng, 1 + rng() % 12, 10);
    const Values p = testing::random_probabilities(rng, es.size());
    const std::size_t k = 2 + rng() % 4;
    EXPECT_GE(expected_rr(es, p, greedy_partition(es, p, k)),
              expected_rr(es, p, dp_partition(es, p, k)) - 1e-12);
  }
}

TEST(GreedyPartition, ExactForOneSeparator) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const auto es = testing::random_entities(rng, 1 + rng() % 15);
    const Values p = testing::random_probabilities(rng, es.size());
    EXPECT_EQ(greedy_partition(es, p, 2), dp_partition(es, p, 2));
  }
}

TEST(BruteForcePartition, CapIsEnforced) {
  std::mt19937_64 rng(1);
  std::vector<ValuedEntity> es;
  for (int i = 0; i < 40; ++i) es.push_back({static_cast<double>(i), i + 1});
  const Values p(40, 1.0 / 40);
  EXPECT_THROW(brute_force_partition(es, p, 5, 1000), InvalidArgument);
}

SearchLog click_log() {
  // Query q shows a and b; a is clicked 3 times out of 4. Query r shows c.
  std::vector<Impression> imps;
  for (int i = 0; i < 4; ++i) {
    imps.emplace_back("q", i, std::vector<Entity>{{"a", 1.0, 1}, {"b", 2.0, 2}},
                      i < 3 ? "a" : "b");
  }
  imps.emplace_back("r", 9, std::vector<Entity>{{"a", 1.0, 2}, {"c", 3.0, 1}}, "c");
  return SearchLog(std::move(imps));
}

TEST(ClickModel, PureQueryCounts) {
  const ClickModel m = fit_click_model(click_log(), 1.0);
  const Impression imp("q", 0, {{"a", 1.0, 1}, {"b", 2.0, 2}}, "a");
  const auto p = click_probabilities(m, imp);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_DOUBLE_EQ(p[0], 0.75);
  EXPECT_DOUBLE_EQ(p[1], 0.25);
}

TEST(ClickModel, MixtureBlendsCategoryCounts) {
  const ClickModel m = fit_click_model(click_log(), 0.5);
  const Impression imp("q", 0, {{"a", 1.0, 1}, {"c", 3.0, 2}}, "a");
  const auto p = m.probabilities(imp);
  // Query part: a 3/3 (c unseen under q); category part: a 3/4, c 1/4.
  EXPECT_NEAR(p[0], 0.5 * 1.0 + 0.5 * 0.75, 1e-12);
  EXPECT_NEAR(p[1], 0.5 * 0.25, 1e-12);
}

TEST(ClickModel, LambdaZeroIsCategoryModel) {
  const ClickModel m = fit_click_model(click_log(), 0.0);
  const Impression imp("q", 0, {{"a", 1.0, 1}, {"b", 2.0, 2}, {"c", 3.0, 3}}, "a");
  const auto p = m.probabilities(imp);
  // Category clicks: a 3, b 1, c 1.
  EXPECT_NEAR(p[0], 0.6, 1e-12);
  EXPECT_NEAR(p[1], 0.2, 1e-12);
  EXPECT_NEAR(p[2], 0.2, 1e-12);
}

TEST(ClickModel, UnseenEntitiesGetUniform) {
  const ClickModel m = fit_click_model(click_log(), 0.5);
  const Impression imp("z", 0, {{"x", 1.0, 1}, {"y", 2.0, 2}, {"w", 3.0, 3}}, "y");
  for (double p : m.probabilities(imp)) EXPECT_DOUBLE_EQ(p, 1.0 / 3.0);
}

TEST(ClickModel, RankBased) {
  const auto imp = make_impression({10.0, 20.0, 30.0}, 0);
  const auto p = ClickModel::rank_based().probabilities(imp);
  EXPECT_NEAR(p[0], 6.0 / 11, 1e-15);
  EXPECT_NEAR(p[1], 3.0 / 11, 1e-15);
  EXPECT_NEAR(p[2], 2.0 / 11, 1e-15);
  const auto single = make_impression({std::nullopt, 5.0}, 1);
  EXPECT_EQ(ClickModel::rank_based().probabilities(single), (Values{1.0}));
}

TEST(ClickModel, ProbabilitiesSumToOne) {
  SynthConfig c;
  c.n_queries = 400;
  c.missing_value_rate = 0.1;
  c.seed = 4;
  const SearchLog log = generate_synthetic(c);
  const ClickModel m = fit_click_model(log, 0.3);
  for (const auto& imp : log.impressions()) {
    const auto p = m.probabilities(imp);
    ASSERT_EQ(p.size(), imp.valued_count());
    double s = 0.0;
    for (double x : p) s += x;
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(ClickModel, RejectsBadLambda) {
  EXPECT_THROW(fit_click_model(click_log(), 1.5), InvalidArgument);
  EXPECT_THROW(fit_click_model(SearchLog{}, 0.5), InvalidArgument);
}

TEST(ClickModel, SaveLoadRoundTrip) {
  const ClickModel m = fit_click_model(click_log(), 0.25);
  std::stringstream buf;
  save_click_model(buf, m);
  EXPECT_EQ(load_click_model(buf), m);
}

}  // namespace
}  // namespace facetpart
