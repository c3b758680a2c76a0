// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "facetpart/error.hpp"
#include "facetpart/stats.hpp"

namespace facetpart {
namespace {

using Values = std::vector<double>;

TEST(Stats, MeanAndSampleStddev) {
  const Values x{2, 4, 4, 4, 5, 5, 7, 9};
  EXPECT_DOUBLE_EQ(mean(x), 5.0);
  EXPECT_NEAR(stddev(x), std::sqrt(32.0 / 7.0), 1e-12);
}

TEST(PairedTTest, IdenticalSamples) {
  const Values a{1, 2, 3, 4};
  const auto r = paired_t_test(a, a);
  EXPECT_EQ(r.t, 0.0);
  EXPECT_EQ(r.p, 1.0);
  EXPECT_EQ(r.df, 3u);
}

// Reference values from scipy.stats.ttest_rel.
TEST(PairedTTest, MatchesReference) {
  const Values a{5.1, 4.9, 6.2, 5.8, 6.0, 5.5, 5.3, 6.1};
  const Values b{4.8, 4.7, 5.9, 5.9, 5.6, 5.1, 5.2, 5.7};
  const auto r = paired_t_test(a, b);
  EXPECT_NEAR(r.t, 3.988620176087322, 1e-10);
  EXPECT_NEAR(r.p, 0.0052656910291617775, 1e-10);
  EXPECT_EQ(r.df, 7u);
}

TEST(PairedTTest, ConstantNonzeroDifference) {
  const Values a{2, 3, 4};
  const Values b{1, 2, 3};
  const auto r = paired_t_test(a, b);
  EXPECT_TRUE(std::isinf(r.t));
  EXPECT_GT(r.t, 0.0);
  EXPECT_EQ(r.p, 0.0);
}

TEST(PairedTTest, AntisymmetricInArguments) {
  const Values a{1.0, 2.5, 3.0, 4.5};
  const Values b{1.5, 2.0, 3.5, 3.0};
  const auto ab = paired_t_test(a, b);
  const auto ba = paired_t_test(b, a);
  EXPECT_DOUBLE_EQ(ab.t, -ba.t);
  EXPECT_DOUBLE_EQ(ab.p, ba.p);
}

TEST(PairedTTest, Errors) {
  EXPECT_THROW(paired_t_test(Values{1, 2}, Values{1}), InvalidArgument);
  EXPECT_THROW(paired_t_test(Values{1}, Values{1}), InvalidArgument);
}

}  // namespace
}  // namespace facetpart
