// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "facetpart/log_model.hpp"
#include "facetpart/optimize.hpp"
#include "facetpart/partition.hpp"

namespace facetpart {

// Fraction of valued entities whose value is <= the clicked entity's value.
// Throws ValidationError if the clicked entity has no value.
double compute_z(const Impression& impression);

// Optional instrumentation for lookups into the cached CDF.
struct ProbeCounter {
  std::size_t comparisons = 0;
  std::size_t lookups = 0;
};

// Cached empirical CDF of the z statistics, F_n(r) = #{z < r} / n, evaluated
// on every candidate ratio j/|E| that can occur in the log.
class EmpiricalCdf {
 public:
  // `z` are the per-impression statistics and `sizes` the valued-entity
  // counts |E^i| (only the distinct sizes matter). Throws InvalidArgument on
  // empty input.
  EmpiricalCdf(std::vector<double> z, std::span<const std::size_t> sizes);

  const std::vector<double>& x_sorted() const noexcept { return x_sorted_; }
  const std::vector<double>& y() const noexcept { return y_; }
  const std::vector<double>& z_sorted() const noexcept { return z_sorted_; }
  std::size_t n() const noexcept { return z_sorted_.size(); }
  std::size_t n0() const noexcept { return x_sorted_.size(); }
  // #{z < 1} / n, the value of F_n just below r = 1.
  double y_below_one() const noexcept { return y_below_one_; }

 private:
  std::vector<double> x_sorted_;
  std::vector<double> y_;
  std::vector<double> z_sorted_;
  double y_below_one_ = 0.0;
};

// Builds the cache from a training log.
EmpiricalCdf cache_cdf(const SearchLog& train);

// F_n(r) for r in (0, 1) via binary search on x_sorted. Every z lies on a
// candidate ratio (or at 1), so F_n is constant on (x_{i-1}, x_i] and the
// result equals a direct recount over the raw z values. r <= 0 gives 0 and
// r >= 1 gives 1.
double cdf_lookup(const EmpiricalCdf& cdf, double r,
                  ProbeCounter* counter = nullptr);

// C_n(R) = sum_j (r_j - r_{j-1}) * (F_n(r_j) - F_n(r_{j-1})), F_n(0) = 0,
// F_n(1) = 1.
double surrogate_cn(const EmpiricalCdf& cdf, const RatioVector& ratios,
                    ProbeCounter* counter = nullptr);

// Uncached path: recounts #{z < r_j} over every z for each evaluation.
double surrogate_cn_recount(std::span<const double> z,
                            const RatioVector& ratios,
                            ProbeCounter* counter = nullptr);

// Width of the range containing z under R; ranges are [r_{j-1}, r_j) and the
// last one also holds z = 1. Its mean over a sample equals C_n.
double range_width_at(const RatioVector& ratios, double z);

enum class OptimizerMethod { kPowell, kNelderMead };

struct RatioOptimizerOptions {
  OptimizerMethod method = OptimizerMethod::kPowell;
  std::size_t restarts = 5;
  double tolerance = 1e-6;
  std::size_t max_evaluations = 2000;  // per restart
  std::uint64_t seed = 0;

  bool operator==(const RatioOptimizerOptions&) const = default;
};

struct RatioFit {
  RatioVector ratios;
  double cn = 1.0;
  std::size_t evaluations = 0;
};

// Minimizes C_n over the ordered simplex. The k-1 free variables u map to
// widths softmax(u_1, ..., u_{k-1}, 0), so u = 0 is the quantile vector.
// Restart 0 starts there; the others start at uniform random simplex points.
// Ties between restarts go to the lower restart index. Throws InvalidArgument
// for k < 2 or restarts == 0.
RatioFit optimize_ratio(const EmpiricalCdf& cdf, std::size_t k,
                        const RatioOptimizerOptions& options = {});

// Softmax reparameterization used by optimize_ratio, exposed for testing.
RatioVector ratios_from_free(std::span<const double> u);
std::vector<double> free_from_ratios(const RatioVector& ratios);

inline constexpr std::size_t kMaxGridK = 4;
inline constexpr std::size_t kDefaultGridCap = 5'000'000;

struct GridResult {
  RatioVector ratios;
  double value = 0.0;
  std::size_t evaluated = 0;
};

// Exhaustive search over every increasing (k-1)-tuple of x_sorted,
// minimizing C_n. Ties keep the first tuple in lexicographic order. Throws
// InvalidArgument for k > 4 or when the tuple count exceeds `cap`.
GridResult grid_search_surrogate(const EmpiricalCdf& cdf, std::size_t k,
                                 std::size_t cap = kDefaultGridCap);

// Same enumeration over `candidates`, minimizing the true ARR of
// ratio_to_separators on `log`.
GridResult grid_search_arr(const SearchLog& log,
                           std::span<const double> candidates, std::size_t k,
                           std::size_t cap = kDefaultGridCap);

// Precomputed per-impression tables that give the ARR of any ratio vector in
// O(k) per impression. Agrees exactly with arr_evaluate over
// ratio_to_separators.
class RatioArrEvaluator {
 public:
  explicit RatioArrEvaluator(const SearchLog& log);
  double arr(const RatioVector& ratios) const;
  std::vector<std::size_t> refined_ranks(const RatioVector& ratios) const;

 private:
  struct Entry {
    std::size_t n = 0;
    std::size_t clicked_boundary_lo = 0;  // first sorted position of clicked value
    std::vector<std::size_t> snap;        // raw cut -> snapped boundary
    std::vector<std::size_t> prefix;      // #{sorted pos < c : rank <= clicked}
  };
  std::size_t refined_rank(const Entry& e, const RatioVector& ratios) const;
  std::vector<Entry> entries_;
};

// "r,F_n" rows on the given grid.
void write_cdf_curve(std::ostream& out, const EmpiricalCdf& cdf,
                     std::span<const double> grid);
// "r1,C_n" rows for k = 2 on the given grid.
void write_cn_curve(std::ostream& out, const EmpiricalCdf& cdf,
                    std::span<const double> grid);

}  // namespace facetpart
