// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "facetpart/value_cdf.hpp"

namespace facetpart {

struct Entity {
  std::string id;
  std::optional<double> value;  // missing facet when empty
  int rank = 0;                 // 1-based position in the result list

  bool operator==(const Entity&) const = default;
};

// A value/rank pair for an entity that carries the facet. Partitioning code
// only ever sees these.
struct ValuedEntity {
  double value = 0.0;
  int rank = 0;

  bool operator==(const ValuedEntity&) const = default;
};

class Impression {
 public:
  // Validates and sorts entities by rank. Throws ValidationError naming the
  // query when ranks are not a permutation of 1..|E|, ids repeat, a value is
  // not finite, or `clicked` does not name exactly one valued entity.
  Impression(std::string query_id, std::int64_t timestamp,
             std::vector<Entity> entities, std::string clicked,
             std::optional<std::vector<double>> features = std::nullopt);

  const std::string& query_id() const noexcept { return query_id_; }
  std::int64_t timestamp() const noexcept { return timestamp_; }
  const std::vector<Entity>& entities() const noexcept { return entities_; }
  const std::string& clicked_id() const noexcept { return clicked_; }
  const std::optional<std::vector<double>>& features() const noexcept {
    return features_;
  }

  const Entity& clicked() const { return entities_[clicked_index_]; }
  std::size_t clicked_index() const noexcept { return clicked_index_; }

  // Valued entities in rank order.
  std::vector<ValuedEntity> valued() const;
  std::size_t valued_count() const noexcept { return valued_count_; }

  bool operator==(const Impression&) const = default;

 private:
  std::string query_id_;
  std::int64_t timestamp_;
  std::vector<Entity> entities_;
  std::string clicked_;
  std::optional<std::vector<double>> features_;
  std::size_t clicked_index_ = 0;
  std::size_t valued_count_ = 0;
};

struct LogStats {
  std::size_t n = 0;         // impressions
  double mean_entities = 0;  // m, average |E^i|
  // Unique candidate ratios; known only after the CDF cache is built.
  std::optional<std::size_t> n0;

  bool operator==(const LogStats&) const = default;
};

struct DropCounts {
  std::size_t no_click = 0;
  std::size_t unvalued_click = 0;

  std::size_t total() const noexcept { return no_click + unvalued_click; }
  bool operator==(const DropCounts&) const = default;
};

class SearchLog {
 public:
  SearchLog() = default;
  explicit SearchLog(std::vector<Impression> impressions,
                     DropCounts dropped = {});

  const std::vector<Impression>& impressions() const noexcept {
    return impressions_;
  }
  std::size_t size() const noexcept { return impressions_.size(); }
  bool empty() const noexcept { return impressions_.empty(); }
  const Impression& operator[](std::size_t i) const { return impressions_[i]; }

  const LogStats& stats() const noexcept { return stats_; }
  const DropCounts& dropped() const noexcept { return dropped_; }

  // Returns a copy with LogStats::n0 filled in.
  SearchLog with_candidate_count(std::size_t n0) const;

  bool operator==(const SearchLog&) const = default;

 private:
  std::vector<Impression> impressions_;
  LogStats stats_;
  DropCounts dropped_;
};

// Line-delimited JSON, one impression per line:
//   {"query_id": "q", "ts": 17, "entities": [{"id": "a", "value": 9.5,
//    "rank": 1}, ...], "clicked": "a", "features": [0.1, 0.2]}
// Clickless records (missing, null or empty "clicked") and records whose
// clicked entity has no value are dropped and counted. Malformed lines throw
// ParseError; invariant violations throw ValidationError.
SearchLog parse_log(std::istream& in);
SearchLog parse_log(const std::filesystem::path& path);

void write_log(std::ostream& out, const SearchLog& log);
void write_log(const std::filesystem::path& path, const SearchLog& log);
std::string serialize_impression(const Impression& impression);

struct TimeSplit {
  SearchLog train;
  SearchLog test;
  std::vector<std::string> warnings;
};

// Earlier ceil(fraction * n) impressions by timestamp (ties keep input order)
// go to `train`, the rest to `test`.
TimeSplit split_by_time(const SearchLog& log, double train_fraction);

// Contiguous, timestamp-ordered folds. Fold sizes differ by at most one.
std::vector<std::vector<std::size_t>> time_ordered_folds(const SearchLog& log,
                                                         std::size_t folds);

SearchLog subset(const SearchLog& log, std::span<const std::size_t> indices);

struct EntityCountSpec {
  std::size_t min = 20;
  std::size_t max = 20;  // inclusive; min == max means fixed
};

// One population of queries. When a generator config lists several clusters
// each query picks one by weight; the cluster decides the click CDF and the
// centre of the opaque feature vector.
struct QueryCluster {
  double weight = 1.0;
  ValueCdf value_cdf = ValueCdf::linear();
  std::vector<double> feature_center;
  double feature_spread = 0.0;  // half-width of the uniform jitter
};

struct SynthConfig {
  std::size_t n_queries = 1000;
  EntityCountSpec entities_per_query;
  ValueCdf value_cdf = ValueCdf::linear();
  // Exponent b of P(clicked entity has rank p) ~ p^-b. Zero means the click
  // position is independent of rank.
  double click_position_bias = 0.0;
  double missing_value_rate = 0.0;
  // Distinct queries per cluster. Each query has a fixed entity catalog of
  // entities_per_query.max entries, so clicks repeat across impressions.
  std::size_t query_pool = 100;
  std::vector<QueryCluster> clusters;  // empty: single cluster, no features
  std::uint64_t seed = 0;

  // Throws InvalidArgument on nonpositive counts, bad rates or weights.
  void validate() const;
};

SynthConfig parse_synth_config(std::istream& in);
SynthConfig parse_synth_config(const std::filesystem::path& path);

// Deterministic for a fixed config. The clicked entity of each query is the
// one whose value-quantile is nearest F^-1(u), so the empirical CDF of the clicked
// quantiles converges to the configured value CDF.
SearchLog generate_synthetic(const SynthConfig& config);

}  // namespace facetpart
