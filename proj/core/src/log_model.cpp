// SPDX-License-Identifier: Apache-2.0

#include "facetpart/log_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "facetpart/error.hpp"
#include "random.hpp"

namespace facetpart {

using nlohmann::json;

Impression::Impression(std::string query_id, std::int64_t timestamp,
                       std::vector<Entity> entities, std::string clicked,
                       std::optional<std::vector<double>> features)
    : query_id_(std::move(query_id)),
      timestamp_(timestamp),
      entities_(std::move(entities)),
      clicked_(std::move(clicked)),
      features_(std::move(features)) {
  const auto fail = [this](const std::string& what) {
    throw ValidationError("query '" + query_id_ + "': " + what);
  };
  if (entities_.empty()) fail("no entities");

  std::sort(entities_.begin(), entities_.end(),
            [](const Entity& a, const Entity& b) { return a.rank < b.rank; });
  std::set<std::string> ids;
  for (std::size_t i = 0; i < entities_.size(); ++i) {
    const Entity& e = entities_[i];
    if (e.rank != static_cast<int>(i) + 1) {
      fail("ranks are not a permutation of 1.." +
           std::to_string(entities_.size()) + " (duplicate or missing rank)");
    }
    if (!ids.insert(e.id).second) fail("duplicate entity id '" + e.id + "'");
    if (e.value && !std::isfinite(*e.value)) {
      fail("entity '" + e.id + "' has a non-finite value");
    }
  }

  const auto it = std::find_if(entities_.begin(), entities_.end(),
                               [this](const Entity& e) { return e.id == clicked_; });
  if (it == entities_.end()) fail("clicked id '" + clicked_ + "' is not in the list");
  if (!it->value) fail("clicked entity '" + clicked_ + "' has no value");
  clicked_index_ = static_cast<std::size_t>(it - entities_.begin());

  valued_count_ = static_cast<std::size_t>(std::count_if(
      entities_.begin(), entities_.end(),
      [](const Entity& e) { return e.value.has_value(); }));

  if (features_) {
    for (double f : *features_) {
      if (!std::isfinite(f)) fail("non-finite feature");
    }
  }
}

std::vector<ValuedEntity> Impression::valued() const {
  std::vector<ValuedEntity> out;
  out.reserve(valued_count_);
  for (const Entity& e : entities_) {
    if (e.value) out.push_back({*e.value, e.rank});
  }
  return out;
}

SearchLog::SearchLog(std::vector<Impression> impressions, DropCounts dropped)
    : impressions_(std::move(impressions)), dropped_(dropped) {
  stats_.n = impressions_.size();
  std::size_t total = 0;
  for (const auto& imp : impressions_) total += imp.entities().size();
  stats_.mean_entities =
      impressions_.empty() ? 0.0
                           : static_cast<double>(total) /
                                 static_cast<double>(impressions_.size());
}

SearchLog SearchLog::with_candidate_count(std::size_t n0) const {
  SearchLog copy = *this;
  copy.stats_.n0 = n0;
  return copy;
}

namespace {

std::optional<Impression> impression_from_json(const json& j, std::size_t line,
                                               DropCounts& dropped) {
  if (!j.is_object()) throw ParseError(line, "record is not an object");
  const auto require = [&](const char* key) -> const json& {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(line, std::string("missing '") + key + "'");
    return *it;
  };

  const json& qid = require("query_id");
  if (!qid.is_string()) throw ParseError(line, "'query_id' must be a string");
  const json& ts = require("ts");
  if (!ts.is_number_integer()) throw ParseError(line, "'ts' must be an integer");
  const json& ents = require("entities");
  if (!ents.is_array()) throw ParseError(line, "'entities' must be an array");

  std::vector<Entity> entities;
  entities.reserve(ents.size());
  for (const json& e : ents) {
    if (!e.is_object()) throw ParseError(line, "entity is not an object");
    Entity entity;
    auto id = e.find("id");
    if (id == e.end() || !id->is_string()) {
      throw ParseError(line, "entity 'id' must be a string");
    }
    entity.id = id->get<std::string>();
    auto rank = e.find("rank");
    if (rank == e.end() || !rank->is_number_integer()) {
      throw ParseError(line, "entity 'rank' must be an integer");
    }
    entity.rank = rank->get<int>();
    auto value = e.find("value");
    if (value != e.end() && !value->is_null()) {
      if (!value->is_number()) throw ParseError(line, "entity 'value' must be a number");
      entity.value = value->get<double>();
    }
    entities.push_back(std::move(entity));
  }

  std::optional<std::vector<double>> features;
  if (auto f = j.find("features"); f != j.end() && !f->is_null()) {
    if (!f->is_array()) throw ParseError(line, "'features' must be an array");
    std::vector<double> xs;
    for (const json& x : *f) {
      if (!x.is_number()) throw ParseError(line, "features must be numbers");
      xs.push_back(x.get<double>());
    }
    features = std::move(xs);
  }

  auto clicked = j.find("clicked");
  if (clicked == j.end() || clicked->is_null() ||
      (clicked->is_string() && clicked->get<std::string>().empty())) {
    ++dropped.no_click;
    return std::nullopt;
  }
  if (!clicked->is_string()) throw ParseError(line, "'clicked' must be a string");
  const std::string clicked_id = clicked->get<std::string>();
  for (const Entity& e : entities) {
    if (e.id == clicked_id && !e.value) {
      ++dropped.unvalued_click;
      return std::nullopt;
    }
  }

  return Impression(qid.get<std::string>(), ts.get<std::int64_t>(),
                    std::move(entities), clicked_id, std::move(features));
}

}  // namespace

SearchLog parse_log(std::istream& in) {
  std::vector<Impression> impressions;
  DropCounts dropped;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (std::all_of(text.begin(), text.end(),
                    [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(line, std::string("malformed JSON: ") + e.what());
    }
    if (auto imp = impression_from_json(j, line, dropped)) {
      impressions.push_back(std::move(*imp));
    }
  }
  if (impressions.empty()) throw Error("no impressions");
  return SearchLog(std::move(impressions), dropped);
}

SearchLog parse_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open log '" + path.string() + "'");
  return parse_log(in);
}

std::string serialize_impression(const Impression& impression) {
  json j;
  j["query_id"] = impression.query_id();
  j["ts"] = impression.timestamp();
  json ents = json::array();
  for (const Entity& e : impression.entities()) {
    json je;
    je["id"] = e.id;
    if (e.value) je["value"] = *e.value;
    je["rank"] = e.rank;
    ents.push_back(std::move(je));
  }
  j["entities"] = std::move(ents);
  j["clicked"] = impression.clicked_id();
  if (impression.features()) j["features"] = *impression.features();
  return j.dump();
}

void write_log(std::ostream& out, const SearchLog& log) {
  for (const auto& imp : log.impressions()) out << serialize_impression(imp) << '\n';
}

void write_log(const std::filesystem::path& path, const SearchLog& log) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  write_log(out, log);
}

namespace {

std::vector<std::size_t> time_order(const SearchLog& log) {
  std::vector<std::size_t> order(log.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return log[a].timestamp() < log[b].timestamp();
  });
  return order;
}

}  // namespace

SearchLog subset(const SearchLog& log, std::span<const std::size_t> indices) {
  std::vector<Impression> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(log[i]);
  return SearchLog(std::move(out));
}

TimeSplit split_by_time(const SearchLog& log, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidArgument("train fraction must lie in (0, 1)");
  }
  const auto order = time_order(log);
  const double exact = train_fraction * static_cast<double>(log.size());
  auto cut = static_cast<std::size_t>(std::ceil(exact - 1e-9));
  cut = std::min(cut, log.size());

  TimeSplit split;
  split.train = subset(log, std::span(order).first(cut));
  split.test = subset(log, std::span(order).subspan(cut));
  if (split.test.empty()) split.warnings.push_back("test split is empty");
  if (split.train.empty()) split.warnings.push_back("train split is empty");
  return split;
}

std::vector<std::vector<std::size_t>> time_ordered_folds(const SearchLog& log,
                                                         std::size_t folds) {
  if (folds == 0) throw InvalidArgument("fold count must be positive");
  const auto order = time_order(log);
  std::vector<std::vector<std::size_t>> out(folds);
  const std::size_t n = order.size();
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t lo = f * n / folds;
    const std::size_t hi = (f + 1) * n / folds;
    out[f].assign(order.begin() + static_cast<std::ptrdiff_t>(lo),
                  order.begin() + static_cast<std::ptrdiff_t>(hi));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic generation

void SynthConfig::validate() const {
  if (n_queries == 0) throw InvalidArgument("n_queries must be positive");
  if (entities_per_query.min == 0 || entities_per_query.max < entities_per_query.min) {
    throw InvalidArgument("entities_per_query needs 1 <= min <= max");
  }
  if (!(click_position_bias >= 0.0) || !std::isfinite(click_position_bias)) {
    throw InvalidArgument("click_position_bias must be >= 0");
  }
  if (!(missing_value_rate >= 0.0 && missing_value_rate < 1.0)) {
    throw InvalidArgument("missing_value_rate must lie in [0, 1)");
  }
  if (query_pool == 0) throw InvalidArgument("query_pool must be positive");
  std::size_t dim = 0;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    const auto& cl = clusters[c];
    if (!(cl.weight > 0.0) || !std::isfinite(cl.weight)) {
      throw InvalidArgument("cluster weights must be positive");
    }
    if (!(cl.feature_spread >= 0.0)) {
      throw InvalidArgument("feature_spread must be >= 0");
    }
    if (c == 0) dim = cl.feature_center.size();
    if (cl.feature_center.size() != dim) {
      throw InvalidArgument("all clusters need the same feature dimension");
    }
  }
}

namespace {

using detail::uniform01;
using detail::uniform_index;

struct Catalog {
  std::vector<std::string> ids;
  std::vector<std::optional<double>> values;
};

Catalog make_catalog(const SynthConfig& config, std::size_t cluster,
                     std::size_t query) {
  std::seed_seq seq{config.seed, static_cast<std::uint64_t>(cluster),
                    static_cast<std::uint64_t>(query), std::uint64_t{0x5eed}};
  std::mt19937_64 rng(seq);
  Catalog cat;
  const std::size_t size = config.entities_per_query.max;
  // Price level of the query, roughly 20 to 1100 currency units.
  const double scale = std::exp(3.0 + 4.0 * uniform01(rng));
  const std::string prefix = "c" + std::to_string(cluster) + "q" + std::to_string(query);
  for (std::size_t j = 0; j < size; ++j) {
    cat.ids.push_back(prefix + "e" + std::to_string(j));
    if (uniform01(rng) < config.missing_value_rate) {
      cat.values.emplace_back();
    } else {
      const double v = scale * (0.2 + 1.6 * uniform01(rng));
      cat.values.emplace_back(std::round(v * 100.0) / 100.0);
    }
  }
  return cat;
}

}  // namespace

SearchLog generate_synthetic(const SynthConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);

  std::vector<QueryCluster> clusters = config.clusters;
  if (clusters.empty()) {
    QueryCluster only;
    only.value_cdf = config.value_cdf;
    clusters.push_back(std::move(only));
  }
  double total_weight = 0.0;
  for (const auto& c : clusters) total_weight += c.weight;

  std::vector<std::vector<Catalog>> catalogs(clusters.size());
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    for (std::size_t q = 0; q < config.query_pool; ++q) {
      catalogs[c].push_back(make_catalog(config, c, q));
    }
  }

  std::vector<Impression> impressions;
  impressions.reserve(config.n_queries);
  std::int64_t ts = 1'000'000;
  for (std::size_t i = 0; i < config.n_queries; ++i) {
    std::size_t c = 0;
    for (double u = uniform01(rng) * total_weight; c + 1 < clusters.size(); ++c) {
      u -= clusters[c].weight;
      if (u < 0.0) break;
    }
    const QueryCluster& cluster = clusters[c];
    const std::size_t q = uniform_index(rng, config.query_pool);
    const Catalog& cat = catalogs[c][q];

    const std::size_t span =
        config.entities_per_query.max - config.entities_per_query.min + 1;
    const std::size_t m = config.entities_per_query.min + uniform_index(rng, span);

    // Pick m catalog entries, keeping at least one valued entity.
    std::vector<std::size_t> picks(cat.ids.size());
    std::iota(picks.begin(), picks.end(), 0);
    for (std::size_t j = 0; j < m; ++j) {
      std::swap(picks[j], picks[j + uniform_index(rng, picks.size() - j)]);
    }
    picks.resize(m);
    std::vector<std::size_t> valued;
    for (std::size_t p : picks) {
      if (cat.values[p]) valued.push_back(p);
    }
    if (valued.empty()) {
      // Every pick lacks a value; fall back to the first valued entry.
      for (std::size_t p = 0; p < cat.ids.size(); ++p) {
        if (cat.values[p]) {
          picks.back() = p;
          valued.push_back(p);
          break;
        }
      }
      if (valued.empty()) continue;
    }

    // Clicked entity: the one whose value-quantile j/nv is nearest F^-1(u),
    // so z = j/nv tracks the configured CDF to within half a step.
    std::stable_sort(valued.begin(), valued.end(), [&](std::size_t a, std::size_t b) {
      return *cat.values[a] < *cat.values[b];
    });
    const double r = cluster.value_cdf.inverse(uniform01(rng));
    const std::size_t nv = valued.size();
    const auto nearest = static_cast<std::size_t>(std::llround(r * static_cast<double>(nv)));
    const std::size_t pos = std::clamp<std::size_t>(nearest, 1, nv) - 1;
    const std::size_t clicked = valued[pos];

    // Clicked rank ~ p^-bias, the remaining ranks uniformly shuffled.
    std::vector<double> cum(m);
    double acc = 0.0;
    for (std::size_t p = 0; p < m; ++p) {
      acc += std::pow(static_cast<double>(p + 1), -config.click_position_bias);
      cum[p] = acc;
    }
    const double draw = uniform01(rng) * acc;
    const auto clicked_rank = static_cast<int>(
        std::min<std::size_t>(
            static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), draw) -
                                     cum.begin()),
            m - 1) +
        1);
    std::vector<int> ranks;
    for (int rk = 1; rk <= static_cast<int>(m); ++rk) {
      if (rk != clicked_rank) ranks.push_back(rk);
    }
    for (std::size_t j = ranks.size(); j > 1; --j) {
      std::swap(ranks[j - 1], ranks[uniform_index(rng, j)]);
    }

    std::vector<Entity> entities;
    entities.reserve(m);
    std::size_t next = 0;
    for (std::size_t p : picks) {
      Entity e;
      e.id = cat.ids[p];
      e.value = cat.values[p];
      e.rank = p == clicked ? clicked_rank : ranks[next++];
      entities.push_back(std::move(e));
    }

    std::optional<std::vector<double>> features;
    if (!cluster.feature_center.empty()) {
      std::vector<double> x = cluster.feature_center;
      for (double& v : x) v += cluster.feature_spread * (2.0 * uniform01(rng) - 1.0);
      features = std::move(x);
    }

    ts += 1 + static_cast<std::int64_t>(uniform_index(rng, 60));
    impressions.emplace_back("c" + std::to_string(c) + "q" + std::to_string(q), ts,
                             std::move(entities), cat.ids[clicked], std::move(features));
  }
  if (impressions.empty()) throw Error("no impressions");
  return SearchLog(std::move(impressions));
}

namespace {

ValueCdf cdf_from_json(const json& j) {
  if (!j.is_string()) throw InvalidArgument("value_cdf must be a string spec");
  return parse_value_cdf(j.get<std::string>());
}

}  // namespace

SynthConfig parse_synth_config(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("malformed generator config: ") + e.what());
  }
  SynthConfig cfg;
  try {
    if (j.contains("n_queries")) cfg.n_queries = j.at("n_queries").get<std::size_t>();
    if (j.contains("entities_per_query")) {
      const json& e = j.at("entities_per_query");
      if (e.is_number_integer()) {
        cfg.entities_per_query.min = cfg.entities_per_query.max = e.get<std::size_t>();
      } else {
        cfg.entities_per_query.min = e.at("min").get<std::size_t>();
        cfg.entities_per_query.max = e.at("max").get<std::size_t>();
      }
    }
    if (j.contains("value_cdf")) cfg.value_cdf = cdf_from_json(j.at("value_cdf"));
    if (j.contains("click_position_bias")) {
      cfg.click_position_bias = j.at("click_position_bias").get<double>();
    }
    if (j.contains("missing_value_rate")) {
      cfg.missing_value_rate = j.at("missing_value_rate").get<double>();
    }
    if (j.contains("query_pool")) cfg.query_pool = j.at("query_pool").get<std::size_t>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("clusters")) {
      for (const json& c : j.at("clusters")) {
        QueryCluster cl;
        if (c.contains("weight")) cl.weight = c.at("weight").get<double>();
        if (c.contains("value_cdf")) cl.value_cdf = cdf_from_json(c.at("value_cdf"));
        if (c.contains("feature_center")) {
          cl.feature_center = c.at("feature_center").get<std::vector<double>>();
        }
        if (c.contains("feature_spread")) {
          cl.feature_spread = c.at("feature_spread").get<double>();
        }
        cfg.clusters.push_back(std::move(cl));
      }
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("bad generator config field: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

SynthConfig parse_synth_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open generator config '" + path.string() + "'");
  return parse_synth_config(in);
}

}  // namespace facetpart
