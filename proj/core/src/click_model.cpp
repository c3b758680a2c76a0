// SPDX-License-Identifier: Apache-2.0

#include "facetpart/click_model.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "facetpart/error.hpp"

namespace facetpart {

using nlohmann::json;

ClickModel ClickModel::rank_based() {
  ClickModel m;
  m.kind_ = Kind::kRankBased;
  return m;
}

ClickModel fit_click_model(const SearchLog& train, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw InvalidArgument("lambda must lie in [0, 1]");
  }
  if (train.empty()) throw InvalidArgument("empty training log");
  ClickModel m;
  m.kind_ = ClickModel::Kind::kMixture;
  m.lambda_ = lambda;
  for (const Impression& imp : train.impressions()) {
    ++m.query_counts_[{imp.query_id(), imp.clicked_id()}];
    ++m.category_counts_[imp.clicked_id()];
  }
  return m;
}

namespace {

// Normalizes in place; returns false (leaving zeros) when there is no mass.
bool normalize(std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  if (!(sum > 0.0)) return false;
  for (double& x : v) x /= sum;
  return true;
}

}  // namespace

std::vector<double> ClickModel::probabilities(const Impression& impression) const {
  std::vector<const Entity*> valued;
  for (const Entity& e : impression.entities()) {
    if (e.value) valued.push_back(&e);
  }
  std::vector<double> p(valued.size(), 0.0);

  if (kind_ == Kind::kRankBased) {
    for (std::size_t i = 0; i < valued.size(); ++i) p[i] = 1.0 / valued[i]->rank;
    normalize(p);
    return p;
  }

  std::vector<double> pq(valued.size(), 0.0);
  std::vector<double> pc(valued.size(), 0.0);
  for (std::size_t i = 0; i < valued.size(); ++i) {
    if (auto it = query_counts_.find({impression.query_id(), valued[i]->id});
        it != query_counts_.end()) {
      pq[i] = static_cast<double>(it->second);
    }
    if (auto it = category_counts_.find(valued[i]->id); it != category_counts_.end()) {
      pc[i] = static_cast<double>(it->second);
    }
  }
  normalize(pq);
  normalize(pc);
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = lambda_ * pq[i] + (1.0 - lambda_) * pc[i];
  }
  if (!normalize(p)) {
    const double u = 1.0 / static_cast<double>(p.size());
    for (double& x : p) x = u;
  }
  return p;
}

void save_click_model(std::ostream& out, const ClickModel& model) {
  json j;
  j["kind"] = model.kind() == ClickModel::Kind::kMixture ? "mixture" : "rank_based";
  j["lambda"] = model.lambda();
  json q = json::array();
  for (const auto& [key, count] : model.query_counts()) {
    q.push_back({{"query_id", key.first}, {"entity_id", key.second}, {"count", count}});
  }
  json c = json::array();
  for (const auto& [id, count] : model.category_counts()) {
    c.push_back({{"entity_id", id}, {"count", count}});
  }
  j["query_counts"] = std::move(q);
  j["category_counts"] = std::move(c);
  out << j.dump(1) << '\n';
}

void save_click_model(const std::filesystem::path& path, const ClickModel& model) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  save_click_model(out, model);
}

ClickModel load_click_model(std::istream& in) {
  ClickModel m;
  try {
    const json j = json::parse(in);
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "mixture") {
      m.kind_ = ClickModel::Kind::kMixture;
    } else if (kind == "rank_based") {
      m.kind_ = ClickModel::Kind::kRankBased;
    } else {
      throw InvalidArgument("unknown click model kind '" + kind + "'");
    }
    m.lambda_ = j.at("lambda").get<double>();
    for (const json& e : j.at("query_counts")) {
      m.query_counts_[{e.at("query_id").get<std::string>(),
                       e.at("entity_id").get<std::string>()}] =
          e.at("count").get<std::size_t>();
    }
    for (const json& e : j.at("category_counts")) {
      m.category_counts_[e.at("entity_id").get<std::string>()] =
          e.at("count").get<std::size_t>();
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed click model: ") + e.what());
  }
  return m;
}

ClickModel load_click_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open click model '" + path.string() + "'");
  return load_click_model(in);
}

}  // namespace facetpart
