// SPDX-License-Identifier: Apache-2.0

#include "facetpart/metric.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>

#include <nlohmann/json.hpp>

#include "facetpart/error.hpp"

namespace facetpart {

SeparatorSet::SeparatorSet(std::vector<double> values, std::size_t requested_k)
    : values_(std::move(values)) {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw InvalidArgument("separators must be finite");
    }
    if (i > 0 && !(values_[i] > values_[i - 1])) {
      throw InvalidArgument("separators must be strictly increasing");
    }
  }
  requested_k_ = std::max(requested_k, values_.size() + 1);
}

std::size_t SeparatorSet::range_of(double value) const {
  // [s_{j-1}, s_j): a value equal to s_j belongs to range j.
  return static_cast<std::size_t>(
      std::upper_bound(values_.begin(), values_.end(), value) - values_.begin());
}

SeparatorSet SeparatorSet::with(double extra) const {
  std::vector<double> v = values_;
  auto it = std::lower_bound(v.begin(), v.end(), extra);
  if (it != v.end() && *it == extra) return *this;
  v.insert(it, extra);
  const std::size_t k = std::max(requested_k_, v.size() + 1);
  return SeparatorSet(std::move(v), k);
}

std::size_t refined_rank(std::span<const ValuedEntity> entities,
                         std::size_t clicked, const SeparatorSet& s) {
  const ValuedEntity& c = entities[clicked];
  const std::size_t range = s.range_of(c.value);
  std::size_t rr = 0;
  for (const ValuedEntity& e : entities) {
    if (e.rank <= c.rank && s.range_of(e.value) == range) ++rr;
  }
  return rr;
}

std::size_t refined_rank(const Impression& impression, const SeparatorSet& s) {
  const Entity& clicked = impression.clicked();
  if (!clicked.value) {
    throw ValidationError("query '" + impression.query_id() +
                          "': clicked entity has no value");
  }
  const std::size_t range = s.range_of(*clicked.value);
  std::size_t rr = 0;
  for (const Entity& e : impression.entities()) {
    if (e.rank > clicked.rank) break;
    if (e.value && s.range_of(*e.value) == range) ++rr;
  }
  return rr;
}

std::vector<double> EvalReport::rr_values() const {
  std::vector<double> out;
  out.reserve(per_impression.size());
  for (const auto& r : per_impression) out.push_back(static_cast<double>(r.rr));
  return out;
}

EvalReport arr_evaluate(const SearchLog& log, const Partitioner& partitioner) {
  EvalReport report;
  report.per_impression.reserve(log.size());
  double sum = 0.0;
  for (const Impression& imp : log.impressions()) {
    std::size_t rr = 0;
    try {
      rr = refined_rank(imp, partitioner(imp));
    } catch (const ValidationError&) {
      throw;
    } catch (const std::exception& e) {
      throw ValidationError("query '" + imp.query_id() + "': " + e.what());
    }
    report.per_impression.push_back({imp.query_id(), rr});
    sum += static_cast<double>(rr);
  }
  report.n = log.size();
  report.arr = report.n == 0 ? 0.0 : sum / static_cast<double>(report.n);
  return report;
}

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) return "nan";
  return std::string(buf, end);
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void write_report_csv(std::ostream& out, const EvalReport& report) {
  out << "query_id,rr\n";
  for (const auto& r : report.per_impression) {
    out << csv_field(r.query_id) << ',' << r.rr << '\n';
  }
}

std::string report_summary_json(
    const EvalReport& report,
    const std::vector<std::pair<std::string, std::string>>& extra) {
  nlohmann::ordered_json j;
  j["arr"] = report.arr;
  j["n"] = report.n;
  for (const auto& [key, value] : extra) j[key] = value;
  return j.dump(2);
}

}  // namespace facetpart
