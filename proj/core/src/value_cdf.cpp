// SPDX-License-Identifier: Apache-2.0

#include "facetpart/value_cdf.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "facetpart/error.hpp"

namespace facetpart {

ValueCdf ValueCdf::linear() { return ValueCdf(Shape::kLinear, 1.0, {}); }

ValueCdf ValueCdf::concave() { return ValueCdf(Shape::kConcave, 2.0, {}); }

ValueCdf ValueCdf::convex() { return ValueCdf(Shape::kConvex, 2.0, {}); }

ValueCdf ValueCdf::power(double exponent) {
  if (!(exponent > 0.0) || !std::isfinite(exponent)) {
    throw InvalidArgument("power CDF exponent must be positive");
  }
  return ValueCdf(Shape::kPower, exponent, {});
}

ValueCdf ValueCdf::table(std::vector<std::pair<double, double>> points) {
  if (points.size() < 2) {
    throw InvalidArgument("CDF table needs at least two points");
  }
  if (points.front() != std::pair{0.0, 0.0} ||
      points.back() != std::pair{1.0, 1.0}) {
    throw InvalidArgument("CDF table must start at (0,0) and end at (1,1)");
  }
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (!(points[i].first > points[i - 1].first) ||
        points[i].second < points[i - 1].second) {
      throw InvalidArgument("CDF table must be increasing in r and monotone in F");
    }
  }
  return ValueCdf(Shape::kTable, 1.0, std::move(points));
}

double ValueCdf::operator()(double r) const {
  if (r <= 0.0) return 0.0;
  if (r >= 1.0) return 1.0;
  switch (shape_) {
    case Shape::kLinear:
      return r;
    case Shape::kConcave:
      return 2.0 * r - r * r;
    case Shape::kConvex:
      return r * r;
    case Shape::kPower:
      return 1.0 - std::pow(1.0 - r, exponent_);
    case Shape::kTable: {
      auto it = std::upper_bound(
          points_.begin(), points_.end(), r,
          [](double v, const auto& p) { return v < p.first; });
      const auto& hi = *it;
      const auto& lo = *(it - 1);
      const double t = (r - lo.first) / (hi.first - lo.first);
      return lo.second + t * (hi.second - lo.second);
    }
  }
  return r;
}

double ValueCdf::inverse(double u) const {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  switch (shape_) {
    case Shape::kLinear:
      return u;
    case Shape::kConcave:
      return 1.0 - std::sqrt(1.0 - u);
    case Shape::kConvex:
      return std::sqrt(u);
    case Shape::kPower:
      return 1.0 - std::pow(1.0 - u, 1.0 / exponent_);
    case Shape::kTable: {
      // First segment whose upper F reaches u.
      auto it = std::lower_bound(
          points_.begin(), points_.end(), u,
          [](const auto& p, double v) { return p.second < v; });
      const auto& hi = *it;
      const auto& lo = *(it - 1);
      if (hi.second == lo.second) return lo.first;
      const double t = (u - lo.second) / (hi.second - lo.second);
      return lo.first + t * (hi.first - lo.first);
    }
  }
  return u;
}

std::string ValueCdf::name() const {
  switch (shape_) {
    case Shape::kLinear:
      return "linear";
    case Shape::kConcave:
      return "concave";
    case Shape::kConvex:
      return "convex";
    case Shape::kPower: {
      std::ostringstream os;
      os.precision(17);
      os << "power:" << exponent_;
      return os.str();
    }
    case Shape::kTable: {
      std::ostringstream os;
      os.precision(17);
      os << "table:";
      for (std::size_t i = 0; i < points_.size(); ++i) {
        if (i) os << ',';
        os << points_[i].first << '=' << points_[i].second;
      }
      return os.str();
    }
  }
  return "linear";
}

namespace {

double parse_number(const std::string& text, const std::string& spec) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw InvalidArgument("bad number in CDF spec '" + spec + "'");
  }
  if (used != text.size()) {
    throw InvalidArgument("bad number in CDF spec '" + spec + "'");
  }
  return v;
}

}  // namespace

ValueCdf parse_value_cdf(const std::string& spec) {
  if (spec == "linear") return ValueCdf::linear();
  if (spec == "concave") return ValueCdf::concave();
  if (spec == "convex") return ValueCdf::convex();
  if (spec.rfind("power:", 0) == 0) {
    return ValueCdf::power(parse_number(spec.substr(6), spec));
  }
  if (spec.rfind("table:", 0) == 0) {
    std::vector<std::pair<double, double>> points;
    std::stringstream ss(spec.substr(6));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) {
        throw InvalidArgument("CDF table entries look like r=F: '" + spec + "'");
      }
      points.emplace_back(parse_number(item.substr(0, eq), spec),
                          parse_number(item.substr(eq + 1), spec));
    }
    return ValueCdf::table(std::move(points));
  }
  throw InvalidArgument("unknown CDF spec '" + spec + "'");
}

}  // namespace facetpart
