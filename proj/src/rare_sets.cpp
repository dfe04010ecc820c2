#include "heavyrisk/rare_sets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "heavyrisk/error.hpp"

namespace heavyrisk {
namespace {

constexpr double kWeightTolerance = 1e-12;

void check_dimension(std::size_t expected, std::size_t got) {
  if (expected != got)
    throw InvalidArgument("dimension mismatch: set has d=" + std::to_string(expected) +
                          ", point has " + std::to_string(got));
}

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace

RareSet RareSet::or_set(std::vector<double> thresholds) {
  if (thresholds.empty()) throw InvalidArgument("or-set: empty threshold vector");
  for (double b : thresholds)
    if (!(b > 0.0) || !std::isfinite(b)) throw InvalidArgument("or-set: thresholds must be positive");
  const std::size_t d = thresholds.size();
  return RareSet(OrSet{std::move(thresholds)}, d);
}

RareSet RareSet::halfspace(std::vector<double> weights, double level) {
  if (weights.empty()) throw InvalidArgument("halfspace: empty weight vector");
  if (!(level > 0.0) || !std::isfinite(level)) throw InvalidArgument("halfspace: level must be positive");
  double sum = 0.0;
  bool any_positive = false;
  for (double l : weights) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw InvalidArgument("halfspace: weights must be nonnegative");
    any_positive = any_positive || l > 0.0;
    sum += l;
  }
  if (!any_positive) throw InvalidArgument("halfspace: at least one weight must be positive");
  if (std::abs(sum - 1.0) > kWeightTolerance)
    throw InvalidArgument("halfspace: weights must sum to 1 (got " + std::to_string(sum) + ")");
  const std::size_t d = weights.size();
  return RareSet(Halfspace{std::move(weights), level}, d);
}

RareSet RareSet::support_set(std::vector<std::vector<double>> directions, double level) {
  if (directions.empty()) throw InvalidArgument("support set: at least one direction required");
  if (!(level > 0.0) || !std::isfinite(level)) throw InvalidArgument("support set: level must be positive");
  const std::size_t d = directions.front().size();
  if (d == 0) throw InvalidArgument("support set: empty direction");
  for (auto& p : directions) {
    if (p.size() != d) throw InvalidArgument("support set: directions differ in dimension");
    bool positive = false;
    for (double v : p) {
      if (!(v >= 0.0) || !std::isfinite(v))
        throw InvalidArgument("support set: direction components must be nonnegative (increasing set)");
      positive = positive || v > 0.0;
    }
    if (!positive) throw InvalidArgument("support set: every direction needs a positive component");
    for (double& v : p) v /= level;
  }
  return RareSet(SupportSet{std::move(directions)}, d);
}

double RareSet::y_a(std::span<const double> point) const {
  check_dimension(dimension_, point.size());
  double value = std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, OrSet>) {
          double m = -std::numeric_limits<double>::infinity();
          for (std::size_t i = 0; i < point.size(); ++i) m = std::max(m, point[i] / s.thresholds[i]);
          return m;
        } else if constexpr (std::is_same_v<T, Halfspace>) {
          return dot(s.weights, point) / s.level;
        } else {
          double m = -std::numeric_limits<double>::infinity();
          for (const auto& p : s.directions) m = std::max(m, dot(p, point));
          return m;
        }
      },
      shape_);
  return std::max(0.0, value);
}

bool RareSet::contains(double scale, std::span<const double> point) const {
  if (!(scale > 0.0)) throw InvalidArgument("contains: scale must be positive");
  return y_a(point) > scale;
}

InclusionMargin RareSet::inclusion_margin(double x, double u, std::span<const double> point) const {
  if (!(u > 0.0) || !(x > u)) throw InvalidArgument("inclusion_margin: requires x > u > 0");
  const double y = y_a(point);
  return {y > x + u, y > x, y > x - u};
}

bool ruin_contains(RuinSet set, std::span<const double> point) {
  switch (set) {
    case RuinSet::AnyLineNegative:
      return std::any_of(point.begin(), point.end(), [](double v) { return v < 0.0; });
    case RuinSet::TotalNegative:
      return std::accumulate(point.begin(), point.end(), 0.0) < 0.0;
  }
  return false;
}

CapitalAllocation::CapitalAllocation(double capital, std::vector<double> weights)
    : capital_(capital), weights_(std::move(weights)) {
  if (!(capital_ > 0.0) || !std::isfinite(capital_))
    throw InvalidArgument("allocation: capital must be positive");
  if (weights_.empty()) throw InvalidArgument("allocation: empty weight vector");
  double sum = 0.0;
  for (double l : weights_) {
    if (!(l > 0.0) || !std::isfinite(l)) throw InvalidArgument("allocation: weights must be positive");
    sum += l;
  }
  if (std::abs(sum - 1.0) > kWeightTolerance)
    throw InvalidArgument("allocation: weights must sum to 1 (got " + std::to_string(sum) + ")");
}

RareSet ruin_to_rare(RuinSet set, const CapitalAllocation& alloc) {
  const std::size_t d = alloc.dimension();
  switch (set) {
    case RuinSet::AnyLineNegative:
      return RareSet::or_set(alloc.weights());
    case RuinSet::TotalNegative: {
      // {y : sum y_i > sum l_i = 1}, written with weights 1/d and level 1/d.
      const double w = 1.0 / static_cast<double>(d);
      std::vector<double> weights(d, w);
      // Keep the weights summing to one exactly in floating point.
      weights.back() = 1.0 - w * static_cast<double>(d - 1);
      return RareSet::halfspace(std::move(weights), w);
    }
  }
  throw InvalidArgument("ruin_to_rare: unknown ruin set");
}

}  // namespace heavyrisk
