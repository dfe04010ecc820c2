#pragma once

// Rare sets A (open, increasing, convex complement, origin outside the
// closure) and ruin sets L, with the scalar projection
// Y_A(x) = sup{u > 0 : x in u*A}.

#include <span>
#include <variant>
#include <vector>

namespace heavyrisk {

/// {x : x_i > b_i for some i}.
struct OrSet {
  std::vector<double> thresholds;
};

/// {x : sum_i l_i x_i > u}.
struct Halfspace {
  std::vector<double> weights;
  double level = 1.0;
};

/// {x : p^T x > 1 for some p}; directions are stored normalized to level 1.
struct SupportSet {
  std::vector<std::vector<double>> directions;
};

/// Result of probing x*A against its neighbours (x+u)*A and (x-u)*A.
struct InclusionMargin {
  bool in_outer_shrunk = false;  // point in (x+u)A
  bool in_nominal = false;       // point in xA
  bool in_inner_grown = false;   // point in (x-u)A

  bool monotone() const {
    return (!in_outer_shrunk || in_nominal) && (!in_nominal || in_inner_grown);
  }
  bool operator==(const InclusionMargin&) const = default;
};

class RareSet {
 public:
  using Shape = std::variant<OrSet, Halfspace, SupportSet>;

  static RareSet or_set(std::vector<double> thresholds);
  static RareSet halfspace(std::vector<double> weights, double level);
  /// Directions p with {x : p^T x > level}; rescaled to level 1.
  static RareSet support_set(std::vector<std::vector<double>> directions, double level = 1.0);

  std::size_t dimension() const { return dimension_; }
  const Shape& shape() const { return shape_; }

  /// sup{u > 0 : point in u*A}, or 0 when no positive u qualifies. Points
  /// with negative coordinates are accepted (surplus-derived vectors).
  double y_a(std::span<const double> point) const;

  /// point in scale*A. Sets are open, so this is y_a(point) > scale.
  bool contains(double scale, std::span<const double> point) const;

  /// Membership of point in ((x+u)A, xA, (x-u)A). Requires x > u > 0.
  InclusionMargin inclusion_margin(double x, double u, std::span<const double> point) const;

 private:
  RareSet(Shape shape, std::size_t dimension) : shape_(std::move(shape)), dimension_(dimension) {}

  Shape shape_;
  std::size_t dimension_;
};

/// Scale-invariant decreasing ruin sets.
enum class RuinSet {
  AnyLineNegative,  // {x : x_i < 0 for some i}
  TotalNegative,    // {x : sum_i x_i < 0}
};

bool ruin_contains(RuinSet set, std::span<const double> point);

/// Total initial capital x split over d lines by weights l (positive, sum 1).
class CapitalAllocation {
 public:
  CapitalAllocation(double capital, std::vector<double> weights);

  double capital() const { return capital_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t dimension() const { return weights_.size(); }

 private:
  double capital_;
  std::vector<double> weights_;
};

/// The rare set A = l - L, so that x*l - s in x*L  <=>  s in x*A.
RareSet ruin_to_rare(RuinSet set, const CapitalAllocation& alloc);

}  // namespace heavyrisk
