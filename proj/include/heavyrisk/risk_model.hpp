#pragma once

// Pathwise simulation of the discounted aggregate claims
//   D(t) = sum_{i <= N(t)} X(i) exp(-xi(T_i))
// and the discounted surplus U(t) = x l + int_0^t exp(-xi(s)) c(s) ds - D(t).

#include <cstdint>
#include <span>
#include <vector>

#include "heavyrisk/claim_vectors.hpp"
#include "heavyrisk/processes.hpp"
#include "heavyrisk/random.hpp"
#include "heavyrisk/rare_sets.hpp"

namespace heavyrisk {

/// Piecewise-constant premium density: rates[k] on [breaks[k], breaks[k+1]),
/// the last rate extending to infinity. breaks[0] must be 0.
struct PremiumSchedule {
  std::vector<double> breaks{0.0};
  std::vector<double> rates{0.0};
};

class PremiumPlan {
 public:
  /// c_i(t) = M_i for all t.
  static PremiumPlan constant(std::vector<double> bounds);
  static PremiumPlan zero(std::size_t dimension) { return constant(std::vector<double>(dimension, 0.0)); }

  PremiumPlan(std::vector<PremiumSchedule> schedules, std::vector<double> bounds);

  std::size_t dimension() const { return bounds_.size(); }
  const std::vector<double>& bounds() const { return bounds_; }
  bool is_zero() const { return zero_; }

  double rate(std::size_t line, double t) const;
  /// int_0^t exp(-r y) c_line(y) dy in closed form.
  double discounted_integral(std::size_t line, double t, double r) const;

 private:
  std::vector<PremiumSchedule> schedules_;
  std::vector<double> bounds_;
  bool zero_ = true;
};

struct RiskModelSpec {
  ClaimModel claims;
  InterClaimCoupling coupling;
  RenewalModel arrivals;
  ReturnProcess returns;
  PremiumPlan premiums;
  CapitalAllocation allocation;

  std::size_t dimension() const { return claims.dimension(); }
  /// Throws InvalidArgument when component dimensions disagree.
  void validate() const;
};

/// Seeds of the mutually independent sources of randomness.
struct StreamSeeds {
  std::uint64_t claims = 0;
  std::uint64_t arrivals = 0;
  std::uint64_t returns = 0;

  static StreamSeeds derive(std::uint64_t master);
  bool operator==(const StreamSeeds&) const = default;
};

/// Engines for one block of paths; paths in a block consume them in order.
struct PathStreams {
  Engine claims;
  Engine arrivals;
  Engine returns;

  static PathStreams for_block(const StreamSeeds& seeds, std::uint64_t block);
};

struct PathRealization {
  std::size_t dimension = 0;
  std::vector<double> arrival_times;
  std::vector<double> claims;               // arrivals x d, row-major
  std::vector<double> discount;             // exp(-xi(T_i))
  std::vector<double> aggregate_at_arrival; // D(T_i), arrivals x d
  std::vector<double> premium_at_arrival;   // discounted premiums at T_i, arrivals x d
  std::vector<double> grid;
  std::vector<double> aggregate;  // D(t) on the grid, grid x d
  std::vector<double> premium;    // discounted premiums on the grid, grid x d
  std::vector<double> surplus;    // U(t) on the grid under the spec's allocation

  std::size_t arrivals() const { return arrival_times.size(); }
  std::span<const double> row(const std::vector<double>& m, std::size_t i) const {
    return {m.data() + i * dimension, dimension};
  }
  /// Index of t in the grid; DomainError when t is not a grid point.
  std::size_t grid_index(double t) const;
};

inline constexpr std::size_t kPremiumGridPoints = 1024;

/// Reusable path generator for a fixed model and evaluation grid.
class PathSimulator {
 public:
  /// Without premiums the premium fields stay zero; entrance events only
  /// need D(t).
  PathSimulator(const RiskModelSpec& spec, std::vector<double> grid, bool with_premiums = true);

  void simulate(PathStreams& streams, PathRealization& out);
  const std::vector<double>& grid() const { return grid_; }

 private:
  void discount_and_premiums(PathStreams& streams, PathRealization& out);

  const RiskModelSpec* spec_;
  std::vector<double> grid_;
  double horizon_;
  ClaimSequence sequence_;
  ReturnPath return_path_;
  std::vector<double> premium_grid_;
  bool premiums_;
};

PathRealization simulate_path(const RiskModelSpec& spec, std::vector<double> grid, PathStreams& streams);

/// D(t) in x*A for a grid time t.
bool entrance_indicator(const PathRealization& path, const RareSet& set, double x, double t);

/// U(s) in L for some s <= t among claim instants and grid points, with
/// U = x l + premiums - D under the given allocation.
bool ruin_indicator(const PathRealization& path, RuinSet set, const CapitalAllocation& alloc, double t);

}  // namespace heavyrisk
