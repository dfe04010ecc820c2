#pragma once

// Monte Carlo estimators of entrance and ruin probabilities and the
// asymptotic formulas they are compared against.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "heavyrisk/claim_vectors.hpp"
#include "heavyrisk/processes.hpp"
#include "heavyrisk/rare_sets.hpp"
#include "heavyrisk/risk_model.hpp"

namespace heavyrisk {

struct McSettings {
  std::uint64_t paths = 100'000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Proportion estimate with a 95% Wilson interval.
struct EstimateReport {
  double estimate = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double std_error = 0.0;
  std::uint64_t hits = 0;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
  bool zero_hits = false;
  std::string note;
};

EstimateReport make_report(std::uint64_t hits, std::uint64_t n, std::uint64_t seed, double wall_seconds = 0.0);

/// Hit counts of {D(t) in xA} for every (x, t); hits[i * |t| + j].
std::vector<std::uint64_t> count_entrances(const RiskModelSpec& spec, const RareSet& set,
                                           std::span<const double> x_grid, std::span<const double> t_grid,
                                           const McSettings& mc);

/// Hit counts of ruin by time t for every (x, t); hits[i * |t| + j].
std::vector<std::uint64_t> count_ruins(const RiskModelSpec& spec, RuinSet ruin, const CapitalAllocation& alloc,
                                       std::span<const double> x_grid, std::span<const double> t_grid,
                                       const McSettings& mc);

/// P[D(t) in xA]. Requires n >= 1e3 and t in Lambda_T.
EstimateReport mc_entrance_prob(const RiskModelSpec& spec, const RareSet& set, double x, double t,
                                const McSettings& mc);

/// Finite-horizon ruin probability with capital x split by alloc's weights.
EstimateReport mc_ruin_prob(const RiskModelSpec& spec, RuinSet ruin, const CapitalAllocation& alloc, double x,
                            double t, const McSettings& mc);

struct AsymptoticValue {
  double value = 0.0;
  bool pre_asymptotic = false;
};

/// int_0^t P[Y_A exp(-xi(s)) > x] lambda(ds) for spectral claims with
/// deterministic or Brownian returns. DomainError when t is not in Lambda.
AsymptoticValue asymptotic_entrance_finite(const RiskModelSpec& spec, const RareSet& set, double x, double t);

struct GlobalAsymptotic {
  double value = 0.0;
  bool pre_asymptotic = false;
  double discount_integral = 0.0;  // int_0^t E[exp(-alpha xi(s))] lambda(ds)
  MomentCheck moments;
};

/// P[X in xA] * int_0^t exp(s phi(alpha)) lambda(ds) for t finite or
/// infinite. Throws AssumptionViolation if the moment condition fails or, at
/// t = infinity, if phi(alpha) >= 0.
GlobalAsymptotic asymptotic_entrance_global(const RiskModelSpec& spec, const RareSet& set, double x, double t,
                                            std::optional<std::pair<double, double>> exponents = {});

/// Smallest T0 with int_T0^inf exp(s phi) lambda(ds) <= tol * int_0^T0, at
/// phi = phi(alpha) < 0.
double truncation_horizon(const RiskModelSpec& spec, double alpha, double tol = 1e-4);

struct RatioPoint {
  double x = 0.0;
  double estimate = 0.0;   // Monte Carlo numerator
  double reference = 0.0;  // analytic or pooled denominator
  double ratio = 0.0;
  double ratio_se = 0.0;
  double exact_ratio = 0.0;  // against the closed-form reference
  std::uint64_t hits = 0;
};

struct RatioCurve {
  std::vector<RatioPoint> points;
  bool flagged = false;
  std::string note;
};

/// P[Theta X in xA] / (E[Theta^alpha] P[X in xA]) over the x-grid.
/// Throws AssumptionViolation when E[Theta^p] < inf cannot be verified for
/// some p > alpha.
RatioCurve breiman_check(const ClaimModel& model, const UnivariateLaw& theta, const RareSet& set,
                         std::span<const double> x_grid, const McSettings& mc);

enum class SummandDependence { Iid, Comonotone };

/// P[Y(1) + ... + Y(m) > x] / (m P[Y > x]); the denominator pools the
/// summands' own exceedances, so m = 1 gives exactly 1.
RatioCurve single_big_jump_check(const ClaimModel& model, const RareSet& set, std::size_t m,
                                 std::span<const double> x_grid, const McSettings& mc,
                                 SummandDependence dependence = SummandDependence::Iid);

struct RatioCell {
  double x = 0.0;
  double t = 0.0;
  EstimateReport mc;
  double asymptotic = 0.0;
  bool pre_asymptotic = false;
  double ratio = 0.0;
  double ratio_lo = 0.0;
  double ratio_hi = 0.0;
  double ratio_se = 0.0;
  bool excluded = false;  // zero hits
};

struct RatioTable {
  std::vector<double> x_grid;
  std::vector<double> t_grid;
  std::vector<RatioCell> cells;  // x-major
  std::vector<double> sup_deviation;  // per x: sup_t |ratio - 1|
  std::vector<double> sup_se;
  std::vector<double> heterogeneity_p;  // chi-square test of a constant-in-t ratio
  bool sup_nonincreasing = false;
  std::vector<std::string> notes;

  const RatioCell& cell(std::size_t ix, std::size_t it) const { return cells[ix * t_grid.size() + it]; }
};

RatioTable uniformity_diagnostic(const RiskModelSpec& spec, const RareSet& set, std::span<const double> x_grid,
                                 std::span<const double> t_grid, const McSettings& mc);

}  // namespace heavyrisk
