#pragma once

// Renewal arrival process N(t) and the cadlag return process xi(t).

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "heavyrisk/distributions.hpp"
#include "heavyrisk/random.hpp"

namespace heavyrisk {

inline constexpr std::size_t kRenewalSteps = 2048;

class RenewalModel {
 public:
  /// Interarrival law must have positive support (no atom at 0).
  explicit RenewalModel(UnivariateLaw interarrival);

  const UnivariateLaw& interarrival() const { return interarrival_; }
  /// Rate of a Poisson arrival stream, if the interarrivals are exponential.
  std::optional<double> poisson_rate() const;

  /// Arrival times T_1 < ... < T_N(horizon), all <= horizon.
  std::vector<double> simulate_arrivals(double horizon, Engine& g) const;

  /// lambda(t) = E[N(t)]. Exact for exponential and degenerate interarrivals;
  /// otherwise a discretized renewal equation with step t/steps. Returns
  /// kInfinity if the recursion does not stay finite.
  double renewal_function(double t, std::size_t steps = kRenewalSteps) const;

  /// lambda at k*t/steps for k = 0..steps (numeric scheme for all laws).
  std::vector<double> renewal_table(double t, std::size_t steps = kRenewalSteps) const;

  /// inf{t : lambda(t) > 0}.
  double lambda_lower() const { return interarrival_.support_lower(); }
  bool in_lambda(double t) const;
  /// t in (0, T] intersected with Lambda.
  bool in_lambda_t(double t, double horizon) const { return t > 0.0 && t <= horizon && in_lambda(t); }

 private:
  UnivariateLaw interarrival_;
};

struct Deterministic {
  double rate = 0.0;
};
struct BrownianDrift {
  double drift = 0.0;
  double volatility = 0.0;
};
/// Brownian motion with drift plus compound Poisson jumps jump_scale * J.
struct JumpDiffusion {
  double drift = 0.0;
  double volatility = 0.0;
  double intensity = 0.0;
  UnivariateLaw jump_law = UnivariateLaw::degenerate(0.0);
  double jump_scale = 1.0;
};

class ReturnProcess {
 public:
  using Params = std::variant<Deterministic, BrownianDrift, JumpDiffusion>;

  explicit ReturnProcess(Params params);
  static ReturnProcess deterministic(double rate) { return ReturnProcess(Deterministic{rate}); }
  static ReturnProcess brownian(double drift, double volatility) {
    return ReturnProcess(BrownianDrift{drift, volatility});
  }

  const Params& params() const { return params_; }
  bool is_deterministic() const { return std::holds_alternative<Deterministic>(params_); }
  std::string name() const;

  /// phi(z) = ln E[exp(-z xi(1))], kInfinity when the transform diverges.
  double laplace_exponent(double z) const;

 private:
  Params params_;
};

/// Forward simulator of one return path; times must be requested in
/// nondecreasing order. Increments over disjoint intervals are independent
/// and exact in law.
class ReturnPath {
 public:
  explicit ReturnPath(const ReturnProcess& process) : process_(&process) {}

  void reset() {
    time_ = 0.0;
    value_ = 0.0;
  }
  double advance_to(double t, Engine& g);
  double value() const { return value_; }

 private:
  const ReturnProcess* process_;
  double time_ = 0.0;
  double value_ = 0.0;
};

/// xi at the given sorted nonnegative times, xi(0) = 0.
std::vector<double> simulate_return_path(const ReturnProcess& process, std::span<const double> times, Engine& g);

struct PathBounds {
  double c1 = 0.0;  // inf xi >= -c1
  double c2 = 0.0;  // sup xi <= c2
  bool empirical = false;
  std::string note;
};

/// Constants C2 >= C1 >= 0 bounding xi on [0, T]. Exact for deterministic
/// returns; otherwise the (1 - 1e-4)-quantiles of path extremes over n paths
/// on a `steps`-point grid, flagged as empirical.
PathBounds check_path_bounds(const ReturnProcess& process, double horizon, std::uint64_t paths, Engine& g,
                             std::size_t steps = 1024);

struct MomentCheck {
  double alpha = 0.0;
  double k1 = 0.0;
  double k2 = 0.0;
  bool small_index = false;  // alpha < 1 variant
  double phi_k1 = 0.0;
  double phi_k2 = 0.0;
  /// E[exp(phi(k) T_1)], so that E[exp(-k xi(T_i))] = q^i.
  double q1 = 0.0;
  double q2 = 0.0;
  /// Geometric ratios of the series terms (q^(1/k) for alpha >= 1, q else).
  double ratio1 = 0.0;
  double ratio2 = 0.0;
  std::vector<double> partial_sums;
  /// r1/(1-r1) + r2/(1-r2): upper bound on the series when both ratios < 1.
  double certificate = kInfinity;
  bool verdict = false;
};

/// Moment condition on exp(-xi(T_i)) for the global-horizon asymptotics,
/// certified by the geometric series of a Levy return process. Requires
/// 0 < k1 < alpha < k2 (and k2 < 1 when alpha < 1).
MomentCheck check_moment_condition(const ReturnProcess& process, const RenewalModel& renewal, double alpha,
                                   double k1, double k2, std::size_t terms = 200);

/// Default exponent pair for check_moment_condition.
std::pair<double, double> default_exponents(double alpha);

}  // namespace heavyrisk
