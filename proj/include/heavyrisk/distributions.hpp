#pragma once

// Univariate laws used for claim radii, interarrival times, jump sizes and
// scalar factors, plus empirical heavy-tail diagnostics.

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "heavyrisk/random.hpp"

namespace heavyrisk {

/// Support [scale, inf), tail (x/scale)^-alpha.
struct Pareto {
  double alpha = 1.0;
  double scale = 1.0;
};
/// exp(N(location, scale^2)).
struct LogNormal {
  double location = 0.0;
  double scale = 1.0;
};
struct Exponential {
  double rate = 1.0;
};
struct Gamma {
  double shape = 1.0;
  double rate = 1.0;
};
/// Tail exp(-(x/scale)^shape); shape < 1 gives a subexponential, non-D law.
struct Weibull {
  double shape = 1.0;
  double scale = 1.0;
};
struct Uniform {
  double lower = 0.0;
  double upper = 1.0;
};
/// Point mass at value.
struct Degenerate {
  double value = 0.0;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

class UnivariateLaw {
 public:
  using Params = std::variant<Pareto, LogNormal, Exponential, Gamma, Weibull, Uniform, Degenerate>;

  /// Validates parameters; throws InvalidArgument on violation.
  explicit UnivariateLaw(Params params);

  static UnivariateLaw pareto(double alpha, double scale = 1.0) { return UnivariateLaw(Pareto{alpha, scale}); }
  static UnivariateLaw lognormal(double location, double scale) { return UnivariateLaw(LogNormal{location, scale}); }
  static UnivariateLaw exponential(double rate) { return UnivariateLaw(Exponential{rate}); }
  static UnivariateLaw gamma(double shape, double rate) { return UnivariateLaw(Gamma{shape, rate}); }
  static UnivariateLaw weibull(double shape, double scale) { return UnivariateLaw(Weibull{shape, scale}); }
  static UnivariateLaw uniform(double lower, double upper) { return UnivariateLaw(Uniform{lower, upper}); }
  static UnivariateLaw degenerate(double value) { return UnivariateLaw(Degenerate{value}); }

  const Params& params() const { return params_; }
  std::string name() const;

  double sample(Engine& g) const;
  std::vector<double> sample(Engine& g, std::size_t n) const;

  /// Inverse CDF on (0, 1).
  double quantile(double u) const;
  /// P[Z > x]; nonincreasing and right-continuous.
  double tail(double x) const;
  double cdf(double x) const { return 1.0 - tail(x); }

  /// E[Z^p] for p >= 0; kInfinity when the moment diverges.
  double moment(double p) const;
  double mean() const { return moment(1.0); }
  /// E[exp(s Z)]; kInfinity when it diverges.
  double mgf(double s) const;

  /// Left end of the support, and whether it carries an atom.
  double support_lower() const;
  bool atom_at_lower() const;

  bool is_exponential() const { return std::holds_alternative<Exponential>(params_); }
  bool is_pareto() const { return std::holds_alternative<Pareto>(params_); }

 private:
  Params params_;
};

/// Upper-quantile levels at which empirical liminf/limsup proxies are taken.
inline constexpr double kThresholdLadder[] = {0.05, 0.01, 0.001};

struct TailDiagnostics {
  /// Estimate of the upper Matuszewska index J+; kInfinity when above 50.
  double matuszewska_upper = 0.0;
  /// Hill estimate of the tail index on the top 1% order statistics.
  double hill_index = 0.0;
  double hill_ci_lo = 0.0;
  double hill_ci_hi = 0.0;
  std::size_t sample_size = 0;
  std::size_t tail_count = 0;
  /// Empirical lower tail ratio V_*(v) per v-grid entry.
  std::vector<double> lower_ratio;
};

/// Hill estimator of alpha using the largest `tail_fraction` of samples.
double hill_estimator(std::span<const double> samples, double tail_fraction = 0.01);

/// Empirical upper Matuszewska index. Requires >= 1e4 samples and at least
/// 100 exceedances of the upper-1% threshold; v-grid entries must exceed 1.
TailDiagnostics estimate_matuszewska(std::span<const double> samples, std::span<const double> v_grid);

struct DominatedVariationCheck {
  std::vector<double> thresholds;
  std::vector<double> ratios;  // V(bx)/V(x) per threshold on the ladder
  double limsup = 0.0;
  /// Ratios strictly increase up the ladder: the law looks outside class D.
  bool growing = false;
};

DominatedVariationCheck check_dominated_variation(std::span<const double> samples, double b);

}  // namespace heavyrisk
