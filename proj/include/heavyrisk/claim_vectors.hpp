#pragma once

// Claim vector laws: standard MRV via polar decomposition X = R * Theta with
// a discrete spectral measure, or arbitrary margins joined by a copula.
// Consecutive claims can be coupled through their radii.

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "heavyrisk/distributions.hpp"
#include "heavyrisk/random.hpp"
#include "heavyrisk/rare_sets.hpp"

namespace heavyrisk {

struct SpectralAtom {
  std::vector<double> direction;  // Euclidean unit norm, nonnegative, not all zero
  double weight = 0.0;
};

struct IndependentCopula {};
struct ComonotoneCopula {};
struct GaussianCopula {
  Eigen::MatrixXd correlation;
};
using ComponentCopula = std::variant<IndependentCopula, GaussianCopula, ComonotoneCopula>;

enum class ClaimMode { Spectral, MarginCopula };

class ClaimModel {
 public:
  /// X = R * Theta, R ~ radial, Theta drawn from the weighted atoms.
  static ClaimModel spectral(UnivariateLaw radial, std::vector<SpectralAtom> atoms);
  /// X_j = Q_j(U_j) with (U_1..U_d) drawn from the copula.
  static ClaimModel margin_copula(std::vector<UnivariateLaw> margins, ComponentCopula copula);

  ClaimMode mode() const { return mode_; }
  std::size_t dimension() const { return dimension_; }
  const std::optional<UnivariateLaw>& radial() const { return radial_; }
  const std::vector<SpectralAtom>& atoms() const { return atoms_; }
  const std::vector<UnivariateLaw>& margins() const { return margins_; }
  const ComponentCopula& copula() const { return copula_; }

  /// Regular-variation index of the radial law (spectral mode, Pareto radius).
  double tail_index() const;

 private:
  friend class ClaimSequence;
  ClaimModel() = default;

  ClaimMode mode_ = ClaimMode::Spectral;
  std::size_t dimension_ = 0;
  std::optional<UnivariateLaw> radial_;
  std::vector<SpectralAtom> atoms_;
  std::vector<double> cumulative_;  // atom selection
  std::vector<UnivariateLaw> margins_;
  ComponentCopula copula_;
  Eigen::MatrixXd cholesky_;
};

struct IidCoupling {};
/// Gaussian copula with lag-1 correlation rho on the uniform drivers of
/// consecutive radii; tail asymptotically independent for |rho| < 1.
struct GaussianRadialCoupling {
  double rho = 0.0;
};
/// All radii in a sequence equal. Not TAI; used only as a negative control.
struct ComonotoneRadii {};
using InterClaimCoupling = std::variant<IidCoupling, GaussianRadialCoupling, ComonotoneRadii>;

InterClaimCoupling gaussian_radial_coupling(double rho);
bool is_tail_independent(const InterClaimCoupling& coupling);

/// Stateful generator of one claim sequence X(1), X(2), ...
class ClaimSequence {
 public:
  ClaimSequence(const ClaimModel& model, const InterClaimCoupling& coupling);

  /// Starts a fresh, independent sequence.
  void reset() { position_ = 0; }
  void next(Engine& g, std::span<double> out);

 private:
  double radial_driver(Engine& g);

  const ClaimModel* model_;
  InterClaimCoupling coupling_;
  std::uint64_t position_ = 0;
  double previous_normal_ = 0.0;
  double first_driver_ = 0.0;
  std::vector<double> scratch_;
};

/// n consecutive claims of one sequence, row-major n x d.
std::vector<double> sample_claims(const ClaimModel& model, const InterClaimCoupling& coupling, Engine& g,
                                  std::size_t n);

struct TailProbability {
  double value = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  bool exact = false;
  std::uint64_t samples = 0;
};

struct McOptions {
  std::uint64_t samples = 1'000'000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// sum_k w_k * Vbar(x / y_a(atom_k)) with zero terms for y_a = 0. No regime
/// check; exact for any radial law in spectral mode.
double spectral_tail(const ClaimModel& model, const RareSet& set, double x);

/// Smallest x at which the Pareto closed form uses only the power-law branch:
/// scale * max_k y_a(atom_k). Zero for non-Pareto radial laws.
double pre_asymptotic_threshold(const ClaimModel& model, const RareSet& set);

/// P[X in xA] = P[Y_A > x]. Closed form in spectral mode (throws
/// PreAsymptoticError below the threshold); Monte Carlo with a 95% Wilson
/// interval in margin-copula mode.
TailProbability tail_prob(const ClaimModel& model, const RareSet& set, double x, const McOptions& mc = {});

struct TaiCurve {
  std::vector<double> thresholds;
  std::vector<double> conditional;  // P[Y(1) > x | Y(2) > x]
  std::vector<double> conditional_se;
  std::vector<double> marginal;  // P[Y > x] from the same draws
  std::vector<double> marginal_se;
  std::vector<std::uint64_t> joint_counts;
  bool strictly_decreasing = false;
  /// Not strictly decreasing, or still above 0.5 at the top threshold.
  bool violation = false;
};

/// Empirical tail-asymptotic-independence curve over consecutive claim pairs.
/// Requires >= 1e6 pairs and >= 50 joint exceedances at the smallest threshold.
TaiCurve check_tai(const ClaimModel& model, const InterClaimCoupling& coupling, const RareSet& set,
                   std::span<const double> thresholds, const McOptions& mc);

}  // namespace heavyrisk
