#include "heavyrisk/claim_vectors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "heavyrisk/error.hpp"
#include "heavyrisk/stats.hpp"

namespace heavyrisk {
namespace {

constexpr double kNormTolerance = 1e-12;
constexpr std::uint64_t kChunk = 1u << 15;
constexpr std::uint64_t kTailProbRole = 0x7A11;
constexpr std::uint64_t kTaiRole = 0x7A12;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double clamp_open(double u) {
  constexpr double lo = 0x1.0p-60;
  constexpr double hi = 1.0 - 0x1.0p-53;
  return std::clamp(u, lo, hi);
}

}  // namespace

ClaimModel ClaimModel::spectral(UnivariateLaw radial, std::vector<SpectralAtom> atoms) {
  if (atoms.empty()) throw InvalidArgument("spectral measure: at least one atom required");
  const std::size_t d = atoms.front().direction.size();
  if (d == 0) throw InvalidArgument("spectral measure: empty atom");
  double total = 0.0;
  for (const auto& a : atoms) {
    if (a.direction.size() != d) throw InvalidArgument("spectral measure: atoms differ in dimension");
    if (!(a.weight > 0.0) || !std::isfinite(a.weight)) throw InvalidArgument("spectral measure: weights must be positive");
    double norm2 = 0.0;
    bool positive = false;
    for (double v : a.direction) {
      if (!(v >= 0.0) || !std::isfinite(v))
        throw InvalidArgument("spectral measure: atoms must lie in the nonnegative orthant");
      positive = positive || v > 0.0;
      norm2 += v * v;
    }
    if (!positive) throw InvalidArgument("spectral measure: atom must not be the zero vector");
    if (std::abs(std::sqrt(norm2) - 1.0) > kNormTolerance)
      throw InvalidArgument("spectral measure: atoms must have unit norm");
    total += a.weight;
  }
  if (std::abs(total - 1.0) > kNormTolerance)
    throw InvalidArgument("spectral measure: weights must sum to 1 (got " + std::to_string(total) + ")");

  ClaimModel m;
  m.mode_ = ClaimMode::Spectral;
  m.dimension_ = d;
  m.radial_ = std::move(radial);
  m.atoms_ = std::move(atoms);
  double acc = 0.0;
  for (const auto& a : m.atoms_) m.cumulative_.push_back(acc += a.weight);
  m.cumulative_.back() = 1.0;
  return m;
}

ClaimModel ClaimModel::margin_copula(std::vector<UnivariateLaw> margins, ComponentCopula copula) {
  if (margins.empty()) throw InvalidArgument("margin copula: at least one margin required");
  const std::size_t d = margins.size();
  ClaimModel m;
  m.mode_ = ClaimMode::MarginCopula;
  m.dimension_ = d;
  m.margins_ = std::move(margins);
  if (const auto* gc = std::get_if<GaussianCopula>(&copula)) {
    const Eigen::MatrixXd& c = gc->correlation;
    if (c.rows() != static_cast<Eigen::Index>(d) || c.cols() != static_cast<Eigen::Index>(d))
      throw InvalidArgument("gaussian copula: correlation matrix must be d x d");
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
      if (std::abs(c(i, i) - 1.0) > kNormTolerance)
        throw InvalidArgument("gaussian copula: correlation matrix needs a unit diagonal");
      for (Eigen::Index j = 0; j < c.cols(); ++j) {
        if (std::abs(c(i, j) - c(j, i)) > kNormTolerance)
          throw InvalidArgument("gaussian copula: correlation matrix must be symmetric");
        if (i != j && !(c(i, j) > -1.0 && c(i, j) < 1.0))
          throw InvalidArgument("gaussian copula: off-diagonal correlations must lie in (-1, 1)");
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() != Eigen::Success)
      throw InvalidArgument("gaussian copula: correlation matrix is not positive definite");
    m.cholesky_ = llt.matrixL();
  }
  m.copula_ = std::move(copula);
  return m;
}

double ClaimModel::tail_index() const {
  if (mode_ != ClaimMode::Spectral || !radial_ || !radial_->is_pareto())
    throw AssumptionViolation("tail index defined only for spectral claims with a Pareto radius");
  return std::get<Pareto>(radial_->params()).alpha;
}

InterClaimCoupling gaussian_radial_coupling(double rho) {
  if (!(rho > -1.0 && rho < 1.0)) throw InvalidArgument("radial coupling: rho must lie strictly inside (-1, 1)");
  return GaussianRadialCoupling{rho};
}

bool is_tail_independent(const InterClaimCoupling& coupling) {
  return !std::holds_alternative<ComonotoneRadii>(coupling);
}

ClaimSequence::ClaimSequence(const ClaimModel& model, const InterClaimCoupling& coupling)
    : model_(&model), coupling_(coupling), scratch_(model.dimension()) {
  if (const auto* gc = std::get_if<GaussianRadialCoupling>(&coupling_)) gaussian_radial_coupling(gc->rho);
  if (model.mode() == ClaimMode::MarginCopula && !std::holds_alternative<IidCoupling>(coupling_))
    throw InvalidArgument("claim coupling: margin-copula claims support only IID coupling");
}

double ClaimSequence::radial_driver(Engine& g) {
  const std::uint64_t pos = position_++;
  if (std::holds_alternative<IidCoupling>(coupling_)) return uniform_open(g);
  if (const auto* gc = std::get_if<GaussianRadialCoupling>(&coupling_)) {
    const double e = standard_normal(g);
    const double z = pos == 0 ? e : gc->rho * previous_normal_ + std::sqrt(1.0 - gc->rho * gc->rho) * e;
    previous_normal_ = z;
    return clamp_open(normal_cdf(z));
  }
  if (pos == 0) first_driver_ = uniform_open(g);
  return first_driver_;
}

void ClaimSequence::next(Engine& g, std::span<double> out) {
  const ClaimModel& m = *model_;
  if (out.size() != m.dimension_) throw InvalidArgument("claim sequence: output span has wrong dimension");
  if (m.mode_ == ClaimMode::Spectral) {
    const double r = m.radial_->quantile(radial_driver(g));
    const double pick = uniform01(g);
    const auto k = static_cast<std::size_t>(
        std::upper_bound(m.cumulative_.begin(), m.cumulative_.end(), pick) - m.cumulative_.begin());
    const auto& dir = m.atoms_[std::min(k, m.atoms_.size() - 1)].direction;
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = r * dir[j];
    return;
  }
  ++position_;
  const std::size_t d = m.dimension_;
  if (std::holds_alternative<IndependentCopula>(m.copula_)) {
    for (std::size_t j = 0; j < d; ++j) out[j] = m.margins_[j].quantile(uniform_open(g));
  } else if (std::holds_alternative<ComonotoneCopula>(m.copula_)) {
    const double u = uniform_open(g);
    for (std::size_t j = 0; j < d; ++j) out[j] = m.margins_[j].quantile(u);
  } else {
    for (std::size_t j = 0; j < d; ++j) scratch_[j] = standard_normal(g);
    for (std::size_t i = 0; i < d; ++i) {
      double z = 0.0;
      for (std::size_t j = 0; j <= i; ++j) z += m.cholesky_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * scratch_[j];
      out[i] = m.margins_[i].quantile(clamp_open(normal_cdf(z)));
    }
  }
}

std::vector<double> sample_claims(const ClaimModel& model, const InterClaimCoupling& coupling, Engine& g,
                                  std::size_t n) {
  if (n == 0) throw InvalidArgument("sample_claims: n must be at least 1");
  ClaimSequence seq(model, coupling);
  const std::size_t d = model.dimension();
  std::vector<double> out(n * d);
  for (std::size_t i = 0; i < n; ++i) seq.next(g, std::span<double>(out.data() + i * d, d));
  return out;
}

double spectral_tail(const ClaimModel& model, const RareSet& set, double x) {
  if (model.mode() != ClaimMode::Spectral) throw InvalidArgument("spectral_tail: spectral mode required");
  if (set.dimension() != model.dimension()) throw InvalidArgument("spectral_tail: dimension mismatch");
  KahanSum sum;
  for (const auto& a : model.atoms()) {
    const double y = set.y_a(a.direction);
    if (y > 0.0) sum.add(a.weight * model.radial()->tail(x / y));
  }
  return sum.value();
}

double pre_asymptotic_threshold(const ClaimModel& model, const RareSet& set) {
  if (model.mode() != ClaimMode::Spectral || !model.radial()->is_pareto()) return 0.0;
  double ymax = 0.0;
  for (const auto& a : model.atoms()) ymax = std::max(ymax, set.y_a(a.direction));
  return std::get<Pareto>(model.radial()->params()).scale * ymax;
}

TailProbability tail_prob(const ClaimModel& model, const RareSet& set, double x, const McOptions& mc) {
  if (!(x > 0.0)) throw InvalidArgument("tail_prob: x must be positive");
  if (set.dimension() != model.dimension()) throw InvalidArgument("tail_prob: dimension mismatch");
  if (model.mode() == ClaimMode::Spectral) {
    const double xmin = pre_asymptotic_threshold(model, set);
    if (x < xmin) throw PreAsymptoticError("x = " + std::to_string(x) + " below x_min = " + std::to_string(xmin));
    const double p = spectral_tail(model, set, x);
    return {p, p, p, true, 0};
  }
  if (mc.samples == 0) throw InvalidArgument("tail_prob: Monte Carlo sample count must be positive");
  const std::size_t d = model.dimension();
  auto hits = run_chunks<std::uint64_t>(mc.samples, kChunk, mc.threads,
                                        [&](std::uint64_t chunk, std::uint64_t, std::uint64_t count) {
                                          Engine g = make_engine(mc.seed, kTailProbRole, chunk);
                                          ClaimSequence seq(model, IidCoupling{});
                                          std::vector<double> v(d);
                                          std::uint64_t h = 0;
                                          for (std::uint64_t i = 0; i < count; ++i) {
                                            seq.reset();
                                            seq.next(g, v);
                                            h += set.contains(x, v) ? 1 : 0;
                                          }
                                          return h;
                                        });
  const std::uint64_t total = std::accumulate(hits.begin(), hits.end(), std::uint64_t{0});
  const Interval ci = wilson_interval(total, mc.samples);
  return {static_cast<double>(total) / static_cast<double>(mc.samples), ci.lo, ci.hi, false, mc.samples};
}

TaiCurve check_tai(const ClaimModel& model, const InterClaimCoupling& coupling, const RareSet& set,
                   std::span<const double> thresholds, const McOptions& mc) {
  if (mc.samples < 1'000'000) throw InvalidArgument("check_tai: at least 1e6 claim pairs required");
  if (thresholds.empty()) throw InvalidArgument("check_tai: empty threshold grid");
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] > 0.0)) throw InvalidArgument("check_tai: thresholds must be positive");
    if (i > 0 && !(thresholds[i] > thresholds[i - 1])) throw InvalidArgument("check_tai: thresholds must increase");
  }
  const std::size_t k = thresholds.size();
  const std::size_t d = model.dimension();

  struct Counts {
    std::vector<std::uint64_t> first, second, joint;
  };
  auto parts = run_chunks<Counts>(mc.samples, kChunk, mc.threads,
                                  [&](std::uint64_t chunk, std::uint64_t, std::uint64_t count) {
                                    Engine g = make_engine(mc.seed, kTaiRole, chunk);
                                    ClaimSequence seq(model, coupling);
                                    std::vector<double> a(d), b(d);
                                    Counts c{std::vector<std::uint64_t>(k), std::vector<std::uint64_t>(k),
                                             std::vector<std::uint64_t>(k)};
                                    for (std::uint64_t i = 0; i < count; ++i) {
                                      seq.reset();
                                      seq.next(g, a);
                                      seq.next(g, b);
                                      const double y1 = set.y_a(a), y2 = set.y_a(b);
                                      for (std::size_t j = 0; j < k; ++j) {
                                        const bool e1 = y1 > thresholds[j], e2 = y2 > thresholds[j];
                                        c.first[j] += e1;
                                        c.second[j] += e2;
                                        c.joint[j] += e1 && e2;
                                      }
                                    }
                                    return c;
                                  });

  TaiCurve out;
  out.thresholds.assign(thresholds.begin(), thresholds.end());
  const double n = static_cast<double>(mc.samples);
  for (std::size_t j = 0; j < k; ++j) {
    std::uint64_t first = 0, second = 0, joint = 0;
    for (const auto& p : parts) {
      first += p.first[j];
      second += p.second[j];
      joint += p.joint[j];
    }
    if (j == 0 && joint < 50)
      throw InsufficientData("check_tai: fewer than 50 joint exceedances at the smallest threshold");
    const double cond = second > 0 ? static_cast<double>(joint) / static_cast<double>(second) : 0.0;
    out.conditional.push_back(cond);
    out.conditional_se.push_back(second > 0 ? std::sqrt(cond * (1.0 - cond) / static_cast<double>(second)) : 0.0);
    const double marg = static_cast<double>(first + second) / (2.0 * n);
    out.marginal.push_back(marg);
    out.marginal_se.push_back(std::sqrt(marg * (1.0 - marg) / (2.0 * n)));
    out.joint_counts.push_back(joint);
  }
  out.strictly_decreasing = true;
  for (std::size_t j = 1; j < k; ++j)
    out.strictly_decreasing = out.strictly_decreasing && out.conditional[j] < out.conditional[j - 1];
  out.violation = !out.strictly_decreasing || out.conditional.back() > 0.5;
  return out;
}

}  // namespace heavyrisk
