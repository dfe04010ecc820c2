#include "heavyrisk/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "heavyrisk/error.hpp"

namespace heavyrisk {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool ok, const char* what) {
  if (!ok) throw InvalidArgument(what);
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

double normal_quantile(double u) { return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u); }

// E[g(Z)] = int_0^1 g(Q(u)) du; used where no closed form exists.
template <class F>
double expect_by_quantile(const UnivariateLaw& law, F&& g) {
  thread_local boost::math::quadrature::tanh_sinh<double> integrator;
  return integrator.integrate([&](double u) { return g(law.quantile(u)); }, 0.0, 1.0);
}

}  // namespace

UnivariateLaw::UnivariateLaw(Params params) : params_(std::move(params)) {
  std::visit(Overloaded{
                 [](const Pareto& p) {
                   require(finite_positive(p.alpha), "pareto: alpha must be positive");
                   require(finite_positive(p.scale), "pareto: scale must be positive");
                 },
                 [](const LogNormal& p) {
                   require(std::isfinite(p.location), "lognormal: location must be finite");
                   require(finite_positive(p.scale), "lognormal: scale must be positive");
                 },
                 [](const Exponential& p) { require(finite_positive(p.rate), "exponential: rate must be positive"); },
                 [](const Gamma& p) {
                   require(finite_positive(p.shape), "gamma: shape must be positive");
                   require(finite_positive(p.rate), "gamma: rate must be positive");
                 },
                 [](const Weibull& p) {
                   require(finite_positive(p.shape), "weibull: shape must be positive");
                   require(finite_positive(p.scale), "weibull: scale must be positive");
                 },
                 [](const Uniform& p) {
                   require(std::isfinite(p.lower) && std::isfinite(p.upper) && p.lower >= 0.0 && p.upper > p.lower,
                           "uniform: need 0 <= lower < upper");
                 },
                 [](const Degenerate& p) {
                   require(std::isfinite(p.value) && p.value >= 0.0, "degenerate: value must be nonnegative");
                 },
             },
             params_);
}

std::string UnivariateLaw::name() const {
  std::ostringstream os;
  std::visit(Overloaded{
                 [&](const Pareto& p) { os << "Pareto(" << p.alpha << ", " << p.scale << ")"; },
                 [&](const LogNormal& p) { os << "LogNormal(" << p.location << ", " << p.scale << ")"; },
                 [&](const Exponential& p) { os << "Exponential(" << p.rate << ")"; },
                 [&](const Gamma& p) { os << "Gamma(" << p.shape << ", " << p.rate << ")"; },
                 [&](const Weibull& p) { os << "Weibull(" << p.shape << ", " << p.scale << ")"; },
                 [&](const Uniform& p) { os << "Uniform(" << p.lower << ", " << p.upper << ")"; },
                 [&](const Degenerate& p) { os << "Degenerate(" << p.value << ")"; },
             },
             params_);
  return os.str();
}

double UnivariateLaw::sample(Engine& g) const {
  return std::visit(Overloaded{
                        [&](const Pareto& p) {
                          const double u = uniform_open(g);
                          if (p.alpha == 2.0) return p.scale / std::sqrt(u);
                          return p.scale * std::pow(u, -1.0 / p.alpha);
                        },
                        [&](const LogNormal& p) { return std::exp(p.location + p.scale * standard_normal(g)); },
                        [&](const Exponential& p) { return -std::log(uniform_open(g)) / p.rate; },
                        [&](const Gamma& p) { return std::gamma_distribution<double>(p.shape, 1.0 / p.rate)(g); },
                        [&](const Weibull& p) { return p.scale * std::pow(-std::log(uniform_open(g)), 1.0 / p.shape); },
                        [&](const Uniform& p) { return p.lower + (p.upper - p.lower) * uniform01(g); },
                        [&](const Degenerate& p) { return p.value; },
                    },
                    params_);
}

std::vector<double> UnivariateLaw::sample(Engine& g, std::size_t n) const {
  if (n == 0) throw InvalidArgument("sample: n must be at least 1");
  std::vector<double> out(n);
  for (double& v : out) v = sample(g);
  return out;
}

double UnivariateLaw::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw InvalidArgument("quantile: u must lie in (0, 1)");
  return std::visit(Overloaded{
                        [&](const Pareto& p) {
                          const double tail = 1.0 - u;
                          if (p.alpha == 2.0) return p.scale / std::sqrt(tail);
                          return p.scale * std::pow(tail, -1.0 / p.alpha);
                        },
                        [&](const LogNormal& p) { return std::exp(p.location + p.scale * normal_quantile(u)); },
                        [&](const Exponential& p) { return -std::log1p(-u) / p.rate; },
                        [&](const Gamma& p) { return boost::math::gamma_p_inv(p.shape, u) / p.rate; },
                        [&](const Weibull& p) { return p.scale * std::pow(-std::log1p(-u), 1.0 / p.shape); },
                        [&](const Uniform& p) { return p.lower + (p.upper - p.lower) * u; },
                        [&](const Degenerate& p) { return p.value; },
                    },
                    params_);
}

double UnivariateLaw::tail(double x) const {
  return std::visit(Overloaded{
                        [&](const Pareto& p) { return x < p.scale ? 1.0 : std::pow(x / p.scale, -p.alpha); },
                        [&](const LogNormal& p) {
                          if (x <= 0.0) return 1.0;
                          return 0.5 * std::erfc((std::log(x) - p.location) / (p.scale * std::sqrt(2.0)));
                        },
                        [&](const Exponential& p) { return x <= 0.0 ? 1.0 : std::exp(-p.rate * x); },
                        [&](const Gamma& p) { return x <= 0.0 ? 1.0 : boost::math::gamma_q(p.shape, p.rate * x); },
                        [&](const Weibull& p) { return x <= 0.0 ? 1.0 : std::exp(-std::pow(x / p.scale, p.shape)); },
                        [&](const Uniform& p) {
                          if (x < p.lower) return 1.0;
                          if (x >= p.upper) return 0.0;
                          return (p.upper - x) / (p.upper - p.lower);
                        },
                        [&](const Degenerate& p) { return x < p.value ? 1.0 : 0.0; },
                    },
                    params_);
}

double UnivariateLaw::moment(double q) const {
  if (!(q >= 0.0)) throw InvalidArgument("moment: order must be nonnegative");
  if (q == 0.0) return 1.0;
  return std::visit(Overloaded{
                        [&](const Pareto& p) {
                          return q < p.alpha ? p.alpha * std::pow(p.scale, q) / (p.alpha - q) : kInfinity;
                        },
                        [&](const LogNormal& p) { return std::exp(q * p.location + 0.5 * q * q * p.scale * p.scale); },
                        [&](const Exponential& p) { return std::tgamma(q + 1.0) / std::pow(p.rate, q); },
                        [&](const Gamma& p) {
                          return std::exp(std::lgamma(p.shape + q) - std::lgamma(p.shape)) / std::pow(p.rate, q);
                        },
                        [&](const Weibull& p) { return std::pow(p.scale, q) * std::tgamma(1.0 + q / p.shape); },
                        [&](const Uniform& p) {
                          return (std::pow(p.upper, q + 1.0) - std::pow(p.lower, q + 1.0)) /
                                 ((q + 1.0) * (p.upper - p.lower));
                        },
                        [&](const Degenerate& p) { return std::pow(p.value, q); },
                    },
                    params_);
}

double UnivariateLaw::mgf(double s) const {
  if (s == 0.0) return 1.0;
  auto numeric = [&] { return expect_by_quantile(*this, [s](double z) { return std::exp(s * z); }); };
  return std::visit(Overloaded{
                        [&](const Pareto&) { return s > 0.0 ? kInfinity : numeric(); },
                        [&](const LogNormal&) { return s > 0.0 ? kInfinity : numeric(); },
                        [&](const Exponential& p) { return s < p.rate ? p.rate / (p.rate - s) : kInfinity; },
                        [&](const Gamma& p) { return s < p.rate ? std::pow(p.rate / (p.rate - s), p.shape) : kInfinity; },
                        [&](const Weibull& p) {
                          if (p.shape < 1.0 && s > 0.0) return kInfinity;
                          if (p.shape == 1.0) return s < 1.0 / p.scale ? 1.0 / (1.0 - s * p.scale) : kInfinity;
                          return numeric();
                        },
                        [&](const Uniform& p) {
                          return (std::exp(s * p.upper) - std::exp(s * p.lower)) / (s * (p.upper - p.lower));
                        },
                        [&](const Degenerate& p) { return std::exp(s * p.value); },
                    },
                    params_);
}

double UnivariateLaw::support_lower() const {
  return std::visit(Overloaded{
                        [](const Pareto& p) { return p.scale; },
                        [](const Uniform& p) { return p.lower; },
                        [](const Degenerate& p) { return p.value; },
                        [](const auto&) { return 0.0; },
                    },
                    params_);
}

bool UnivariateLaw::atom_at_lower() const { return std::holds_alternative<Degenerate>(params_); }

double hill_estimator(std::span<const double> samples, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction < 1.0)) throw InvalidArgument("hill: tail fraction must lie in (0, 1)");
  const auto k = static_cast<std::size_t>(std::floor(tail_fraction * static_cast<double>(samples.size())));
  if (k < 2) throw InsufficientData("hill: fewer than 2 order statistics in the tail");
  std::vector<double> top(samples.begin(), samples.end());
  std::nth_element(top.begin(), top.begin() + static_cast<std::ptrdiff_t>(k), top.end(), std::greater<>());
  const double pivot = top[k];
  if (!(pivot > 0.0)) throw InsufficientData("hill: tail threshold is not positive");
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += std::log(top[i] / pivot);
  return static_cast<double>(k) / sum;
}

namespace {

struct SortedSample {
  std::vector<double> v;

  explicit SortedSample(std::span<const double> s) : v(s.begin(), s.end()) { std::sort(v.begin(), v.end()); }

  std::size_t count_above(double x) const {
    return static_cast<std::size_t>(v.end() - std::upper_bound(v.begin(), v.end(), x));
  }
  double upper_quantile(double q) const {
    const auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
    return v[v.size() - std::max<std::size_t>(k, 1)];
  }
};

constexpr std::size_t kMinSamples = 10000;
constexpr std::size_t kMinExceedances = 100;

void require_tail(const SortedSample& s) {
  if (s.v.size() < kMinSamples) throw InsufficientData("tail diagnostic: at least 1e4 samples required");
  if (s.count_above(s.upper_quantile(0.01)) < kMinExceedances)
    throw InsufficientData("tail diagnostic: fewer than 100 exceedances at the upper 1% threshold");
}

}  // namespace

TailDiagnostics estimate_matuszewska(std::span<const double> samples, std::span<const double> v_grid) {
  if (v_grid.empty()) throw InvalidArgument("matuszewska: empty v-grid");
  for (double v : v_grid)
    if (!(v > 1.0) || !std::isfinite(v)) throw InvalidArgument("matuszewska: v-grid entries must exceed 1");
  const SortedSample s(samples);
  require_tail(s);

  TailDiagnostics out;
  out.sample_size = s.v.size();
  out.tail_count = s.count_above(s.upper_quantile(0.01));

  double index = 0.0;
  for (double v : v_grid) {
    // liminf over x approximated by the minimum across the threshold ladder.
    double lower = kInfinity;
    for (double q : kThresholdLadder) {
      const double x = s.upper_quantile(q);
      const std::size_t base = s.count_above(x);
      if (base < kMinExceedances) continue;
      lower = std::min(lower, static_cast<double>(s.count_above(v * x)) / static_cast<double>(base));
    }
    out.lower_ratio.push_back(lower);
    const double j = lower > 0.0 ? -std::log(lower) / std::log(v) : kInfinity;
    index = std::max(index, j);
  }
  out.matuszewska_upper = index > 50.0 ? kInfinity : index;

  out.hill_index = hill_estimator(samples, 0.01);
  const double half = 1.959963984540054 * out.hill_index / std::sqrt(static_cast<double>(out.tail_count));
  out.hill_ci_lo = out.hill_index - half;
  out.hill_ci_hi = out.hill_index + half;
  return out;
}

DominatedVariationCheck check_dominated_variation(std::span<const double> samples, double b) {
  if (!(b > 0.0 && b < 1.0)) throw InvalidArgument("dominated variation: b must lie in (0, 1)");
  const SortedSample s(samples);
  require_tail(s);

  DominatedVariationCheck out;
  for (double q : kThresholdLadder) {
    const double x = s.upper_quantile(q);
    const std::size_t base = s.count_above(x);
    if (base < kMinExceedances) continue;
    out.thresholds.push_back(x);
    out.ratios.push_back(static_cast<double>(s.count_above(b * x)) / static_cast<double>(base));
  }
  out.limsup = *std::max_element(out.ratios.begin(), out.ratios.end());
  bool increasing = out.ratios.size() >= 2;
  for (std::size_t i = 1; i < out.ratios.size(); ++i) increasing = increasing && out.ratios[i] > out.ratios[i - 1];
  // Sampling noise at the top rung is a few percent; demand a clear rise.
  out.growing = increasing && out.ratios.back() > 1.25 * out.ratios.front();
  return out;
}

}  // namespace heavyrisk
