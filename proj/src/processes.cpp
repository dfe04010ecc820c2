#include "heavyrisk/processes.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "heavyrisk/error.hpp"

namespace heavyrisk {

RenewalModel::RenewalModel(UnivariateLaw interarrival) : interarrival_(std::move(interarrival)) {
  if (interarrival_.atom_at_lower() && interarrival_.support_lower() <= 0.0)
    throw InvalidArgument("renewal: interarrival law has an atom at 0");
}

std::optional<double> RenewalModel::poisson_rate() const {
  if (const auto* e = std::get_if<Exponential>(&interarrival_.params())) return e->rate;
  return std::nullopt;
}

std::vector<double> RenewalModel::simulate_arrivals(double horizon, Engine& g) const {
  if (!(horizon > 0.0)) throw InvalidArgument("simulate_arrivals: horizon must be positive");
  std::vector<double> out;
  double t = 0.0;
  for (;;) {
    t += interarrival_.sample(g);
    if (t > horizon) break;
    out.push_back(t);
  }
  return out;
}

bool RenewalModel::in_lambda(double t) const {
  const double lo = lambda_lower();
  return interarrival_.atom_at_lower() ? t >= lo : t > lo;
}

std::vector<double> RenewalModel::renewal_table(double t, std::size_t steps) const {
  if (!(t >= 0.0)) throw InvalidArgument("renewal_table: t must be nonnegative");
  if (steps == 0) throw InvalidArgument("renewal_table: steps must be positive");
  const double h = t / static_cast<double>(steps);
  std::vector<double> cdf(steps + 1), lambda(steps + 1, 0.0);
  for (std::size_t k = 0; k <= steps; ++k) cdf[k] = interarrival_.cdf(static_cast<double>(k) * h);
  lambda[0] = cdf[0];
  // Trapezoidal Riemann-Stieltjes form of lambda = F + lambda * dF; the
  // j = 1 term involves lambda_k itself and is moved to the left side.
  const double df1 = cdf.size() > 1 ? cdf[1] - cdf[0] : 0.0;
  for (std::size_t k = 1; k <= steps; ++k) {
    double acc = cdf[k] + 0.5 * lambda[k - 1] * df1;
    for (std::size_t j = 2; j <= k; ++j) acc += 0.5 * (lambda[k - j] + lambda[k - j + 1]) * (cdf[j] - cdf[j - 1]);
    lambda[k] = acc / (1.0 - 0.5 * df1);
    if (!std::isfinite(lambda[k])) {
      std::fill(lambda.begin() + static_cast<std::ptrdiff_t>(k), lambda.end(), kInfinity);
      break;
    }
  }
  return lambda;
}

double RenewalModel::renewal_function(double t, std::size_t steps) const {
  if (!(t >= 0.0)) throw InvalidArgument("renewal_function: t must be nonnegative");
  if (t == 0.0) return interarrival_.cdf(0.0);
  if (const auto rate = poisson_rate()) return *rate * t;
  if (const auto* d = std::get_if<Degenerate>(&interarrival_.params())) return std::floor(t / d->value);
  return renewal_table(t, steps).back();
}

ReturnProcess::ReturnProcess(Params params) : params_(std::move(params)) {
  if (const auto* d = std::get_if<Deterministic>(&params_)) {
    if (!std::isfinite(d->rate)) throw InvalidArgument("deterministic returns: rate must be finite");
  } else if (const auto* b = std::get_if<BrownianDrift>(&params_)) {
    if (!std::isfinite(b->drift) || !(b->volatility >= 0.0) || !std::isfinite(b->volatility))
      throw InvalidArgument("brownian returns: need finite drift and nonnegative volatility");
  } else {
    const auto& j = std::get<JumpDiffusion>(params_);
    if (!std::isfinite(j.drift) || !(j.volatility >= 0.0) || !std::isfinite(j.volatility))
      throw InvalidArgument("jump diffusion: need finite drift and nonnegative volatility");
    if (!(j.intensity >= 0.0) || !std::isfinite(j.intensity))
      throw InvalidArgument("jump diffusion: intensity must be nonnegative");
    if (!std::isfinite(j.jump_scale)) throw InvalidArgument("jump diffusion: jump scale must be finite");
  }
}

std::string ReturnProcess::name() const {
  std::ostringstream os;
  if (const auto* d = std::get_if<Deterministic>(&params_)) {
    os << "Deterministic(" << d->rate << ")";
  } else if (const auto* b = std::get_if<BrownianDrift>(&params_)) {
    os << "BrownianDrift(" << b->drift << ", " << b->volatility << ")";
  } else {
    const auto& j = std::get<JumpDiffusion>(params_);
    os << "JumpDiffusion(" << j.drift << ", " << j.volatility << ", " << j.intensity << ", " << j.jump_scale
       << " * " << j.jump_law.name() << ")";
  }
  return os.str();
}

double ReturnProcess::laplace_exponent(double z) const {
  if (z == 0.0) return 0.0;
  if (const auto* d = std::get_if<Deterministic>(&params_)) return -z * d->rate;
  if (const auto* b = std::get_if<BrownianDrift>(&params_))
    return -z * b->drift + 0.5 * z * z * b->volatility * b->volatility;
  const auto& j = std::get<JumpDiffusion>(params_);
  const double diffusion = -z * j.drift + 0.5 * z * z * j.volatility * j.volatility;
  if (j.intensity == 0.0) return diffusion;
  const double transform = j.jump_law.mgf(-z * j.jump_scale);
  if (!std::isfinite(transform)) return kInfinity;
  return diffusion + j.intensity * (transform - 1.0);
}

double ReturnPath::advance_to(double t, Engine& g) {
  if (t < time_) throw InvalidArgument("return path: times must be nondecreasing");
  const double dt = t - time_;
  time_ = t;
  if (dt == 0.0) return value_;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Deterministic>) {
          value_ = p.rate * t;
        } else if constexpr (std::is_same_v<T, BrownianDrift>) {
          value_ += p.drift * dt + p.volatility * std::sqrt(dt) * standard_normal(g);
        } else {
          value_ += p.drift * dt + p.volatility * std::sqrt(dt) * standard_normal(g);
          if (p.intensity > 0.0) {
            const int jumps = std::poisson_distribution<int>(p.intensity * dt)(g);
            for (int i = 0; i < jumps; ++i) value_ += p.jump_scale * p.jump_law.sample(g);
          }
        }
      },
      process_->params());
  return value_;
}

std::vector<double> simulate_return_path(const ReturnProcess& process, std::span<const double> times, Engine& g) {
  ReturnPath path(process);
  std::vector<double> out;
  out.reserve(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < 0.0) throw InvalidArgument("simulate_return_path: times must be nonnegative");
    if (i > 0 && times[i] < times[i - 1]) throw InvalidArgument("simulate_return_path: times must be sorted");
    out.push_back(path.advance_to(times[i], g));
  }
  return out;
}

PathBounds check_path_bounds(const ReturnProcess& process, double horizon, std::uint64_t paths, Engine& g,
                             std::size_t steps) {
  if (!(horizon > 0.0)) throw InvalidArgument("path bounds: horizon must be positive");
  PathBounds out;
  if (const auto* d = std::get_if<Deterministic>(&process.params())) {
    out.c1 = std::max(0.0, -d->rate * horizon);
    out.c2 = std::max(0.0, d->rate * horizon);
  } else {
    if (paths == 0 || steps == 0) throw InvalidArgument("path bounds: need positive path and step counts");
    std::vector<double> lows, highs;
    lows.reserve(paths);
    highs.reserve(paths);
    ReturnPath path(process);
    const double h = horizon / static_cast<double>(steps);
    for (std::uint64_t p = 0; p < paths; ++p) {
      path.reset();
      double lo = 0.0, hi = 0.0;
      for (std::size_t k = 1; k <= steps; ++k) {
        const double v = path.advance_to(static_cast<double>(k) * h, g);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      lows.push_back(-lo);
      highs.push_back(hi);
    }
    auto upper = [](std::vector<double>& v) {
      const auto idx = static_cast<std::size_t>(std::ceil((1.0 - 1e-4) * static_cast<double>(v.size()))) - 1;
      std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(idx), v.end());
      return v[idx];
    };
    out.c1 = upper(lows);
    out.c2 = upper(highs);
    out.empirical = true;
    out.note = "empirical, not almost-sure: (1 - 1e-4)-quantiles of path extremes";
  }
  if (out.c2 < out.c1) {
    // Only existence of the constants matters, so inflate C2 to keep C2 >= C1.
    out.c2 = out.c1;
    if (!out.note.empty()) out.note += "; ";
    out.note += "C2 raised to C1";
  }
  return out;
}

std::pair<double, double> default_exponents(double alpha) {
  if (!(alpha > 0.0)) throw InvalidArgument("default_exponents: alpha must be positive");
  if (alpha >= 1.0) return {alpha / 2.0, alpha + 1.0};
  return {alpha / 2.0, (alpha + 1.0) / 2.0};
}

MomentCheck check_moment_condition(const ReturnProcess& process, const RenewalModel& renewal, double alpha,
                                   double k1, double k2, std::size_t terms) {
  if (!(alpha > 0.0)) throw InvalidArgument("moment condition: alpha must be positive");
  const bool small = alpha < 1.0;
  if (!(k1 > 0.0 && k1 < alpha && alpha < k2) || (small && !(k2 < 1.0)))
    throw InvalidArgument(small ? "moment condition: need 0 < k1 < alpha < k2 < 1"
                                : "moment condition: need 0 < k1 < alpha < k2");
  MomentCheck m;
  m.alpha = alpha;
  m.k1 = k1;
  m.k2 = k2;
  m.small_index = small;
  m.phi_k1 = process.laplace_exponent(k1);
  m.phi_k2 = process.laplace_exponent(k2);
  m.q1 = std::isfinite(m.phi_k1) ? renewal.interarrival().mgf(m.phi_k1) : kInfinity;
  m.q2 = std::isfinite(m.phi_k2) ? renewal.interarrival().mgf(m.phi_k2) : kInfinity;
  m.ratio1 = small ? m.q1 : std::pow(m.q1, 1.0 / k1);
  m.ratio2 = small ? m.q2 : std::pow(m.q2, 1.0 / k2);

  double sum = 0.0;
  for (std::size_t i = 1; i <= terms; ++i) {
    const double n = static_cast<double>(i);
    sum += std::max(std::pow(m.ratio1, n), std::pow(m.ratio2, n));
    m.partial_sums.push_back(sum);
  }
  m.verdict = m.phi_k1 < 0.0 && m.phi_k2 < 0.0 && m.ratio1 < 1.0 && m.ratio2 < 1.0;
  if (m.verdict) m.certificate = m.ratio1 / (1.0 - m.ratio1) + m.ratio2 / (1.0 - m.ratio2);
  return m;
}

}  // namespace heavyrisk
