#include "heavyrisk/estimators.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "heavyrisk/error.hpp"
#include "heavyrisk/stats.hpp"

namespace heavyrisk {
namespace {

constexpr std::uint64_t kPathBlock = 1u << 14;
constexpr std::uint64_t kSampleBlock = 1u << 15;
constexpr std::uint64_t kBreimanRole = 0xB4E1;
constexpr std::uint64_t kBigJumpRole = 0xB16A;
constexpr std::uint64_t kMinPaths = 1000;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_grid(std::span<const double> grid, const char* what) {
  if (grid.empty()) throw InvalidArgument(std::string(what) + ": grid must be nonempty");
  for (double v : grid)
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument(std::string(what) + ": grid values must be positive");
}

void check_lambda(const RiskModelSpec& spec, double t, double horizon) {
  if (!spec.arrivals.in_lambda_t(t, horizon))
    throw DomainError("t = " + std::to_string(t) + " not in Lambda (lambda(t) = 0)");
}

std::vector<double> sorted_unique(std::span<const double> v) {
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

// Sums per-block count vectors in block order.
std::vector<std::uint64_t> reduce_counts(const std::vector<std::vector<std::uint64_t>>& parts, std::size_t size) {
  std::vector<std::uint64_t> total(size, 0);
  for (const auto& p : parts)
    for (std::size_t i = 0; i < size; ++i) total[i] += p[i];
  return total;
}

template <class Visit>
std::vector<std::uint64_t> count_over_paths(const RiskModelSpec& spec, std::span<const double> t_grid,
                                            std::size_t cells, const McSettings& mc, bool premiums, Visit visit) {
  const StreamSeeds seeds = StreamSeeds::derive(mc.seed);
  std::vector<double> grid = sorted_unique(t_grid);
  PathSimulator probe(spec, grid, premiums);  // validates the grid and model once
  auto parts = run_chunks<std::vector<std::uint64_t>>(
      mc.paths, kPathBlock, mc.threads, [&](std::uint64_t block, std::uint64_t, std::uint64_t count) {
        PathSimulator sim(spec, grid, premiums);
        PathStreams streams = PathStreams::for_block(seeds, block);
        PathRealization path;
        std::vector<std::uint64_t> hits(cells, 0);
        for (std::uint64_t p = 0; p < count; ++p) {
          sim.simulate(streams, path);
          visit(path, hits);
        }
        return hits;
      });
  return reduce_counts(parts, cells);
}

// Gauss-Legendre expectation of f(Z), Z ~ N(mean, sd^2), over mean +- 8 sd.
template <class F>
double normal_expectation(double mean, double sd, F&& f) {
  if (sd == 0.0) return f(mean);
  constexpr double kWidth = 8.0;
  auto integrand = [&](double z) {
    return f(mean + sd * z) * std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  };
  return boost::math::quadrature::gauss<double, 64>::integrate(integrand, -kWidth, kWidth);
}

// int_0^t f(s) lambda(ds) for the spec's renewal process.
template <class F>
double renewal_integral(const RenewalModel& renewal, double t, F&& f) {
  if (const auto rate = renewal.poisson_rate()) {
    const double value =
        boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, t, 20, 1e-14);
    return *rate * value;
  }
  if (const auto* d = std::get_if<Degenerate>(&renewal.interarrival().params())) {
    KahanSum sum;
    for (double s = d->value; s <= t; s += d->value) sum.add(f(s));
    return sum.value();
  }
  const auto table = renewal.renewal_table(t);
  const double h = t / static_cast<double>(table.size() - 1);
  KahanSum sum;
  for (std::size_t k = 1; k < table.size(); ++k)
    sum.add(f((static_cast<double>(k) - 0.5) * h) * (table[k] - table[k - 1]));
  return sum.value();
}

double regularly_varying_index(const RiskModelSpec& spec) { return spec.claims.tail_index(); }

}  // namespace

EstimateReport make_report(std::uint64_t hits, std::uint64_t n, std::uint64_t seed, double wall_seconds) {
  EstimateReport r;
  r.hits = hits;
  r.n = n;
  r.seed = seed;
  r.wall_seconds = wall_seconds;
  r.estimate = static_cast<double>(hits) / static_cast<double>(n);
  const Interval ci = wilson_interval(hits, n);
  r.ci_lo = ci.lo;
  r.ci_hi = ci.hi;
  r.std_error = std::sqrt(r.estimate * (1.0 - r.estimate) / static_cast<double>(n));
  if (hits == 0) {
    r.zero_hits = true;
    r.note = "zero hits: one-sided interval; increase n or decrease x";
  }
  return r;
}

std::vector<std::uint64_t> count_entrances(const RiskModelSpec& spec, const RareSet& set,
                                           std::span<const double> x_grid, std::span<const double> t_grid,
                                           const McSettings& mc) {
  check_grid(x_grid, "entrance x");
  check_grid(t_grid, "entrance t");
  if (set.dimension() != spec.dimension()) throw InvalidArgument("entrance: set dimension mismatch");
  const std::size_t nx = x_grid.size(), nt = t_grid.size();
  return count_over_paths(spec, t_grid, nx * nt, mc, false, [&](const PathRealization& path, auto& hits) {
    for (std::size_t j = 0; j < nt; ++j) {
      const double y = set.y_a(path.row(path.aggregate, path.grid_index(t_grid[j])));
      for (std::size_t i = 0; i < nx; ++i) hits[i * nt + j] += y > x_grid[i];
    }
  });
}

std::vector<std::uint64_t> count_ruins(const RiskModelSpec& spec, RuinSet ruin, const CapitalAllocation& alloc,
                                       std::span<const double> x_grid, std::span<const double> t_grid,
                                       const McSettings& mc) {
  check_grid(x_grid, "ruin x");
  check_grid(t_grid, "ruin t");
  if (alloc.dimension() != spec.dimension()) throw InvalidArgument("ruin: allocation dimension mismatch");
  const std::size_t nx = x_grid.size(), nt = t_grid.size();
  std::vector<CapitalAllocation> allocs;
  for (double x : x_grid) allocs.emplace_back(x, alloc.weights());
  return count_over_paths(spec, t_grid, nx * nt, mc, true, [&](const PathRealization& path, auto& hits) {
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < nt; ++j) hits[i * nt + j] += ruin_indicator(path, ruin, allocs[i], t_grid[j]);
  });
}

EstimateReport mc_entrance_prob(const RiskModelSpec& spec, const RareSet& set, double x, double t,
                                const McSettings& mc) {
  if (mc.paths < kMinPaths) throw InvalidArgument("mc_entrance_prob: at least 1e3 paths required");
  check_lambda(spec, t, t);
  const auto start = Clock::now();
  const double xs[] = {x};
  const double ts[] = {t};
  const auto hits = count_entrances(spec, set, xs, ts, mc);
  return make_report(hits[0], mc.paths, mc.seed, seconds_since(start));
}

EstimateReport mc_ruin_prob(const RiskModelSpec& spec, RuinSet ruin, const CapitalAllocation& alloc, double x,
                            double t, const McSettings& mc) {
  if (mc.paths < kMinPaths) throw InvalidArgument("mc_ruin_prob: at least 1e3 paths required");
  check_lambda(spec, t, t);
  const auto start = Clock::now();
  const double xs[] = {x};
  const double ts[] = {t};
  const auto hits = count_ruins(spec, ruin, alloc, xs, ts, mc);
  auto report = make_report(hits[0], mc.paths, mc.seed, seconds_since(start));
  if (x < pre_asymptotic_threshold(spec.claims, ruin_to_rare(ruin, alloc))) {
    if (!report.note.empty()) report.note += "; ";
    report.note += "pre-asymptotic: x below the closed-form threshold";
  }
  return report;
}

AsymptoticValue asymptotic_entrance_finite(const RiskModelSpec& spec, const RareSet& set, double x, double t) {
  if (!(x > 0.0)) throw InvalidArgument("asymptotic: x must be positive");
  if (spec.claims.mode() != ClaimMode::Spectral) throw InvalidArgument("asymptotic: spectral claim mode required");
  check_lambda(spec, t, t);
  const double xmin = pre_asymptotic_threshold(spec.claims, set);
  const ClaimModel& claims = spec.claims;

  AsymptoticValue out;
  if (const auto* det = std::get_if<Deterministic>(&spec.returns.params())) {
    const double r = det->rate;
    out.pre_asymptotic = std::min(x, x * std::exp(r * t)) < xmin;
    out.value = renewal_integral(spec.arrivals, t,
                                 [&](double s) { return spectral_tail(claims, set, x * std::exp(r * s)); });
    return out;
  }
  if (const auto* bm = std::get_if<BrownianDrift>(&spec.returns.params())) {
    const double mu = bm->drift, sigma = bm->volatility;
    auto inner = [&](double s) {
      return normal_expectation(mu * s, sigma * std::sqrt(s),
                                [&](double xi) { return spectral_tail(claims, set, x * std::exp(xi)); });
    };
    // Flag when the bulk (3 sd) of exp(xi(s)) reaches below the closed-form threshold.
    for (double s : {t / 4.0, t / 2.0, t})
      out.pre_asymptotic = out.pre_asymptotic || x * std::exp(mu * s - 3.0 * sigma * std::sqrt(s)) < xmin;
    out.pre_asymptotic = out.pre_asymptotic || x < xmin;
    out.value = renewal_integral(spec.arrivals, t, inner);
    return out;
  }
  throw InvalidArgument("asymptotic: finite-horizon formula supports deterministic and Brownian returns only");
}

GlobalAsymptotic asymptotic_entrance_global(const RiskModelSpec& spec, const RareSet& set, double x, double t,
                                            std::optional<std::pair<double, double>> exponents) {
  if (!(x > 0.0)) throw InvalidArgument("asymptotic: x must be positive");
  if (spec.claims.mode() != ClaimMode::Spectral) throw InvalidArgument("asymptotic: spectral claim mode required");
  const double alpha = regularly_varying_index(spec);
  const bool infinite = std::isinf(t) && t > 0.0;
  if (!infinite) check_lambda(spec, t, t);

  const auto [k1, k2] = exponents.value_or(default_exponents(alpha));
  GlobalAsymptotic out;
  out.moments = check_moment_condition(spec.returns, spec.arrivals, alpha, k1, k2);
  if (!out.moments.verdict)
    throw AssumptionViolation("moment condition on exp(-xi(T_i)) fails for " + spec.returns.name());

  const double phi = spec.returns.laplace_exponent(alpha);
  if (infinite) {
    if (!(phi < 0.0)) throw AssumptionViolation("phi(alpha) >= 0: infinite-horizon integral diverges");
    const double q = spec.arrivals.interarrival().mgf(phi);
    out.discount_integral = q / (1.0 - q);
  } else if (const auto rate = spec.arrivals.poisson_rate()) {
    out.discount_integral = phi == 0.0 ? *rate * t : *rate * -std::expm1(phi * t) / -phi;
  } else {
    out.discount_integral = renewal_integral(spec.arrivals, t, [&](double s) { return std::exp(phi * s); });
  }
  out.pre_asymptotic = x < pre_asymptotic_threshold(spec.claims, set);
  out.value = spectral_tail(spec.claims, set, x) * out.discount_integral;
  return out;
}

double truncation_horizon(const RiskModelSpec& spec, double alpha, double tol) {
  const double phi = spec.returns.laplace_exponent(alpha);
  if (!(phi < 0.0)) throw AssumptionViolation("truncation horizon: phi(alpha) must be negative");
  if (!(tol > 0.0)) throw InvalidArgument("truncation horizon: tolerance must be positive");
  if (spec.arrivals.poisson_rate()) return std::log(tol / (1.0 + tol)) / phi;

  const double q = spec.arrivals.interarrival().mgf(phi);
  const double total = q / (1.0 - q);
  auto head = [&](double horizon) {
    return renewal_integral(spec.arrivals, horizon, [&](double s) { return std::exp(phi * s); });
  };
  auto ok = [&](double horizon) {
    const double h = head(horizon);
    return total - h <= tol * h;
  };
  double hi = 1.0 / -phi;
  while (!ok(hi)) hi *= 2.0;
  double lo = 0.0;
  for (int i = 0; i < 40; ++i) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? hi : lo) = mid;
  }
  return hi;
}

RatioCurve breiman_check(const ClaimModel& model, const UnivariateLaw& theta, const RareSet& set,
                         std::span<const double> x_grid, const McSettings& mc) {
  check_grid(x_grid, "breiman x");
  if (mc.paths == 0) throw InvalidArgument("breiman: sample count must be positive");
  const double alpha = model.tail_index();
  bool moment_ok = false;
  for (double p : {alpha + 1.0, alpha + 0.5, alpha + 0.1, alpha + 0.01})
    moment_ok = moment_ok || std::isfinite(theta.moment(p));
  if (!moment_ok)
    throw AssumptionViolation("breiman: cannot verify E[Theta^p] < inf for some p > alpha (" + theta.name() + ")");
  const double theta_moment = theta.moment(alpha);

  const std::size_t nx = x_grid.size();
  const std::size_t d = model.dimension();
  auto parts = run_chunks<std::vector<std::uint64_t>>(
      mc.paths, kSampleBlock, mc.threads, [&](std::uint64_t block, std::uint64_t, std::uint64_t count) {
        Engine g = make_engine(mc.seed, kBreimanRole, block);
        ClaimSequence seq(model, IidCoupling{});
        std::vector<double> v(d);
        std::vector<std::uint64_t> hits(nx, 0);
        for (std::uint64_t i = 0; i < count; ++i) {
          seq.reset();
          seq.next(g, v);
          const double y = theta.sample(g) * set.y_a(v);
          for (std::size_t k = 0; k < nx; ++k) hits[k] += y > x_grid[k];
        }
        return hits;
      });
  const auto hits = reduce_counts(parts, nx);

  RatioCurve out;
  const double n = static_cast<double>(mc.paths);
  for (std::size_t k = 0; k < nx; ++k) {
    RatioPoint p;
    p.x = x_grid[k];
    p.hits = hits[k];
    p.estimate = static_cast<double>(hits[k]) / n;
    p.reference = theta_moment * spectral_tail(model, set, p.x);
    p.ratio = p.estimate / p.reference;
    p.exact_ratio = p.ratio;
    p.ratio_se = std::sqrt(p.estimate * (1.0 - p.estimate) / n) / p.reference;
    out.points.push_back(p);
  }
  return out;
}

RatioCurve single_big_jump_check(const ClaimModel& model, const RareSet& set, std::size_t m,
                                 std::span<const double> x_grid, const McSettings& mc,
                                 SummandDependence dependence) {
  if (m < 1) throw InvalidArgument("single big jump: m must be at least 1");
  check_grid(x_grid, "single big jump x");
  if (mc.paths == 0) throw InvalidArgument("single big jump: sample count must be positive");
  const std::size_t nx = x_grid.size();
  const std::size_t d = model.dimension();

  // Per x: [sum exceedances, pooled summand exceedances].
  auto parts = run_chunks<std::vector<std::uint64_t>>(
      mc.paths, kSampleBlock, mc.threads, [&](std::uint64_t block, std::uint64_t, std::uint64_t count) {
        Engine g = make_engine(mc.seed, kBigJumpRole, block);
        ClaimSequence seq(model, IidCoupling{});
        std::vector<double> v(d);
        std::vector<std::uint64_t> hits(2 * nx, 0);
        for (std::uint64_t i = 0; i < count; ++i) {
          seq.reset();
          double sum = 0.0;
          double first = 0.0;
          for (std::size_t term = 0; term < m; ++term) {
            double y;
            if (dependence == SummandDependence::Comonotone && term > 0) {
              y = first;
            } else {
              seq.next(g, v);
              y = set.y_a(v);
              if (term == 0) first = y;
            }
            sum += y;
            for (std::size_t k = 0; k < nx; ++k) hits[2 * k + 1] += y > x_grid[k];
          }
          for (std::size_t k = 0; k < nx; ++k) hits[2 * k] += sum > x_grid[k];
        }
        return hits;
      });
  const auto hits = reduce_counts(parts, 2 * nx);

  RatioCurve out;
  const double n = static_cast<double>(mc.paths);
  const double md = static_cast<double>(m);
  for (std::size_t k = 0; k < nx; ++k) {
    RatioPoint p;
    p.x = x_grid[k];
    p.hits = hits[2 * k];
    p.estimate = static_cast<double>(hits[2 * k]) / n;
    const double marginal = static_cast<double>(hits[2 * k + 1]) / (n * md);
    p.reference = md * marginal;
    p.ratio = p.reference > 0.0 ? p.estimate / p.reference : kInfinity;
    // Delta method with independent numerator and denominator noise.
    const double rel_num = p.hits > 0 ? 1.0 / static_cast<double>(p.hits) : 0.0;
    const double rel_den = hits[2 * k + 1] > 0 ? 1.0 / static_cast<double>(hits[2 * k + 1]) : 0.0;
    p.ratio_se = p.ratio * std::sqrt(rel_num + rel_den);
    if (model.mode() == ClaimMode::Spectral) p.exact_ratio = p.estimate / (md * spectral_tail(model, set, p.x));
    out.points.push_back(p);
  }
  if (dependence == SummandDependence::Comonotone) {
    out.flagged = true;
    out.note = "comonotone summands: not tail asymptotically independent";
  } else if (!out.points.empty() && std::abs(out.points.back().ratio - 1.0) > 0.1) {
    out.flagged = true;
    out.note = "ratio at the largest x deviates from 1 by more than 0.1";
  }
  return out;
}

RatioTable uniformity_diagnostic(const RiskModelSpec& spec, const RareSet& set, std::span<const double> x_grid,
                                 std::span<const double> t_grid, const McSettings& mc) {
  check_grid(x_grid, "uniformity x");
  check_grid(t_grid, "uniformity t");
  if (mc.paths < kMinPaths) throw InvalidArgument("uniformity: at least 1e3 paths required");
  const double horizon = *std::max_element(t_grid.begin(), t_grid.end());
  for (double t : t_grid) check_lambda(spec, t, horizon);

  const auto start = Clock::now();
  const auto hits = count_entrances(spec, set, x_grid, t_grid, mc);
  const double elapsed = seconds_since(start);

  RatioTable table;
  table.x_grid.assign(x_grid.begin(), x_grid.end());
  table.t_grid.assign(t_grid.begin(), t_grid.end());
  const std::size_t nx = x_grid.size(), nt = t_grid.size();
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < nt; ++j) {
      RatioCell c;
      c.x = x_grid[i];
      c.t = t_grid[j];
      c.mc = make_report(hits[i * nt + j], mc.paths, mc.seed, elapsed);
      const auto asym = asymptotic_entrance_finite(spec, set, c.x, c.t);
      c.asymptotic = asym.value;
      c.pre_asymptotic = asym.pre_asymptotic;
      if (!(c.asymptotic > 0.0)) throw DomainError("uniformity: asymptotic value must be positive");
      c.ratio = c.mc.estimate / c.asymptotic;
      c.ratio_lo = c.mc.ci_lo / c.asymptotic;
      c.ratio_hi = c.mc.ci_hi / c.asymptotic;
      c.ratio_se = c.mc.std_error / c.asymptotic;
      c.excluded = c.mc.zero_hits;
      if (c.excluded)
        table.notes.push_back("cell x=" + std::to_string(c.x) + " t=" + std::to_string(c.t) +
                              " has zero hits; excluded from sup");
      table.cells.push_back(c);
    }
  }

  for (std::size_t i = 0; i < nx; ++i) {
    double sup = -1.0, se = 0.0;
    double wsum = 0.0, wrsum = 0.0;
    std::size_t used = 0;
    for (std::size_t j = 0; j < nt; ++j) {
      const RatioCell& c = table.cell(i, j);
      if (c.excluded) continue;
      const double dev = std::abs(c.ratio - 1.0);
      if (dev > sup) {
        sup = dev;
        se = c.ratio_se;
      }
      const double w = 1.0 / (c.ratio_se * c.ratio_se);
      wsum += w;
      wrsum += w * c.ratio;
      ++used;
    }
    table.sup_deviation.push_back(sup < 0.0 ? kInfinity : sup);
    table.sup_se.push_back(se);
    double p = 1.0;
    if (used >= 2) {
      const double mean = wrsum / wsum;
      double chi2 = 0.0;
      for (std::size_t j = 0; j < nt; ++j) {
        const RatioCell& c = table.cell(i, j);
        if (c.excluded) continue;
        chi2 += (c.ratio - mean) * (c.ratio - mean) / (c.ratio_se * c.ratio_se);
      }
      boost::math::chi_squared dist(static_cast<double>(used - 1));
      p = boost::math::cdf(boost::math::complement(dist, chi2));
    }
    table.heterogeneity_p.push_back(p);
  }

  table.sup_nonincreasing = true;
  std::optional<std::size_t> prev;
  for (std::size_t i = 0; i < nx; ++i) {
    if (!std::isfinite(table.sup_deviation[i])) continue;
    if (prev) {
      const double slack = 2.0 * std::hypot(table.sup_se[*prev], table.sup_se[i]);
      table.sup_nonincreasing =
          table.sup_nonincreasing && table.sup_deviation[i] <= table.sup_deviation[*prev] + slack;
    }
    prev = i;
  }
  return table;
}

}  // namespace heavyrisk
