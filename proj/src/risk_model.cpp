#include "heavyrisk/risk_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "heavyrisk/error.hpp"
#include "heavyrisk/stats.hpp"

namespace heavyrisk {
namespace {

constexpr std::uint64_t kClaimRole = 0xC1A1;
constexpr std::uint64_t kArrivalRole = 0xA771;
constexpr std::uint64_t kReturnRole = 0x4E70;

// int_a^b exp(-r y) dy
double discounted_length(double a, double b, double r) {
  if (r == 0.0) return b - a;
  return std::exp(-r * a) * -std::expm1(-r * (b - a)) / r;
}

}  // namespace

PremiumPlan PremiumPlan::constant(std::vector<double> bounds) {
  std::vector<PremiumSchedule> schedules;
  schedules.reserve(bounds.size());
  for (double m : bounds) schedules.push_back(PremiumSchedule{{0.0}, {m}});
  return PremiumPlan(std::move(schedules), std::move(bounds));
}

PremiumPlan::PremiumPlan(std::vector<PremiumSchedule> schedules, std::vector<double> bounds)
    : schedules_(std::move(schedules)), bounds_(std::move(bounds)) {
  if (schedules_.size() != bounds_.size()) throw InvalidArgument("premiums: one schedule per line required");
  for (std::size_t i = 0; i < bounds_.size(); ++i) {
    const double m = bounds_[i];
    if (!(m >= 0.0) || !std::isfinite(m)) throw InvalidArgument("premiums: bounds must be nonnegative");
    const auto& s = schedules_[i];
    if (s.breaks.empty() || s.breaks.size() != s.rates.size())
      throw InvalidArgument("premiums: schedule needs matching breaks and rates");
    if (s.breaks.front() != 0.0) throw InvalidArgument("premiums: schedule must start at 0");
    for (std::size_t k = 0; k < s.rates.size(); ++k) {
      if (k > 0 && !(s.breaks[k] > s.breaks[k - 1])) throw InvalidArgument("premiums: breaks must increase");
      if (!(s.rates[k] >= 0.0) || s.rates[k] > m)
        throw InvalidArgument("premiums: line " + std::to_string(i) + " density must lie in [0, M]");
      zero_ = zero_ && s.rates[k] == 0.0;
    }
  }
}

double PremiumPlan::rate(std::size_t line, double t) const {
  const auto& s = schedules_.at(line);
  const auto it = std::upper_bound(s.breaks.begin(), s.breaks.end(), t);
  return s.rates[static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - s.breaks.begin() - 1))];
}

double PremiumPlan::discounted_integral(std::size_t line, double t, double r) const {
  const auto& s = schedules_.at(line);
  double total = 0.0;
  for (std::size_t k = 0; k < s.rates.size() && s.breaks[k] < t; ++k) {
    const double end = k + 1 < s.breaks.size() ? std::min(t, s.breaks[k + 1]) : t;
    if (s.rates[k] != 0.0) total += s.rates[k] * discounted_length(s.breaks[k], end, r);
  }
  return total;
}

void RiskModelSpec::validate() const {
  const std::size_t d = dimension();
  if (premiums.dimension() != d)
    throw InvalidArgument("model: premium plan has " + std::to_string(premiums.dimension()) + " lines, claims have " +
                          std::to_string(d));
  if (allocation.dimension() != d)
    throw InvalidArgument("model: allocation has " + std::to_string(allocation.dimension()) +
                          " weights, claims have " + std::to_string(d));
  ClaimSequence check(claims, coupling);
}

StreamSeeds StreamSeeds::derive(std::uint64_t master) {
  std::uint64_t s = master;
  StreamSeeds out;
  out.claims = splitmix64(s);
  out.arrivals = splitmix64(s);
  out.returns = splitmix64(s);
  return out;
}

PathStreams PathStreams::for_block(const StreamSeeds& seeds, std::uint64_t block) {
  return {make_engine(seeds.claims, kClaimRole, block), make_engine(seeds.arrivals, kArrivalRole, block),
          make_engine(seeds.returns, kReturnRole, block)};
}

std::size_t PathRealization::grid_index(double t) const {
  const auto it = std::lower_bound(grid.begin(), grid.end(), t);
  if (it == grid.end() || *it != t) throw DomainError("time " + std::to_string(t) + " is not on the path grid");
  return static_cast<std::size_t>(it - grid.begin());
}

PathSimulator::PathSimulator(const RiskModelSpec& spec, std::vector<double> grid, bool with_premiums)
    : spec_(&spec),
      grid_(std::move(grid)),
      horizon_(0.0),
      sequence_(spec.claims, spec.coupling),
      return_path_(spec.returns),
      premiums_(with_premiums && !spec.premiums.is_zero()) {
  spec.validate();
  if (grid_.empty()) throw InvalidArgument("path grid: at least one time required");
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    if (!(grid_[i] > 0.0) || !std::isfinite(grid_[i])) throw InvalidArgument("path grid: times must be positive");
    if (i > 0 && !(grid_[i] > grid_[i - 1])) throw InvalidArgument("path grid: times must increase");
  }
  horizon_ = grid_.back();
  if (!spec.returns.is_deterministic() && premiums_) {
    premium_grid_.resize(kPremiumGridPoints);
    for (std::size_t k = 0; k < kPremiumGridPoints; ++k)
      premium_grid_[k] = horizon_ * static_cast<double>(k + 1) / static_cast<double>(kPremiumGridPoints);
  }
}

void PathSimulator::simulate(PathStreams& streams, PathRealization& out) {
  const RiskModelSpec& spec = *spec_;
  const std::size_t d = spec.dimension();
  out.dimension = d;
  out.grid = grid_;

  out.arrival_times.clear();
  const UnivariateLaw& gap = spec.arrivals.interarrival();
  for (double t = gap.sample(streams.arrivals); t <= horizon_; t += gap.sample(streams.arrivals))
    out.arrival_times.push_back(t);
  const std::size_t n = out.arrival_times.size();

  sequence_.reset();
  out.claims.resize(n * d);
  for (std::size_t i = 0; i < n; ++i) sequence_.next(streams.claims, std::span<double>(out.claims.data() + i * d, d));

  discount_and_premiums(streams, out);

  out.aggregate_at_arrival.resize(n * d);
  out.aggregate.resize(grid_.size() * d);
  std::vector<KahanSum> sums(d);
  std::size_t k = 0;
  auto flush_until = [&](double limit, bool inclusive) {
    while (k < grid_.size() && (inclusive ? grid_[k] <= limit : grid_[k] < limit)) {
      for (std::size_t j = 0; j < d; ++j) out.aggregate[k * d + j] = sums[j].value();
      ++k;
    }
  };
  for (std::size_t i = 0; i < n; ++i) {
    flush_until(out.arrival_times[i], false);
    for (std::size_t j = 0; j < d; ++j) {
      sums[j].add(out.claims[i * d + j] * out.discount[i]);
      out.aggregate_at_arrival[i * d + j] = sums[j].value();
    }
  }
  flush_until(horizon_, true);

  out.surplus.resize(grid_.size() * d);
  const double x = spec.allocation.capital();
  const auto& l = spec.allocation.weights();
  for (std::size_t g = 0; g < grid_.size(); ++g)
    for (std::size_t j = 0; j < d; ++j)
      out.surplus[g * d + j] = x * l[j] + out.premium[g * d + j] - out.aggregate[g * d + j];
}

void PathSimulator::discount_and_premiums(PathStreams& streams, PathRealization& out) {
  const RiskModelSpec& spec = *spec_;
  const PremiumPlan& plan = spec.premiums;
  const std::size_t d = spec.dimension();
  const std::size_t n = out.arrival_times.size();
  out.discount.resize(n);
  out.premium_at_arrival.assign(n * d, 0.0);
  out.premium.assign(grid_.size() * d, 0.0);

  if (const auto* det = std::get_if<Deterministic>(&spec.returns.params())) {
    const double r = det->rate;
    for (std::size_t i = 0; i < n; ++i) out.discount[i] = std::exp(-r * out.arrival_times[i]);
    if (!premiums_) return;
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t i = 0; i < n; ++i)
        out.premium_at_arrival[i * d + j] = plan.discounted_integral(j, out.arrival_times[i], r);
      for (std::size_t g = 0; g < grid_.size(); ++g) out.premium[g * d + j] = plan.discounted_integral(j, grid_[g], r);
    }
    return;
  }

  // Stochastic returns: simulate xi forward over the merged time set. With
  // premiums, grid and premium-grid points join the arrivals and the
  // premium integral is accumulated by the trapezoidal rule.
  const bool premiums = premiums_;
  return_path_.reset();
  std::vector<KahanSum> acc(d);
  std::size_t ia = 0, ig = 0, ip = 0;
  double prev_t = 0.0, prev_e = 1.0;
  constexpr double kNone = kInfinity;
  for (;;) {
    const double ta = ia < n ? out.arrival_times[ia] : kNone;
    const double tg = premiums && ig < grid_.size() ? grid_[ig] : kNone;
    const double tp = ip < premium_grid_.size() ? premium_grid_[ip] : kNone;
    const double t = std::min({ta, tg, tp});
    if (t == kNone) break;
    const double e = std::exp(-return_path_.advance_to(t, streams.returns));
    if (premiums && t > prev_t) {
      const double mid = 0.5 * (prev_t + t);
      for (std::size_t j = 0; j < d; ++j) acc[j].add(plan.rate(j, mid) * 0.5 * (prev_e + e) * (t - prev_t));
    }
    prev_t = t;
    prev_e = e;
    while (ia < n && out.arrival_times[ia] == t) {
      out.discount[ia] = e;
      for (std::size_t j = 0; j < d; ++j) out.premium_at_arrival[ia * d + j] = acc[j].value();
      ++ia;
    }
    while (premiums && ig < grid_.size() && grid_[ig] == t) {
      for (std::size_t j = 0; j < d; ++j) out.premium[ig * d + j] = acc[j].value();
      ++ig;
    }
    while (ip < premium_grid_.size() && premium_grid_[ip] == t) ++ip;
  }
}

PathRealization simulate_path(const RiskModelSpec& spec, std::vector<double> grid, PathStreams& streams) {
  PathSimulator sim(spec, std::move(grid));
  PathRealization out;
  sim.simulate(streams, out);
  return out;
}

bool entrance_indicator(const PathRealization& path, const RareSet& set, double x, double t) {
  const std::size_t k = path.grid_index(t);
  return set.contains(x, path.row(path.aggregate, k));
}

bool ruin_indicator(const PathRealization& path, RuinSet set, const CapitalAllocation& alloc, double t) {
  const std::size_t d = path.dimension;
  if (alloc.dimension() != d) throw InvalidArgument("ruin_indicator: allocation dimension mismatch");
  const std::size_t last = path.grid_index(t);
  const double x = alloc.capital();
  const auto& l = alloc.weights();
  std::vector<double> u(d);
  auto ruined = [&](const std::vector<double>& premium, const std::vector<double>& aggregate, std::size_t row) {
    for (std::size_t j = 0; j < d; ++j) u[j] = x * l[j] + premium[row * d + j] - aggregate[row * d + j];
    return ruin_contains(set, u);
  };
  for (std::size_t i = 0; i < path.arrivals() && path.arrival_times[i] <= t; ++i)
    if (ruined(path.premium_at_arrival, path.aggregate_at_arrival, i)) return true;
  for (std::size_t k = 0; k <= last; ++k)
    if (ruined(path.premium, path.aggregate, k)) return true;
  return false;
}

}  // namespace heavyrisk
