// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance [--only N] [--threads K]

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "heavyrisk/claim_vectors.hpp"
#include "heavyrisk/distributions.hpp"
#include "heavyrisk/estimators.hpp"
#include "heavyrisk/experiment.hpp"
#include "heavyrisk/processes.hpp"
#include "heavyrisk/random.hpp"
#include "heavyrisk/rare_sets.hpp"
#include "heavyrisk/risk_model.hpp"

using namespace heavyrisk;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kPaths = 10'000'000;
const double kDiag = 1.0 / std::sqrt(2.0);
const double kAlpha = 2.0;
const double kRate = 0.03;
const double kLambda0 = 1.0;  // Poisson(1) arrivals

unsigned g_threads = 1;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ClaimModel three_atoms() {
  return ClaimModel::spectral(UnivariateLaw::pareto(kAlpha, 1),
                              {{{1, 0}, 1.0 / 3}, {{0, 1}, 1.0 / 3}, {{kDiag, kDiag}, 1.0 / 3}});
}

RiskModelSpec base_model(PremiumPlan premiums = PremiumPlan::zero(2)) {
  return RiskModelSpec{three_atoms(),
                       IidCoupling{},
                       RenewalModel(UnivariateLaw::exponential(kLambda0)),
                       ReturnProcess::deterministic(kRate),
                       std::move(premiums),
                       CapitalAllocation(1.0, {0.5, 0.5})};
}

const RareSet kHalf = RareSet::halfspace({0.5, 0.5}, 1);

// Oracle tails written out from the atoms: Y = R * (l . theta) with
// R ~ Pareto(2, 1), so P[Y > x] = sum_k w_k (c_k / x)^2 for x >= max c_k.
double halfspace_tail(double x) { return (0.5 * 0.5 + 0.5 * 0.5 + kDiag * kDiag) / (3.0 * x * x); }
double total_tail(double x) { return (1.0 + 1.0 + 2.0 * kDiag * 2.0 * kDiag) / (3.0 * x * x); }

// lambda0 * tail * int_0^t exp(-alpha r s) ds
double finite_horizon(double tail, double t) {
  return kLambda0 * tail * -std::expm1(-kAlpha * kRate * t) / (kAlpha * kRate);
}

McSettings mc(std::uint64_t seed, std::uint64_t n = kPaths) { return {n, seed, g_threads}; }

Outcome entrance_ratio() {
  const auto spec = base_model();
  const double xs[] = {20.0, 50.0}, ts[] = {10.0};
  const auto hits = count_entrances(spec, kHalf, xs, ts, mc(101));
  double ratio[2], se[2];
  for (int i = 0; i < 2; ++i) {
    const auto r = make_report(hits[i], kPaths, 101);
    const double asym = finite_horizon(halfspace_tail(xs[i]), 10.0);
    ratio[i] = r.estimate / asym;
    se[i] = r.std_error / asym;
  }
  const double pooled = std::hypot(se[0], se[1]);
  const bool in_band = ratio[1] >= 0.85 && ratio[1] <= 1.15;
  const bool improving = std::abs(ratio[1] - 1) <= std::abs(ratio[0] - 1) + 2 * pooled;
  return {in_band && improving,
          fmt("ratio(x=20)=%.4f±%.4f ratio(x=50)=%.4f±%.4f band[0.85,1.15]=%s improving=%s", ratio[0], se[0],
              ratio[1], se[1], in_band ? "yes" : "no", improving ? "yes" : "no")};
}

Outcome ruin_ratio() {
  const auto spec = base_model(PremiumPlan::constant({0.01, 0.01}));
  const CapitalAllocation alloc(1.0, {0.5, 0.5});
  const auto r = mc_ruin_prob(spec, RuinSet::TotalNegative, alloc, 50.0, 10.0, mc(202));
  const double asym = finite_horizon(total_tail(50.0), 10.0);
  const auto lib = asymptotic_entrance_finite(spec, ruin_to_rare(RuinSet::TotalNegative, alloc), 50.0, 10.0);
  const double ratio = r.estimate / asym;
  return {ratio >= 0.8 && ratio <= 1.2,
          fmt("mc=%.4e asym=%.4e (library %.4e) ratio(x=50)=%.4f±%.4f band[0.8,1.2]", r.estimate, asym, lib.value,
              ratio, r.std_error / asym)};
}

Outcome uniformity_trend() {
  const auto spec = base_model();
  const double xs[] = {20.0, 50.0, 100.0}, ts[] = {1.0, 2.0, 5.0, 10.0};
  const auto table = uniformity_diagnostic(spec, kHalf, xs, ts, mc(303));
  // Independent recheck of the trend from the cell values.
  bool trend = true;
  double prev = 0.0, prev_se = 0.0;
  std::string sups;
  for (std::size_t i = 0; i < 3; ++i) {
    double sup = 0.0, sup_se = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
      const auto& c = table.cell(i, j);
      if (c.excluded) continue;
      const double asym = finite_horizon(halfspace_tail(xs[i]), ts[j]);
      const double dev = std::abs(c.mc.estimate / asym - 1);
      if (dev > sup) {
        sup = dev;
        sup_se = c.mc.std_error / asym;
      }
    }
    sups += fmt("sup(x=%g)=%.4f±%.4f ", xs[i], sup, sup_se);
    if (i > 0 && sup > prev + 2 * std::hypot(sup_se, prev_se)) trend = false;
    prev = sup;
    prev_se = sup_se;
  }
  return {trend && table.sup_nonincreasing,
          sups + fmt("library_nonincreasing=%s", table.sup_nonincreasing ? "yes" : "no")};
}

Outcome global_horizon() {
  const auto spec = base_model();
  const double phi = spec.returns.laplace_exponent(kAlpha);
  const double closed = kLambda0 * halfspace_tail(50.0) / -phi;
  const double t0 = truncation_horizon(spec, kAlpha, 1e-4);
  const auto global = asymptotic_entrance_global(spec, kHalf, 50.0, kInfinity);
  const auto r = mc_entrance_prob(spec, kHalf, 50.0, 200.0, mc(404));
  const double ratio = r.estimate / closed;
  const bool band = ratio >= 0.85 && ratio <= 1.15;
  return {band && global.moments.verdict,
          fmt("T0=%.2f mc(t=200)=%.4e closed=%.4e (library %.4e) ratio=%.4f±%.4f certificate=%s (%.4g)", t0,
              r.estimate, closed, global.value, ratio, r.std_error / closed,
              global.moments.verdict ? "true" : "false", global.moments.certificate)};
}

Outcome breiman() {
  const double xs[] = {100.0};  // upper 1e-4 quantile of the Pareto(2, 1) radius
  const auto curve = breiman_check(three_atoms(), UnivariateLaw::uniform(0.5, 1.5), kHalf, xs, mc(505));
  const auto& p = curve.points[0];
  const double reference = 13.0 / 12.0 * halfspace_tail(100.0);
  const double ratio = p.estimate / reference;
  const double se = p.ratio_se * p.reference / reference;
  return {std::abs(ratio - 1) <= 3 * se,
          fmt("ratio=%.4f se=%.4f |ratio-1|/se=%.2f hits=%llu", ratio, se, std::abs(ratio - 1) / se,
              static_cast<unsigned long long>(p.hits))};
}

Outcome big_jump() {
  const double xs[] = {std::sqrt(1.0 / 3e-4)};  // P[Y_A > x] = 1e-4
  const auto iid = single_big_jump_check(three_atoms(), kHalf, 2, xs, mc(606));
  const auto co = single_big_jump_check(three_atoms(), kHalf, 2, xs, mc(607), SummandDependence::Comonotone);
  const double ri = iid.points[0].ratio, rc = co.points[0].ratio;
  const double target = std::pow(2.0, kAlpha - 1);
  const bool ok = std::abs(ri - 1) <= 0.1 && std::abs(rc - target) <= 0.1 * target;
  return {ok, fmt("x=%.2f iid=%.4f±%.4f comonotone=%.4f±%.4f (target %.1f)", xs[0], ri, iid.points[0].ratio_se, rc,
                  co.points[0].ratio_se, target)};
}

Outcome tai() {
  auto threshold = [](double p) { return std::sqrt(1.0 / (3.0 * p)); };
  const double dep[] = {threshold(1e-2), threshold(1e-3), threshold(1e-4)};
  const auto curve = check_tai(three_atoms(), gaussian_radial_coupling(0.8), kHalf, dep, {kPaths, 707, g_threads});
  const double probs[] = {1e-1, 1e-2, 1e-3};
  const double ind[] = {threshold(probs[0]), threshold(probs[1]), threshold(probs[2])};
  const auto flat = check_tai(three_atoms(), IidCoupling{}, kHalf, ind, {kPaths, 708, g_threads});
  bool match = true;
  std::string detail = "rho=0.8:";
  for (double c : curve.conditional) detail += fmt(" %.4f", c);
  detail += " iid(z-scores):";
  for (int i = 0; i < 3; ++i) {
    const double z = (flat.conditional[i] - probs[i]) / flat.conditional_se[i];
    match = match && std::abs(z) <= 3;
    detail += fmt(" %.2f", z);
  }
  return {curve.strictly_decreasing && match, detail};
}

// Largest grid u with point/u in A, scanning down from the top.
double grid_scan(const std::function<bool(double, double)>& in_a, double a, double b, double step, double upper) {
  for (double k = std::floor(upper / step); k >= 1; --k) {
    const double u = k * step;
    if (in_a(a / u, b / u)) return u;
  }
  return 0.0;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome oracle_suites() {
  std::mt19937_64 g(808);
  std::uniform_real_distribution<double> coord(0.0, 2.0), weight(0.25, 1.0), unit(0.0, 1.0);
  constexpr double kStep = 1e-3, kUpper = 20.0;

  std::size_t scan_bad = 0;
  for (int c = 0; c < 100'000; ++c) {
    const double a = coord(g), b = coord(g);
    const std::vector<double> p{a, b};
    double y = 0.0, scanned = 0.0;
    switch (c % 3) {
      case 0: {
        const double b1 = weight(g), b2 = weight(g);
        y = RareSet::or_set({b1, b2}).y_a(p);
        scanned = grid_scan([=](double s, double t) { return s > b1 || t > b2; }, a, b, kStep, kUpper);
        break;
      }
      case 1: {
        const double w = unit(g), level = weight(g);
        y = RareSet::halfspace({w, 1 - w}, level).y_a(p);
        scanned = grid_scan([=](double s, double t) { return w * s + (1 - w) * t > level; }, a, b, kStep, kUpper);
        break;
      }
      default: {
        const double p1 = weight(g), p2 = weight(g), q1 = weight(g), level = weight(g) * 2;
        y = RareSet::support_set({{p1, p2}, {0.0, q1}}, level).y_a(p);
        scanned = grid_scan([=](double s, double t) { return p1 * s + p2 * t > level || q1 * t > level; }, a, b,
                            kStep, kUpper);
      }
    }
    if (!(std::abs(y - scanned) <= kStep)) ++scan_bad;
  }

  // Closed-form tail against direct sampling.
  Engine e = make_engine(809, 0, 0);
  const auto model = three_atoms();
  std::uint64_t hits = 0;
  std::vector<double> x(2);
  ClaimSequence seq(model, IidCoupling{});
  for (std::uint64_t i = 0; i < kPaths; ++i) {
    seq.reset();
    seq.next(e, x);
    hits += 0.5 * x[0] + 0.5 * x[1] > 10.0;
  }
  const double exact = tail_prob(model, kHalf, 10.0).value;
  const double tail_se = std::sqrt(exact * (1 - exact) / kPaths);
  const double tail_z = (static_cast<double>(hits) / kPaths - exact) / tail_se;

  std::size_t inclusion_bad = 0;
  const RareSet sets[] = {RareSet::or_set({0.5, 0.8}), RareSet::halfspace({0.3, 0.7}, 1.0),
                          RareSet::support_set({{1, 2}, {3, 0.5}}, 1.0)};
  std::uniform_real_distribution<double> big(0.0, 50.0);
  for (int i = 0; i < 100'000; ++i) {
    const double xx = 1.0 + big(g), u = unit(g) * xx * 0.999;
    const std::vector<double> p{big(g), big(g)};
    if (!(u > 0)) continue;
    if (!sets[i % 3].inclusion_margin(xx, u, p).monotone()) ++inclusion_bad;
  }

  bool phi_ok = true;
  const ReturnProcess procs[] = {ReturnProcess::deterministic(kRate), ReturnProcess::brownian(0.05, 0.3),
                                 ReturnProcess(JumpDiffusion{0.02, 0.1, 0.5, UnivariateLaw::gamma(2, 5), -1.0})};
  for (const auto& pr : procs) {
    phi_ok = phi_ok && pr.laplace_exponent(0.0) == 0.0;
    for (double z = 0.05; z <= 4.0; z += 0.05)
      phi_ok = phi_ok && pr.laplace_exponent(z) <=
                             0.5 * (pr.laplace_exponent(z - 0.05) + pr.laplace_exponent(z + 0.05)) + 1e-12;
  }

  const fs::path dir = fs::temp_directory_path() / "heavyrisk_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path cfg = dir / "config.json";
  std::ofstream(cfg) << R"({
  "seed": 2024,
  "model": {
    "claims": {"mode": "spectral", "radial": {"law": "pareto", "alpha": 2},
               "atoms": [[1, 0], [0, 1], [0.7071067811865476, 0.7071067811865476]]},
    "arrivals": {"law": "exponential", "rate": 1},
    "returns": {"type": "brownian", "drift": 0.03, "volatility": 0.1},
    "premiums": {"bounds": [0.01, 0.01]},
    "allocation": {"weights": [0.5, 0.5]}
  },
  "set": {"type": "halfspace", "weights": [0.5, 0.5], "level": 1},
  "ruin_set": "total-negative",
  "experiments": [
    {"id": "ent", "kind": "entrance", "x_grid": [5, 20], "t_grid": [1, 5], "n": 20000},
    {"id": "ruin", "kind": "ruin", "x_grid": [10], "t_grid": [5], "n": 20000}
  ]
})";
  RunOptions a, b;
  a.out_dir = dir / "a";
  b.out_dir = dir / "b";
  b.threads = 4;
  run_config(cfg, a);
  run_config(cfg, b);
  bool same = true;
  for (const std::string id : {"ent", "ruin"}) {
    const auto first = slurp(dir / "a" / (id + ".csv"));
    same = same && !first.empty() && first == slurp(dir / "b" / (id + ".csv"));
  }
  fs::remove_all(dir);

  const bool ok = scan_bad == 0 && std::abs(tail_z) <= 3 && inclusion_bad == 0 && phi_ok && same;
  return {ok, fmt("y_a scan mismatches=%zu/100000 tail z=%.2f inclusion violations=%zu/100000 phi=%s csv=%s",
                  scan_bad, tail_z, inclusion_bad, phi_ok ? "ok" : "bad", same ? "identical" : "differ")};
}

Outcome tail_diagnostics() {
  Engine g = make_engine(909, 0, 0);
  const auto z = UnivariateLaw::pareto(2, 1).sample(g, 1'000'000);
  const double v[] = {2, 4, 8};
  const auto d = estimate_matuszewska(z, v);
  const bool ok = std::abs(d.matuszewska_upper - 2) <= 0.4 && std::abs(d.hill_index - 2) <= 0.1;
  return {ok, fmt("matuszewska=%.4f hill=%.4f", d.matuszewska_upper, d.hill_index)};
}

struct Criterion {
  int id;
  const char* name;
  Outcome (*run)();
};

const Criterion kCriteria[] = {
    {1, "finite-horizon entrance ratio", entrance_ratio},
    {2, "finite-horizon ruin ratio", ruin_ratio},
    {3, "uniformity trend over t", uniformity_trend},
    {4, "global-horizon entrance ratio", global_horizon},
    {5, "Breiman product tail", breiman},
    {6, "single big jump", big_jump},
    {7, "tail asymptotic independence", tai},
    {8, "oracle suites", oracle_suites},
    {9, "Matuszewska and Hill diagnostics", tail_diagnostics},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  int only = 0;
  g_threads = default_threads();
  app.add_option("--only", only, "Run a single criterion")->check(CLI::Range(1, 9));
  app.add_option("--threads", g_threads, "Worker threads")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  int failed = 0;
  for (const auto& c : kCriteria) {
    if (only != 0 && c.id != only) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::printf("[%s] criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
