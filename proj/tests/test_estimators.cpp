#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "heavyrisk/error.hpp"
#include "heavyrisk/estimators.hpp"

using namespace heavyrisk;

namespace {

const double kDiag = 1.0 / std::sqrt(2.0);

ClaimModel three_atoms(double alpha = 2.0) {
  return ClaimModel::spectral(UnivariateLaw::pareto(alpha, 1),
                              {{{1, 0}, 1.0 / 3}, {{0, 1}, 1.0 / 3}, {{kDiag, kDiag}, 1.0 / 3}});
}

RiskModelSpec make_spec(ReturnProcess returns, UnivariateLaw interarrival = UnivariateLaw::exponential(1),
                        PremiumPlan premiums = PremiumPlan::zero(2)) {
  return RiskModelSpec{three_atoms(), IidCoupling{}, RenewalModel(std::move(interarrival)), std::move(returns),
                       std::move(premiums), CapitalAllocation(1.0, {0.5, 0.5})};
}

const RareSet kHalf = RareSet::halfspace({0.5, 0.5}, 1);

// Pareto(2, 1) tail of the halfspace projection: Y_A = R * y_a(atom).
double tail_a(double x) { return (2 * std::pow(x / 0.5, -2.0) + std::pow(x / kDiag, -2.0)) / 3.0; }

double pooled_se(const EstimateReport& a, const EstimateReport& b) { return std::hypot(a.std_error, b.std_error); }

}  // namespace

TEST(MakeReport, ZeroHitsAreFlagged) {
  const auto r = make_report(0, 1000, 7);
  EXPECT_TRUE(r.zero_hits);
  EXPECT_EQ(r.estimate, 0.0);
  EXPECT_GT(r.ci_hi, 0.0);
  EXPECT_FALSE(r.note.empty());
  const auto s = make_report(10, 1000, 7);
  EXPECT_FALSE(s.zero_hits);
  EXPECT_NEAR(s.std_error, std::sqrt(0.01 * 0.99 / 1000), 1e-15);
}

TEST(McEntrance, DegenerateClaimsGiveExactIndicator) {
  RiskModelSpec spec{ClaimModel::spectral(UnivariateLaw::degenerate(3.0 * std::sqrt(2.0)), {{{kDiag, kDiag}, 1.0}}),
                     IidCoupling{},
                     RenewalModel(UnivariateLaw::degenerate(0.5)),
                     ReturnProcess::deterministic(0.0),
                     PremiumPlan::zero(2),
                     CapitalAllocation(1.0, {0.5, 0.5})};
  // One arrival at t/2 with D(t) = (3, 3): y_a = 3.
  EXPECT_EQ(mc_entrance_prob(spec, kHalf, 2.9, 0.99, {1000, 1, 1}).estimate, 1.0);
  EXPECT_EQ(mc_entrance_prob(spec, kHalf, 3.1, 0.99, {1000, 1, 1}).estimate, 0.0);
}

TEST(McEntrance, Preconditions) {
  const auto spec = make_spec(ReturnProcess::deterministic(0.03), UnivariateLaw::degenerate(0.6));
  EXPECT_THROW(mc_entrance_prob(spec, kHalf, 10, 1.0, {999, 1, 1}), InvalidArgument);
  EXPECT_THROW(mc_entrance_prob(spec, kHalf, 10, 0.5, {1000, 1, 1}), DomainError);
}

TEST(McEntrance, AgreesWithBruteForceOracle) {
  const auto spec = make_spec(ReturnProcess::deterministic(0.03));
  const std::uint64_t n = 1'000'000;
  const auto r = mc_entrance_prob(spec, kHalf, 10, 10, {n, 11, 2});

  // Straightforward summation with an unrelated generator.
  std::mt19937_64 g(12345);
  std::exponential_distribution<double> gap(1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> atom(0, 2);
  const double dirs[3][2] = {{1, 0}, {0, 1}, {kDiag, kDiag}};
  std::uint64_t hits = 0;
  for (std::uint64_t p = 0; p < n; ++p) {
    double t = gap(g), d1 = 0.0, d2 = 0.0;
    while (t <= 10.0) {
      const double radius = 1.0 / std::sqrt(1.0 - u(g));
      const int k = atom(g);
      d1 += radius * dirs[k][0] * std::exp(-0.03 * t);
      d2 += radius * dirs[k][1] * std::exp(-0.03 * t);
      t += gap(g);
    }
    hits += 0.5 * d1 + 0.5 * d2 > 10.0;
  }
  const auto oracle = make_report(hits, n, 0);
  EXPECT_NEAR(r.estimate, oracle.estimate, 3 * pooled_se(r, oracle));
}

TEST(McEntrance, RegularVariationSlope) {
  // A short horizon (E[N] = 0.25) keeps the two-claim correction, of order
  // alpha E[N] E[Y_A] / x, near 6% at x = 10.
  const auto spec = make_spec(ReturnProcess::deterministic(0.03));
  const McSettings mc{10'000'000, 21, 2};
  const double ts[] = {0.25};
  const double xs[] = {10.0, 100.0};
  const auto hits = count_entrances(spec, kHalf, xs, ts, mc);
  ASSERT_GT(hits[1], 0u);
  EXPECT_NEAR(static_cast<double>(hits[0]) / hits[1], 100.0, 30.0) << hits[0] << " / " << hits[1];
}

TEST(McEntrance, ThreadCountDoesNotChangeCounts) {
  const auto spec = make_spec(ReturnProcess::brownian(0.03, 0.1));
  const double xs[] = {5.0, 20.0};
  const double ts[] = {2.0, 5.0};
  EXPECT_EQ(count_entrances(spec, kHalf, xs, ts, {50000, 3, 1}), count_entrances(spec, kHalf, xs, ts, {50000, 3, 4}));
}

TEST(AsymptoticFinite, PoissonClosedForm) {
  const auto spec = make_spec(ReturnProcess::deterministic(0.03));
  const double closed = (1e-2 / 3) * (1 - std::exp(-0.6)) / 0.06;
  EXPECT_NEAR(asymptotic_entrance_finite(spec, kHalf, 10, 10).value, closed, 1e-12 * closed);
  const auto zero = make_spec(ReturnProcess::deterministic(0.0));
  EXPECT_NEAR(asymptotic_entrance_finite(zero, kHalf, 10, 10).value, 10 * tail_a(10), 1e-15);
}

TEST(AsymptoticFinite, BrownianFactorizes) {
  // Far from the threshold F_A(x e^xi) = F_A(x) e^(-2 xi), so the integral is
  // F_A(x) int_0^t exp(s phi(2)) ds with phi(2) = -2 mu + 2 sigma^2.
  const auto spec = make_spec(ReturnProcess::brownian(0.05, 0.1));
  const double x = 1e4, t = 8, phi = -0.1 + 0.02;
  const double expected = tail_a(x) * (1 - std::exp(phi * t)) / -phi;
  EXPECT_NEAR(asymptotic_entrance_finite(spec, kHalf, x, t).value, expected, 1e-8 * expected);
}

TEST(AsymptoticFinite, GammaRenewalZeroRate) {
  const auto spec = make_spec(ReturnProcess::deterministic(0.0), UnivariateLaw::gamma(2, 2));
  const double t = 6, renewal = t - (1 - std::exp(-4 * t)) / 4;
  EXPECT_NEAR(asymptotic_entrance_finite(spec, kHalf, 10, t).value, tail_a(10) * renewal, 1e-3 * tail_a(10) * renewal);
}

TEST(AsymptoticFinite, DegenerateArrivalsSum) {
  const auto spec = make_spec(ReturnProcess::deterministic(0.03), UnivariateLaw::degenerate(2));
  double expected = 0.0;
  for (int k = 1; k <= 5; ++k) expected += tail_a(10 * std::exp(0.03 * 2 * k));
  EXPECT_NEAR(asymptotic_entrance_finite(spec, kHalf, 10, 10).value, expected, 1e-15);
}

TEST(AsymptoticFinite, OutsideLambda) {
  const auto spec = make_spec(ReturnProcess::deterministic(0.03), UnivariateLaw::uniform(1, 2));
  EXPECT_THROW(asymptotic_entrance_finite(spec, kHalf, 10, 0.5), DomainError);
  const auto jd = make_spec(ReturnProcess(JumpDiffusion{0.03, 0.1, 1, UnivariateLaw::exponential(5), -1}));
  EXPECT_THROW(asymptotic_entrance_finite(jd, kHalf, 10, 1), InvalidArgument);
}

TEST(AsymptoticGlobal, InfiniteHorizon) {
  const auto spec = make_spec(ReturnProcess::deterministic(0.03));
  const auto g = asymptotic_entrance_global(spec, kHalf, 10, kInfinity);
  EXPECT_NEAR(g.value, (1e-2 / 3) / 0.06, 1e-12);
  EXPECT_NEAR(g.value, 5.556e-2, 1e-5);
  EXPECT_TRUE(g.moments.verdict);
  // Riemann sum of F_A(x) exp(-0.06 s) over [0, 500].
  double riemann = 0.0;
  const int steps = 500000;
  for (int i = 0; i < steps; ++i) riemann += tail_a(10) * std::exp(-0.06 * (i + 0.5) * 1e-3) * 1e-3;
  EXPECT_NEAR(g.value, riemann, 1e-8);
}

TEST(AsymptoticGlobal, FiniteMatchesFiniteFormula) {
  const auto spec = make_spec(ReturnProcess::deterministic(0.03));
  for (double t : {1.0, 10.0, 200.0}) {
    const double a = asymptotic_entrance_global(spec, kHalf, 10, t).value;
    const double b = asymptotic_entrance_finite(spec, kHalf, 10, t).value;
    EXPECT_NEAR(a, b, 1e-10 * b) << t;
  }
}

TEST(AsymptoticGlobal, RenewalArrivals) {
  // Gamma(2, 2) interarrivals: q = (2 / (2 + 0.06))^2, integral q / (1 - q).
  const auto spec = make_spec(ReturnProcess::deterministic(0.03), UnivariateLaw::gamma(2, 2));
  const double q = std::pow(2.0 / 2.06, 2);
  EXPECT_NEAR(asymptotic_entrance_global(spec, kHalf, 10, kInfinity).discount_integral, q / (1 - q), 1e-10);
}

TEST(AsymptoticGlobal, ZeroRateFails) {
  const auto spec = make_spec(ReturnProcess::deterministic(0.0));
  EXPECT_THROW(asymptotic_entrance_global(spec, kHalf, 10, kInfinity), AssumptionViolation);
}

TEST(TruncationHorizon, PoissonAndRenewal) {
  const auto spec = make_spec(ReturnProcess::deterministic(0.03));
  const double t0 = truncation_horizon(spec, 2.0);
  // Tail exp(-0.06 T0) / 0.06 equals 1e-4 of the head (1 - exp(-0.06 T0)) / 0.06.
  EXPECT_NEAR(std::exp(-0.06 * t0) / (1 - std::exp(-0.06 * t0)), 1e-4, 1e-12);
  const auto gamma = make_spec(ReturnProcess::deterministic(0.03), UnivariateLaw::gamma(2, 2));
  const double tg = truncation_horizon(gamma, 2.0);
  const double total = asymptotic_entrance_global(gamma, kHalf, 10, kInfinity).discount_integral;
  const double head = asymptotic_entrance_global(gamma, kHalf, 10, tg).discount_integral;
  EXPECT_NEAR((total - head) / head, 1e-4, 2e-5);
}

TEST(McRuin, ZeroPremiumsDominateEntrance) {
  const auto spec = make_spec(ReturnProcess::brownian(0.03, 0.2));
  const CapitalAllocation alloc(1.0, {0.5, 0.5});
  const auto set = ruin_to_rare(RuinSet::TotalNegative, alloc);
  const McSettings mc{100000, 31, 2};
  for (double x : {5.0, 20.0}) {
    const auto ruin = mc_ruin_prob(spec, RuinSet::TotalNegative, alloc, x, 5, mc);
    const auto entrance = mc_entrance_prob(spec, set, x, 5, mc);
    EXPECT_GE(ruin.hits, entrance.hits);
  }
}

TEST(McRuin, SmallPremiumsNegligibleAtLargeCapital) {
  const auto spec = make_spec(ReturnProcess::deterministic(0.03), UnivariateLaw::exponential(1),
                              PremiumPlan::constant({0.01, 0.01}));
  const CapitalAllocation alloc(1.0, {0.5, 0.5});
  const McSettings mc{200000, 32, 2};
  const auto ruin = mc_ruin_prob(spec, RuinSet::TotalNegative, alloc, 50, 10, mc);
  const auto entrance = mc_entrance_prob(spec, ruin_to_rare(RuinSet::TotalNegative, alloc), 50, 10, mc);
  EXPECT_LT(std::abs(ruin.estimate - entrance.estimate), 2 * pooled_se(ruin, entrance));
}

TEST(McRuin, SmallCapitalIsPreAsymptotic) {
  const auto spec = make_spec(ReturnProcess::deterministic(0.03));
  const auto r = mc_ruin_prob(spec, RuinSet::TotalNegative, CapitalAllocation(1.0, {0.5, 0.5}), 0.01, 10, {2000, 1, 1});
  EXPECT_GT(r.estimate, 0.99);
  EXPECT_NE(r.note.find("pre-asymptotic"), std::string::npos);
}

TEST(Breiman, ConstantFactorIsExact) {
  const auto model = three_atoms();
  for (double x : {10.0, 50.0}) EXPECT_NEAR(spectral_tail(model, kHalf, x / 1.3), 1.69 * spectral_tail(model, kHalf, x), 1e-15);
  const double xs[] = {10.0};
  const auto curve = breiman_check(model, UnivariateLaw::degenerate(1.3), kHalf, xs, {1'000'000, 41, 2});
  EXPECT_NEAR(curve.points[0].ratio, 1.0, 3 * curve.points[0].ratio_se);
}

TEST(Breiman, LogNormalFactor) {
  const auto theta = UnivariateLaw::lognormal(0, 0.25);
  EXPECT_NEAR(theta.moment(2), std::exp(2 * 0.25 * 0.25), 1e-12);
  const double xs[] = {30.0};
  const auto curve = breiman_check(three_atoms(), theta, kHalf, xs, {2'000'000, 42, 2});
  EXPECT_NEAR(curve.points[0].ratio, 1.0, 3 * curve.points[0].ratio_se);
}

TEST(Breiman, UniformFactorMoment) {
  const double xs[] = {10.0, 30.0};
  const auto curve = breiman_check(three_atoms(), UnivariateLaw::uniform(0.5, 1.5), kHalf, xs, {2'000'000, 43, 2});
  for (const auto& p : curve.points) {
    EXPECT_NEAR(p.reference, 13.0 / 12.0 * tail_a(p.x), 1e-15);
    EXPECT_NEAR(p.ratio, 1.0, 3 * p.ratio_se);
  }
}

TEST(Breiman, HeavyFactorRejected) {
  const double xs[] = {10.0};
  EXPECT_THROW(breiman_check(three_atoms(), UnivariateLaw::pareto(1.5, 1), kHalf, xs, {1000, 1, 1}),
               AssumptionViolation);
}

TEST(BigJump, SingleTermIsExactlyOne) {
  const double xs[] = {5.0, 50.0};
  const auto curve = single_big_jump_check(three_atoms(), kHalf, 1, xs, {100000, 51, 1});
  for (const auto& p : curve.points) EXPECT_EQ(p.ratio, 1.0);
}

TEST(BigJump, IidPairNearOne) {
  const auto model = ClaimModel::spectral(UnivariateLaw::pareto(2, 1), {{{1.0}, 1.0}});
  const double xs[] = {100.0};  // upper 1e-4 quantile of the radius
  const auto curve = single_big_jump_check(model, RareSet::or_set({1}), 2, xs, {10'000'000, 52, 2});
  EXPECT_NEAR(curve.points[0].ratio, 1.0, 0.1);
  EXPECT_FALSE(curve.flagged);
}

TEST(BigJump, ComonotoneControl) {
  const auto model = ClaimModel::spectral(UnivariateLaw::pareto(2, 1), {{{1.0}, 1.0}});
  const double xs[] = {50.0};
  const auto curve = single_big_jump_check(model, RareSet::or_set({1}), 2, xs, {1'000'000, 53, 1},
                                           SummandDependence::Comonotone);
  EXPECT_NEAR(curve.points[0].ratio, 2.0, 0.2);
  EXPECT_TRUE(curve.flagged);
}

TEST(Uniformity, SingleCell) {
  const auto spec = make_spec(ReturnProcess::deterministic(0.03));
  const double xs[] = {20.0}, ts[] = {5.0};
  const auto table = uniformity_diagnostic(spec, kHalf, xs, ts, {20000, 61, 1});
  ASSERT_EQ(table.cells.size(), 1u);
  EXPECT_DOUBLE_EQ(table.sup_deviation[0], std::abs(table.cells[0].ratio - 1.0));
  EXPECT_TRUE(table.sup_nonincreasing);
}

TEST(Uniformity, ConstantProfileAtLargeX) {
  const auto spec = make_spec(ReturnProcess::deterministic(0.03));
  const double xs[] = {100.0}, ts[] = {1.0, 2.0, 5.0};
  const auto table = uniformity_diagnostic(spec, kHalf, xs, ts, {1'000'000, 62, 2});
  EXPECT_GT(table.heterogeneity_p[0], 0.01);
}

TEST(Uniformity, ZeroHitCellsExcluded) {
  const auto spec = make_spec(ReturnProcess::deterministic(0.03));
  const double xs[] = {20.0, 1e6}, ts[] = {1.0};
  const auto table = uniformity_diagnostic(spec, kHalf, xs, ts, {2000, 63, 1});
  EXPECT_TRUE(table.cell(1, 0).excluded);
  EXPECT_FALSE(table.notes.empty());
}
