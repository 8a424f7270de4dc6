#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <sstream>

#include "twofold/bifurcation.hpp"
#include "twofold/oracle_family.hpp"

using namespace twofold;
using namespace twofold::hamiltonian7;

namespace {

MapContext ctx(double a, double b) { return prepare(make_system(a, b)); }

// One return of the Filippov orbit from (x, 0): the second arrival on the line.
double one_return(const FilippovSystem& z, double x) {
  OrbitOptions o;
  o.max_sigma_hits = 2;
  const auto tr = filippov_orbit(z, {x, 0.0}, 100.0, o);
  EXPECT_EQ(tr.termination, Termination::ReachedSigma);
  return tr.arcs.back().samples.back().x;
}

class Traces : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    traces_ = new std::array<CurveTrace, 5>();
    TraceOptions o;
    o.workers = 4;
    for (int id = 1; id <= 5; ++id)
      (*traces_)[id - 1] =
          trace_curve(Family::hamiltonian(), id, default_alpha_grid(curve_on_positive_side(id) ? 1 : -1), o);
  }
  static void TearDownTestSuite() {
    delete traces_;
    traces_ = nullptr;
  }
  static const CurveTrace& curve(int id) { return (*traces_)[id - 1]; }
  static std::array<CurveTrace, 5>* traces_;
};

std::array<CurveTrace, 5>* Traces::traces_ = nullptr;

}  // namespace

TEST(FindCycles, StableCrossingCycleBelowTheOrigin) {
  const auto cycles = find_cycles(ctx(0, -0.01));
  ASSERT_EQ(cycles.size(), 1u);
  EXPECT_EQ(cycles[0].kind, CycleKind::Crossing);
  EXPECT_NEAR(cycles[0].x_star, 0.12686, 1e-5);
  EXPECT_EQ(cycles[0].stability, Stability::Stable);
  EXPECT_GT(cycles[0].f_prime, 0.0);
}

TEST(FindCycles, NoCycleAboveTheOrigin) { EXPECT_TRUE(find_cycles(ctx(0, 0.005)).empty()); }

TEST(FindCycles, CriticalCrossingCycleOnBetaThree) {
  const auto cycles = find_cycles(ctx(-0.05, exact_beta3(-0.05)));
  ASSERT_EQ(cycles.size(), 1u);
  EXPECT_EQ(cycles[0].kind, CycleKind::CriticalCrossing);
  EXPECT_EQ(cycles[0].x_star, 0.0);
  EXPECT_EQ(cycles[0].stability, Stability::Stable);
}

TEST(FindCycles, ZeroCountLadderAtCoincidentFolds) {
  // beta > 0: no zero on (0, lambda); beta < 0: exactly one interior zero
  for (int k = 1; k <= 10; ++k) {
    const double beta = 0.001 * k;
    EXPECT_TRUE(find_cycles(ctx(0, beta)).empty()) << beta;
    const auto below = find_cycles(ctx(0, -0.0005 * k));
    ASSERT_EQ(below.size(), 1u) << -0.0005 * k;
    EXPECT_EQ(below[0].kind, CycleKind::Crossing);
    EXPECT_EQ(below[0].stability, Stability::Stable);
  }
}

TEST(FindCycles, TwoZerosBetweenBetaTwoAndBetaOne) {
  const double a = 0.04;
  const double b2 = exact_beta2(a), b1 = 2 * a * a;  // beta_1 ~ 2 a^2 bounds the window from above
  for (int k = 1; k <= 8; ++k) {
    const double beta = b2 + (0.95 * b1 - b2) * k / 9.0;
    const auto cycles = find_cycles(ctx(a, beta));
    ASSERT_EQ(cycles.size(), 2u) << beta;
    // smaller abscissa: f' < 0 (unstable); larger: f' > 0 (stable)
    EXPECT_LT(cycles[0].x_star, cycles[1].x_star);
    EXPECT_LT(cycles[0].f_prime, 0.0);
    EXPECT_EQ(cycles[0].stability, Stability::Unstable);
    EXPECT_GT(cycles[1].f_prime, 0.0);
    EXPECT_EQ(cycles[1].stability, Stability::Stable);
  }
}

TEST(FindCycles, CrossingCyclesCloseUnderTheFlow) {
  for (auto [a, b] : {std::pair{0.0, -0.01}, std::pair{0.04, 0.002}, std::pair{-0.02, -0.003}}) {
    const MapContext c = ctx(a, b);
    const auto z = make_system(a, b);
    for (const auto& cyc : find_cycles(c)) {
      if (cyc.kind != CycleKind::Crossing) continue;
      EXPECT_NEAR(one_return(z, cyc.x_star + c.shift), cyc.x_star + c.shift, 1e-6);
      if (cyc.stability == Stability::Stable) {
        const double x0 = cyc.x_star + 0.01;
        EXPECT_LT(std::abs(one_return(z, x0) - cyc.x_star), 0.01);
      }
    }
  }
}

TEST(FindPseudoEquilibrium, UnstableForNegativeAlpha) {
  const auto pe = find_pseudo_equilibrium(ctx(-0.1, 0));
  ASSERT_TRUE(pe.has_value());
  EXPECT_NEAR(pe->p, -0.0519, 1e-3);
  EXPECT_EQ(pe->stability, Stability::Unstable);
  EXPECT_GT(pe->n_prime, 0.0);
}

TEST(FindPseudoEquilibrium, StableForPositiveAlpha) {
  const auto pe = find_pseudo_equilibrium(ctx(0.1, 0));
  ASSERT_TRUE(pe.has_value());
  EXPECT_GT(pe->p, 0.0);
  EXPECT_LT(pe->p, 0.1);
  EXPECT_EQ(pe->stability, Stability::Stable);
}

TEST(FindPseudoEquilibrium, NoneAtTheTwoFold) { EXPECT_FALSE(find_pseudo_equilibrium(ctx(0, 0)).has_value()); }

TEST(FindPseudoEquilibrium, CertificateOnBothSides) {
  for (int k = 1; k <= 10; ++k) {
    for (int side : {-1, 1}) {
      const double a = side * 0.01 * k;
      const auto pe = find_pseudo_equilibrium(ctx(a, 0.003 * (k % 3 - 1)));
      ASSERT_TRUE(pe.has_value());
      EXPECT_GT(pe->n_prime, 0.0);
      EXPECT_GT(pe->p, std::min(0.0, a));
      EXPECT_LT(pe->p, std::max(0.0, a));
      EXPECT_EQ(pe->stability, side > 0 ? Stability::Stable : Stability::Unstable);
    }
  }
}

TEST(LandingGap, OnBetaTwoTheLandingIsTheFold) {
  const MapContext c = ctx(0.05, exact_beta2(0.05));
  const auto pe = find_pseudo_equilibrium(c);
  EXPECT_NEAR(landing_point(c), 0.05, 1e-7);
  EXPECT_NEAR(landing_gap(c), 0.05 - pe->p, 1e-7);
  EXPECT_GT(landing_gap(c), 0.0);
}

TEST(LandingGap, OnBetaThreeTheLandingIsTheFold) {
  const MapContext c = ctx(-0.05, exact_beta3(-0.05));
  const auto pe = find_pseudo_equilibrium(c);
  EXPECT_NEAR(landing_point(c), 0.0, 1e-7);
  EXPECT_NEAR(landing_gap(c), -pe->p, 1e-7);
  EXPECT_GT(landing_gap(c), 0.0);
}

TEST(LandingGap, MonotoneInBeta) {
  for (double a : {0.03, -0.03}) {
    double prev = 0.0;
    for (int k = 0; k <= 10; ++k) {
      const double b = (a > 0 ? 0.0 : -0.0036) + 0.00036 * k;
      const double g = landing_gap(ctx(a, b));
      if (k > 0) {
        if (a > 0)
          EXPECT_GT(g, prev) << b;
        else
          EXPECT_LT(g, prev) << b;
      }
      prev = g;
    }
  }
}

TEST_F(Traces, AllPointsConverge) {
  for (int id = 1; id <= 5; ++id) EXPECT_EQ(curve(id).converged_count(), curve(id).points.size()) << id;
}

TEST_F(Traces, CurveTwoMatchesClosedForm) {
  for (const auto& p : curve(2).points) EXPECT_NEAR(p.beta, exact_beta2(p.alpha), 1e-6) << p.alpha;
  const auto pt = trace_point(Family::hamiltonian(), 2, 0.05, {});
  ASSERT_TRUE(pt.converged);
  EXPECT_NEAR(pt.beta, 0.0025063, 1e-7);
}

TEST_F(Traces, CurveThreeMatchesClosedForm) {
  for (const auto& p : curve(3).points) EXPECT_NEAR(p.beta, exact_beta3(p.alpha), 1e-6) << p.alpha;
  const auto pt = trace_point(Family::hamiltonian(), 3, -0.05, {});
  ASSERT_TRUE(pt.converged);
  EXPECT_NEAR(pt.beta, -0.0041667, 1e-7);
}

TEST_F(Traces, CurveOneNearLeadingTerm) {
  const auto pt = trace_point(Family::hamiltonian(), 1, 0.02, {});
  ASSERT_TRUE(pt.converged);
  EXPECT_NEAR(pt.beta, 0.0008, 0.15 * 0.0008);
}

TEST_F(Traces, LeadingCoefficients) {
  EXPECT_NEAR(curve(1).leading_coefficient, 2.0, 0.3);
  EXPECT_NEAR(curve(2).leading_coefficient, 1.0, 0.15);
  EXPECT_NEAR(curve(3).leading_coefficient, -2.0, 0.3);
  for (int id = 1; id <= 3; ++id) EXPECT_GT(curve(id).uncertainty, 0.0);
}

TEST_F(Traces, Orderings) {
  for (std::size_t k = 0; k < curve(1).points.size(); ++k) {
    const double a = curve(1).points[k].alpha;
    if (a > 0.05) continue;
    ASSERT_EQ(curve(2).points[k].alpha, a);
    ASSERT_EQ(curve(4).points[k].alpha, a);
    EXPECT_GT(curve(1).points[k].beta, curve(2).points[k].beta) << a;
    EXPECT_GT(curve(2).points[k].beta, curve(4).points[k].beta) << a;
    EXPECT_GT(curve(4).points[k].beta, 0.0) << a;
  }
  for (std::size_t k = 0; k < curve(3).points.size(); ++k) {
    const double a = curve(3).points[k].alpha;
    if (a < -0.05) continue;
    ASSERT_EQ(curve(5).points[k].alpha, a);
    EXPECT_LT(curve(3).points[k].beta, curve(5).points[k].beta) << a;
    EXPECT_LT(curve(5).points[k].beta, 0.0) << a;
  }
}

TEST(DoubleZero, LocationScalesWithAlpha) {
  for (double a : {0.01, 0.02, 0.04}) {
    const auto pt = trace_point(Family::hamiltonian(), 1, a, {});
    ASSERT_TRUE(pt.converged);
    ASSERT_TRUE(pt.x_star.has_value());
    EXPECT_NEAR(*pt.x_star / a, 2.0, 0.2) << a;
    const auto cycles = find_cycles(ctx(a, pt.beta));
    ASSERT_EQ(cycles.size(), 1u);
    EXPECT_EQ(cycles[0].stability, Stability::SemiStable);
  }
}

TEST(TracePoint, WrongSideIsFlagged) {
  const auto pt = trace_point(Family::hamiltonian(), 1, -0.02, {});
  EXPECT_FALSE(pt.converged);
  EXPECT_FALSE(pt.diagnostic.empty());
}

TEST(TracePoint, MissingSignChangeIsABracketFailure) {
  TraceOptions o;
  o.beta_lo = 0.01;  // beta_2(0.02) ~ 4e-4 lies below the window
  const auto pt = trace_point(Family::hamiltonian(), 2, 0.02, o);
  EXPECT_FALSE(pt.converged);
  EXPECT_NE(pt.diagnostic.find("BracketFailure"), std::string::npos);
}

TEST(TraceCurve, RejectsUnknownId) { EXPECT_THROW(trace_curve(Family::hamiltonian(), 6, {0.01}), Error); }

TEST(InterpolateCurve, ReproducesTracedPointsAndScalesBelow) {
  CurveTrace t;
  t.curve_id = 2;
  for (double a : {0.01, 0.02, 0.04}) t.points.push_back({a, 1.1 * a * a, 0.0, true, "", std::nullopt});
  EXPECT_NEAR(*interpolate_curve(t, 0.02), 1.1 * 0.0004, 1e-15);
  EXPECT_NEAR(*interpolate_curve(t, 0.005), 1.1 * 0.005 * 0.005, 1e-15);
  EXPECT_FALSE(interpolate_curve(t, 0.05).has_value());
  EXPECT_FALSE(interpolate_curve(t, -0.02).has_value());
}

TEST(FamilyTemplate, InstantiatesAffineCoefficients) {
  Family f;
  f.kind = Family::Kind::PolynomialTemplate;
  f.id = "affine";
  f.terms[0] = {{0, 0, 1.0, 0.0, 0.0}, {0, 1, -1.0, 0.0, 0.0}};
  f.terms[1] = {{1, 0, 1.0, 0.0, 0.0}, {3, 0, -8.0, 0.0, 0.0}};
  f.terms[2] = {{0, 0, -1.0, 0.0, 0.0}, {0, 1, -1.0, 0.0, 0.0}};
  f.terms[3] = {{2, 0, -3.0, 0.0, 0.0}, {1, 0, 1.0, 4.0, -2.0}, {0, 0, 0.0, -1.0, 0.0}};
  const auto z = f.instantiate(0.02, 0.01);
  for (double x : {-0.1, 0.0, 0.2}) EXPECT_NEAR(z.lower.dy(x, 0.0), -3 * x * x + (1 + 0.08 - 0.02) * x - 0.02, 1e-15);
  EXPECT_EQ(z.upper.dy.terms(), make_system(0, 0).upper.dy.terms());
}

TEST(FamilyTemplate, TimeReversedFlagReflectsMembers) {
  Family f = Family::hamiltonian();
  f.time_reversed = true;
  const auto z = f.instantiate(0.01, 0.0);
  const auto r = reflect_time_reversed(make_system(0.01, 0.0));
  EXPECT_EQ(z.upper.dy.terms(), r.upper.dy.terms());
  EXPECT_EQ(z.lower.dx.terms(), r.lower.dx.terms());
}

TEST(TracesOutput, CsvAndSummary) {
  CurveTrace t;
  t.curve_id = 4;
  t.points.push_back({0.01, 2.5e-5, 1e-12, true, "", std::nullopt});
  t.points.push_back({0.02, 0.0, 0.0, false, "BracketFailure: x", std::nullopt});
  std::ostringstream os;
  write_traces_csv(os, {t});
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "curve_id,alpha,beta,residual,converged");
  const auto j = traces_summary({t});
  EXPECT_EQ(j[0]["converged"].get<int>(), 1);
  EXPECT_EQ(j[0]["failures"].size(), 1u);
}
