#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "twofold/flow.hpp"
#include "twofold/oracle_family.hpp"

using namespace twofold;
using namespace twofold::hamiltonian7;

TEST(IntegrateToSigma, UpperFromInteriorPoint) {
  const auto hit = integrate_to_sigma(make_system(0, 0), Side::Upper, {0.3, 0.0}, Direction::Forward);
  EXPECT_NEAR(hit.x, 0.4, 1e-8);
  EXPECT_GT(hit.elapsed, 0.0);
  EXPECT_EQ(hit.arc.tag, ArcTag::Upper);
}

TEST(IntegrateToSigma, UpperFromVisibleFold) {
  EXPECT_NEAR(integrate_to_sigma(make_system(0, 0), Side::Upper, {0.0, 0.0}, Direction::Forward).x, 0.5, 1e-8);
}

TEST(IntegrateToSigma, LowerBackward) {
  EXPECT_NEAR(integrate_to_sigma(make_system(0, 0), Side::Lower, {0.1, 0.0}, Direction::Backward).x, 0.48284271,
              1e-8);
}

TEST(IntegrateToSigma, LeavingTheBoxIsReported) {
  try {
    FilippovSystem z = make_system(0, 0);
    z.upper = {Poly({{0, 0, 1.0}}), Poly()};  // uniform drift to the right, never returns
    integrate_to_sigma(z, Side::Upper, {1.0, 0.5}, Direction::Forward);
    FAIL() << "expected LeftDomain";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LeftDomain);
  }
}

TEST(IntegrateToSigma, WrongDepartureIsRejected) {
  // at x = 0.4 the upper field points down into the lower half-plane
  try {
    integrate_to_sigma(make_system(0, 0), Side::Upper, {0.4, 0.0}, Direction::Forward);
    FAIL() << "expected DomainError";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DomainError);
  }
}

TEST(HalfMapUp, IndependentOfParameters) {
  for (double a : {-0.1, 0.0, 0.1})
    for (double b : {-0.05, 0.05}) EXPECT_NEAR(half_map_up(make_system(a, b), 0.0), 0.5, 1e-8);
}

TEST(HalfMapUp, PrintedValues) {
  const auto z = make_system(0, 0);
  EXPECT_NEAR(half_map_up(z, 0.3), 0.4, 1e-8);
  EXPECT_NEAR(half_map_up(z, 0.1), 0.48989795, 1e-8);
}

TEST(HalfMapDownBackward, PrintedValues) {
  EXPECT_NEAR(half_map_down_backward(make_system(0, 0), 0.0), 0.5, 1e-8);
  EXPECT_NEAR(half_map_down_backward(make_system(0.1, 0.02), 0.1), 0.48, 1e-8);
  EXPECT_NEAR(half_map_down_backward(make_system(0, 0), 0.1), 0.48284271, 1e-8);
}

TEST(HalfMapDownForward, ClosesTheTwoFoldCycle) {
  EXPECT_NEAR(half_map_down_forward(make_system(0, 0), 0.5), 0.0, 1e-7);
}

TEST(HalfMapDownForward, InvertsTheBackwardMap) {
  const auto z = make_system(0, 0);
  EXPECT_NEAR(half_map_down_forward(z, 0.48284271247461906), 0.1, 1e-7);
  for (double x : {0.05, 0.1, 0.2}) EXPECT_NEAR(half_map_down_forward(z, half_map_down_backward(z, x)), x, 1e-7);
}

TEST(HalfMapUpBackward, InvertsTheForwardMap) {
  const auto z = make_system(0.02, 0.0);
  for (double x : {0.02, 0.1, 0.2}) EXPECT_NEAR(half_map_up_backward(z, half_map_up(z, x)), x, 1e-7);
}

TEST(FilippovOrbit, SpiralsInwardTowardTheTwoFoldCycle) {
  const auto tr = filippov_orbit(make_system(0, 0), {0.3, 0.0}, 10.0);
  std::vector<double> returns;  // landings near the two-fold
  for (double x : tr.sigma_hits())
    if (x < 0.25) returns.push_back(x);
  ASSERT_GE(returns.size(), 4u);
  EXPECT_LT(returns.front(), 0.3);
  for (std::size_t k = 1; k < returns.size(); ++k) {
    EXPECT_LT(returns[k], returns[k - 1]);
    EXPECT_GT(returns[k], 0.0);
  }
}

TEST(FilippovOrbit, SlidesAwayFromTheUnstablePseudoEquilibrium) {
  const auto tr = filippov_orbit(make_system(-0.1, -0.02), {-0.05, 0.0}, 10.0);
  ASSERT_GE(tr.arcs.size(), 2u);
  const Arc& slide = tr.arcs.front();
  EXPECT_EQ(slide.tag, ArcTag::Sliding);
  const double end = slide.samples.back().x;
  EXPECT_TRUE(std::abs(end) < 1e-9 || std::abs(end + 0.1) < 1e-9) << end;
  // starting right of p^u ~ -0.0519 the slide runs to the fold at 0
  EXPECT_NEAR(end, 0.0, 1e-9);
  for (const auto& s : slide.samples) EXPECT_EQ(s.y, 0.0);
}

TEST(FilippovOrbit, ZeroTimeGivesSingleArc) {
  const auto tr = filippov_orbit(make_system(0, 0), {0.1, 0.8}, 0.0);
  ASSERT_EQ(tr.arcs.size(), 1u);
  EXPECT_EQ(tr.arcs[0].t0, tr.arcs[0].t1);
  EXPECT_EQ(tr.termination, Termination::TimeExhausted);
}

TEST(FilippovOrbit, StartOutsideBoxLeavesDomain) {
  EXPECT_EQ(filippov_orbit(make_system(0, 0), {3.0, 0.0}, 5.0).termination, Termination::LeftDomain);
}

TEST(FilippovOrbit, EscapingStartIsRefusedByDefault) {
  const auto z = make_system(0.1, 0.0);
  EXPECT_EQ(filippov_orbit(z, {0.05, 0.0}, 5.0).termination, Termination::EscapingAmbiguity);
  OrbitOptions o;
  o.escape = EscapePolicy::Upper;
  o.max_sigma_hits = 1;
  const auto tr = filippov_orbit(z, {0.05, 0.0}, 5.0, o);
  EXPECT_EQ(tr.termination, Termination::ReachedSigma);
  EXPECT_EQ(tr.arcs.front().tag, ArcTag::Upper);
}

TEST(FilippovOrbit, StopsAtAttractingPseudoEquilibrium) {
  // X = (-x, -1), Y = (-x, 1): all of the line slides, Z^s = (-x, 0)
  FilippovSystem z;
  z.upper = {Poly({{1, 0, -1.0}}), Poly({{0, 0, -1.0}})};
  z.lower = {Poly({{1, 0, -1.0}}), Poly({{0, 0, 1.0}})};
  const auto tr = filippov_orbit(z, {0.5, 0.0}, 50.0);
  EXPECT_EQ(tr.termination, Termination::PseudoEquilibrium);
  ASSERT_EQ(tr.arcs.size(), 1u);
  EXPECT_NEAR(tr.arcs[0].samples.back().x, 0.0, 1e-11);
}

TEST(FilippovOrbit, ConservesHamiltoniansOnEveryArc) {
  struct Run {
    double a, b;
    Vec2 start;
  };
  for (const Run& r : {Run{0, 0, {0.3, 0}}, Run{0.05, 0.01, {0.2, 0}}, Run{-0.05, -0.003, {0.1, 0.05}},
                       Run{0.1, 0.02, {0.15, -0.02}}, Run{-0.1, -0.02, {-0.05, 0}}}) {
    const auto tr = filippov_orbit(make_system(r.a, r.b), r.start, 10.0);
    ASSERT_FALSE(tr.arcs.empty());
    for (const auto& arc : tr.arcs) {
      if (arc.tag == ArcTag::Sliding) continue;
      const Side side = arc.tag == ArcTag::Upper ? Side::Upper : Side::Lower;
      const auto& s0 = arc.samples.front();
      const auto& s1 = arc.samples.back();
      EXPECT_LE(std::abs(hamiltonian_value(side, r.a, r.b, {s1.x, s1.y}) -
                         hamiltonian_value(side, r.a, r.b, {s0.x, s0.y})),
                1e-9);
    }
  }
}

TEST(HalfMapUp, MatchesClosedFormAtRandomPoints) {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 0.3);
  const auto z = make_system(0, 0);
  for (int k = 0; k < 20; ++k) {
    const double x = u(rng);
    EXPECT_LE(std::abs(half_map_up(z, x) - exact_xi_plus(x)), 1e-8) << x;
  }
}

TEST(HalfMapUp, DepartsQuadraticallyFromTheFold) {
  const auto z = make_system(0, 0);
  const double q = half_map_up(z, 0.0);
  const double h = 1e-2;
  const double ratio = std::abs(half_map_up(z, h) - q) / std::abs(half_map_up(z, h / 2) - q);
  EXPECT_GE(ratio, 3.6);
  EXPECT_LE(ratio, 4.4);
}

TEST(HalfMapDownForward, TimeReversalIdentityOnDomain) {
  for (double a : {-0.05, 0.0, 0.05}) {
    const auto z = make_system(a, 0.01);
    for (int i = 0; i <= 10; ++i) {
      const double x = std::max(a, 0.0) + 0.025 * i;
      EXPECT_NEAR(half_map_down_forward(z, half_map_down_backward(z, x)), x, 1e-7) << a << " " << x;
    }
  }
}

TEST(IntegratorOptions, ValidationRejectsNonPositiveTolerance) {
  IntegratorOptions o;
  o.rel_tol = 0.0;
  EXPECT_THROW(o.validate(), Error);
  IntegratorOptions p;
  EXPECT_NO_THROW(p.validate());
}

TEST(TrajectoryCsv, HasHeaderAndOneRowPerSample) {
  const auto tr = filippov_orbit(make_system(0, 0), {0.3, 0.0}, 1.0);
  std::ostringstream os;
  write_trajectory_csv(os, tr);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,x,y,arc_index,field_tag");
  std::size_t rows = 0, samples = 0;
  while (std::getline(in, line)) ++rows;
  for (const auto& a : tr.arcs) samples += a.samples.size();
  EXPECT_EQ(rows, samples);
}
