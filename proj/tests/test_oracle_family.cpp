#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "twofold/oracle_family.hpp"

using namespace twofold;
using namespace twofold::hamiltonian7;

TEST(MakeSystem, LowerNormalAtOrigin) {
  const auto z = make_system(0, 0);
  for (double x : {-0.3, 0.1, 0.4}) EXPECT_DOUBLE_EQ(z.lower.dy(x, 0.0), x - 3 * x * x);
}

TEST(MakeSystem, LowerNormalExpanded) {
  const auto z = make_system(0.1, 0.02);
  for (double x : {-0.3, 0.1, 0.4}) EXPECT_NEAR(z.lower.dy(x, 0.0), -3 * x * x + 1.36 * x - 0.106, 1e-15);
}

TEST(MakeSystem, UpperFieldAtOrigin) {
  const Vec2 v = make_system(0, 0).upper({0.0, 0.0});
  EXPECT_EQ(v.x, 1.0);
  EXPECT_EQ(v.y, 0.0);
}

TEST(MakeSystem, RejectsParametersOutsideRange) {
  try {
    make_system(0.3, 0.0);
    FAIL() << "expected DomainError";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DomainError);
  }
}

TEST(ExactXiPlus, PrintedValues) {
  EXPECT_DOUBLE_EQ(exact_xi_plus(0.0), 0.5);
  EXPECT_NEAR(exact_xi_plus(0.3), 0.4, 1e-15);
  EXPECT_EQ(exact_xi_plus(0.5), 0.0);
}

TEST(ExactXiMinus, PrintedValues) {
  EXPECT_DOUBLE_EQ(exact_xi_minus(0, 0, 0), 0.5);
  EXPECT_NEAR(exact_xi_minus(0, 0, 0.1), 0.48284271, 1e-8);
  EXPECT_NEAR(exact_xi_minus(0.1, 0.02, 0.1), 0.48, 1e-15);
}

TEST(ExactXiMinus, RejectsPointsBeforeTheFold) {
  try {
    exact_xi_minus(0.1, 0.0, 0.05);
    FAIL() << "expected DomainError";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DomainError);
  }
}

TEST(ExactDisplacement, PrintedValues) {
  EXPECT_EQ(exact_displacement(0, 0, 0), 0.0);
  EXPECT_NEAR(exact_displacement(0, 0, 0.1), 0.00705524, 1e-8);
  EXPECT_NEAR(exact_displacement(0, 0, 0.1), (-0.8 - std::sqrt(1.28) + 2 * std::sqrt(0.96)) / 4, 1e-15);
}

TEST(ExactDisplacement, LeadingTermIsSquare) {
  // f = x0^2 + O(x0^3): the implied cubic constant stays bounded
  for (double x0 : {0.02, 0.05, 0.1}) {
    const double c = std::abs(exact_displacement(0, 0, x0) - x0 * x0) / (x0 * x0 * x0);
    EXPECT_LT(c, 5.0) << x0;
  }
}

TEST(HamiltonianValue, PrintedValues) {
  EXPECT_EQ(hamiltonian_value(Side::Upper, 0.03, -0.01, {0.0, 0.0}), 0.0);
  EXPECT_NEAR(hamiltonian_value(Side::Upper, 0, 0, {0.5, 0.0}), 0.0, 1e-15);
  EXPECT_EQ(hamiltonian_value(Side::Lower, 0, 0, {0.0, 0.0}), 0.0);
  EXPECT_NEAR(hamiltonian_value(Side::Lower, 0, 0, {0.5, 0.0}), 0.0, 1e-15);
}

TEST(Hamiltonians, FieldsAreSkewGradients) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> par(-0.1, 0.1), pt(-0.6, 0.6);
  for (int s = 0; s < 5; ++s) {
    const double a = par(rng), b = par(rng);
    const auto z = make_system(a, b);
    const auto h = hamiltonians(a, b);
    for (int k = 0; k < 50; ++k) {
      const Vec2 p{pt(rng), pt(rng)};
      EXPECT_NEAR(z.upper.dx(p), h.upper.d_dy()(p), 1e-14);
      EXPECT_NEAR(z.upper.dy(p), -h.upper.d_dx()(p), 1e-14);
      EXPECT_NEAR(z.lower.dx(p), h.lower.d_dy()(p), 1e-14);
      EXPECT_NEAR(z.lower.dy(p), -h.lower.d_dx()(p), 1e-14);
    }
  }
}

TEST(ExactMaps, LandOnTheSameLevelSet) {
  for (int i = 0; i <= 30; ++i) {
    const double x0 = 0.01 * i;
    EXPECT_NEAR(hamiltonian_value(Side::Upper, 0, 0, {exact_xi_plus(x0), 0.0}),
                hamiltonian_value(Side::Upper, 0, 0, {x0, 0.0}), 1e-14);
    for (double a : {-0.05, 0.0, 0.05})
      for (double b : {-0.02, 0.02}) {
        if (x0 < a) continue;
        EXPECT_NEAR(hamiltonian_value(Side::Lower, a, b, {exact_xi_minus(a, b, x0), 0.0}),
                    hamiltonian_value(Side::Lower, a, b, {x0, 0.0}), 1e-14);
      }
  }
}

TEST(ExactXiMinus, RadicalCollapsesAtTheFold) {
  for (int i = -4; i <= 4; ++i)
    for (int j = -4; j <= 4; ++j) {
      const double a = 0.025 * i, b = 0.025 * j;
      EXPECT_NEAR(exact_xi_minus(a, b, a), 0.5 - b, 1e-15) << a << "," << b;
    }
}

TEST(ExactCurves, ClosedForms) {
  EXPECT_NEAR(exact_beta2(0.05), (1 - std::sqrt(0.99)) / 2, 1e-17);
  EXPECT_NEAR(exact_beta2(0.05), 0.0025063, 1e-7);
  EXPECT_NEAR(exact_beta3(-0.05), -0.0041667, 1e-7);
  // the defining conditions hold on the closed forms
  for (double a : {0.01, 0.03, 0.05}) EXPECT_NEAR(exact_displacement(a, exact_beta2(a), a), 0.0, 1e-15);
  for (double a : {-0.05, -0.03, -0.01}) EXPECT_NEAR(exact_xi_minus(a, exact_beta3(a), 0.0), 0.5, 1e-15);
}
