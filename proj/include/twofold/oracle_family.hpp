#pragma once

// Closed-form reference family Z_{a,b}: a piecewise-Hamiltonian system with
// a visible two-fold cycle at a = b = 0, whose half-return maps, displacement
// and unfolding parameters are all known exactly (eta(Z_{a,b}) = (a, b)).
//
//   X(x, y) = (1 - y, x - 8x^3)
//   Y(x, y) = (-1 - y, (x - a)(1 + a - 2b - 3x))

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

#include "twofold/core.hpp"
#include "twofold/error.hpp"

namespace twofold::hamiltonian7 {

inline constexpr std::string_view kFamilyId = "hamiltonian7";

inline void check_parameters(double a, double b) {
  if (!(std::abs(a) <= 0.2 && std::abs(b) <= 0.2))
    throw Error(ErrorCode::DomainError, "family parameters must satisfy |a|, |b| <= 0.2");
}

inline FilippovSystem make_system(double a, double b) {
  check_parameters(a, b);
  const double c = 1.0 + a - 2.0 * b;
  FilippovSystem z;
  z.upper.dx = Poly::accumulate({{0, 0, 1.0}, {0, 1, -1.0}});
  z.upper.dy = Poly::accumulate({{1, 0, 1.0}, {3, 0, -8.0}});
  z.lower.dx = Poly::accumulate({{0, 0, -1.0}, {0, 1, -1.0}});
  // (x - a)(c - 3x) = -3x^2 + (c + 3a)x - a c
  z.lower.dy = Poly::accumulate({{2, 0, -3.0}, {1, 0, c + 3.0 * a}, {0, 0, -a * c}});
  return z;
}

/// H+ and H- with X = (dH+/dy, -dH+/dx) and Y = (dH-/dy, -dH-/dx).
struct HamiltonianPair {
  double a = 0.0;
  double b = 0.0;
  Poly upper;
  Poly lower;
};

inline HamiltonianPair hamiltonians(double a, double b) {
  const double s = 1.0 + 4.0 * a - 2.0 * b;
  HamiltonianPair h{a, b, {}, {}};
  h.upper = Poly::accumulate({{4, 0, 2.0}, {2, 0, -0.5}, {0, 1, 1.0}, {0, 2, -0.5}});
  h.lower = Poly::accumulate(
      {{3, 0, 1.0}, {2, 0, -0.5 * s}, {1, 0, a * (1.0 + a - 2.0 * b)}, {0, 2, -0.5}, {0, 1, -1.0}});
  return h;
}

inline double hamiltonian_value(Side side, double a, double b, Vec2 p) {
  const auto h = hamiltonians(a, b);
  return side == Side::Upper ? h.upper(p) : h.lower(p);
}

/// Forward upper return: sqrt(1 - 4 x0^2) / 2. Independent of (a, b).
inline double exact_xi_plus(double x0) {
  if (!(x0 >= 0.0 && x0 <= 0.5))
    throw Error(ErrorCode::DomainError, "xi+ requires 0 <= x0 <= 1/2, got " + std::to_string(x0));
  return std::sqrt(1.0 - 4.0 * x0 * x0) / 2.0;
}

/// Backward lower return, '+' branch of the quadratic.
inline double exact_xi_minus(double a, double b, double x0) {
  if (x0 < a) throw Error(ErrorCode::DomainError, "xi- requires x0 >= a");
  const double rad = (1.0 - 8.0 * a - 2.0 * b + 6.0 * x0) * (1.0 - 2.0 * b - 2.0 * x0);
  if (rad < 0.0) throw Error(ErrorCode::DomainError, "xi- radicand negative at x0 = " + std::to_string(x0));
  return (1.0 + 4.0 * a - 2.0 * b - 2.0 * x0 + std::sqrt(rad)) / 4.0;
}

inline double exact_displacement(double a, double b, double x0) {
  if (x0 < std::max(0.0, a)) throw Error(ErrorCode::DomainError, "x0 below the displacement domain");
  return exact_xi_plus(x0) - exact_xi_minus(a, b, x0);
}

/// Exact second and third bifurcation curves of this family.
inline double exact_beta2(double alpha) { return (1.0 - std::sqrt(1.0 - 4.0 * alpha * alpha)) / 2.0; }
inline double exact_beta3(double alpha) { return -2.0 * alpha * alpha / (1.0 - 4.0 * alpha); }

}  // namespace twofold::hamiltonian7
