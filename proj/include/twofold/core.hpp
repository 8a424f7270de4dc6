#pragma once

// Data model for planar piecewise-polynomial Filippov systems with the
// switching line fixed to y = 0, and pointwise classification on that line.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "twofold/error.hpp"

namespace twofold {

/// Tangency band on the switching line.
inline constexpr double kTolTan = 1e-9;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
  friend Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

/// c * x^i * y^j
struct Monomial {
  int i = 0;
  int j = 0;
  double c = 0.0;

  friend bool operator==(const Monomial&, const Monomial&) = default;
};

/// Univariate polynomial, coefficients in ascending powers.
class Poly1 {
 public:
  Poly1() = default;
  explicit Poly1(std::vector<double> coeffs) : c_(std::move(coeffs)) {}

  double operator()(double x) const {
    double acc = 0.0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + *it;
    return acc;
  }

  Poly1 derivative() const {
    if (c_.size() <= 1) return Poly1{};
    std::vector<double> d(c_.size() - 1);
    for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = static_cast<double>(k) * c_[k];
    return Poly1{std::move(d)};
  }

  const std::vector<double>& coefficients() const { return c_; }

  friend Poly1 operator*(const Poly1& a, const Poly1& b) {
    if (a.c_.empty() || b.c_.empty()) return Poly1{};
    std::vector<double> r(a.c_.size() + b.c_.size() - 1, 0.0);
    for (std::size_t p = 0; p < a.c_.size(); ++p)
      for (std::size_t q = 0; q < b.c_.size(); ++q) r[p + q] += a.c_[p] * b.c_[q];
    return Poly1{std::move(r)};
  }
  friend Poly1 operator-(const Poly1& a, const Poly1& b) {
    std::vector<double> r(std::max(a.c_.size(), b.c_.size()), 0.0);
    for (std::size_t k = 0; k < a.c_.size(); ++k) r[k] += a.c_[k];
    for (std::size_t k = 0; k < b.c_.size(); ++k) r[k] -= b.c_[k];
    return Poly1{std::move(r)};
  }

 private:
  std::vector<double> c_;
};

/// Bivariate polynomial stored as a sorted list of monomials with distinct
/// exponent pairs.
class Poly {
 public:
  Poly() = default;

  /// Throws ConfigError on negative exponents or repeated (i, j) pairs.
  explicit Poly(std::vector<Monomial> terms) : terms_(std::move(terms)) {
    for (const auto& m : terms_) {
      if (m.i < 0 || m.j < 0)
        throw Error(ErrorCode::ConfigError, "negative exponent in polynomial term");
    }
    std::sort(terms_.begin(), terms_.end(), [](const Monomial& a, const Monomial& b) {
      return std::pair(a.i, a.j) < std::pair(b.i, b.j);
    });
    for (std::size_t k = 1; k < terms_.size(); ++k) {
      if (terms_[k].i == terms_[k - 1].i && terms_[k].j == terms_[k - 1].j)
        throw Error(ErrorCode::ConfigError,
                    "duplicate exponent pair (" + std::to_string(terms_[k].i) + "," +
                        std::to_string(terms_[k].j) + ")");
    }
  }

  /// Merges repeated exponent pairs by summation and drops zero terms.
  static Poly accumulate(std::vector<Monomial> raw) {
    std::sort(raw.begin(), raw.end(), [](const Monomial& a, const Monomial& b) {
      return std::pair(a.i, a.j) < std::pair(b.i, b.j);
    });
    std::vector<Monomial> merged;
    for (const auto& m : raw) {
      if (!merged.empty() && merged.back().i == m.i && merged.back().j == m.j)
        merged.back().c += m.c;
      else
        merged.push_back(m);
    }
    std::erase_if(merged, [](const Monomial& m) { return m.c == 0.0; });
    return Poly{std::move(merged)};
  }

  const std::vector<Monomial>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  double operator()(double x, double y) const {
    double acc = 0.0;
    for (const auto& m : terms_) acc += m.c * ipow(x, m.i) * ipow(y, m.j);
    return acc;
  }
  double operator()(Vec2 p) const { return (*this)(p.x, p.y); }

  Poly d_dx() const {
    std::vector<Monomial> out;
    for (const auto& m : terms_)
      if (m.i > 0) out.push_back({m.i - 1, m.j, m.c * m.i});
    return Poly{std::move(out)};
  }
  Poly d_dy() const {
    std::vector<Monomial> out;
    for (const auto& m : terms_)
      if (m.j > 0) out.push_back({m.i, m.j - 1, m.c * m.j});
    return Poly{std::move(out)};
  }

  /// Restriction to the switching line y = 0.
  Poly1 on_sigma() const {
    std::vector<double> c;
    for (const auto& m : terms_) {
      if (m.j != 0) continue;
      if (c.size() <= static_cast<std::size_t>(m.i)) c.resize(m.i + 1, 0.0);
      c[m.i] += m.c;
    }
    return Poly1{std::move(c)};
  }

  /// q(x, y) = p(x + shift, y), expanded binomially.
  Poly shifted_x(double shift) const {
    std::vector<Monomial> raw;
    for (const auto& m : terms_) {
      double binom = 1.0;
      for (int k = 0; k <= m.i; ++k) {
        // C(i, k) x^k shift^(i-k)
        raw.push_back({k, m.j, m.c * binom * ipow(shift, m.i - k)});
        binom = binom * (m.i - k) / (k + 1);
      }
    }
    return accumulate(std::move(raw));
  }

  /// q(x, y) = s * p(sx * x, sy * y) with sx, sy, s in {-1, +1}.
  Poly reflected(int sx, int sy, int s) const {
    std::vector<Monomial> out = terms_;
    for (auto& m : out) {
      double f = s;
      if (sx < 0 && (m.i % 2) != 0) f = -f;
      if (sy < 0 && (m.j % 2) != 0) f = -f;
      m.c *= f;
    }
    return Poly{std::move(out)};
  }

  friend bool operator==(const Poly&, const Poly&) = default;

 private:
  static double ipow(double base, int e) {
    double r = 1.0;
    while (e > 0) {
      if (e & 1) r *= base;
      base *= base;
      e >>= 1;
    }
    return r;
  }

  std::vector<Monomial> terms_;
};

/// Planar polynomial vector field (dx/dt, dy/dt).
struct PolyField {
  Poly dx;
  Poly dy;

  Vec2 operator()(Vec2 p) const { return {dx(p), dy(p)}; }

  friend bool operator==(const PolyField&, const PolyField&) = default;
};

inline Vec2 eval_field(const PolyField& field, Vec2 p) { return field(p); }

/// Z = (X, Y): X active on y > 0, Y on y < 0.
struct FilippovSystem {
  PolyField upper;
  PolyField lower;

  /// System expressed in the coordinate x' = x - shift, i.e. fields evaluated
  /// at (x' + shift, y).
  FilippovSystem translated(double shift) const {
    return {{upper.dx.shifted_x(shift), upper.dy.shifted_x(shift)},
            {lower.dx.shifted_x(shift), lower.dy.shifted_x(shift)}};
  }

  friend bool operator==(const FilippovSystem&, const FilippovSystem&) = default;
};

enum class Side { Upper, Lower };

inline std::string_view to_string(Side s) { return s == Side::Upper ? "Upper" : "Lower"; }

enum class SigmaTag { Crossing, Sliding, Escaping, Tangency };

enum class FoldKind { VisibleFold, InvisibleFold, Regular, Degenerate };

inline std::string_view to_string(SigmaTag t) {
  switch (t) {
    case SigmaTag::Crossing: return "Crossing";
    case SigmaTag::Sliding: return "Sliding";
    case SigmaTag::Escaping: return "Escaping";
    case SigmaTag::Tangency: return "Tangency";
  }
  return "?";
}

inline std::string_view to_string(FoldKind k) {
  switch (k) {
    case FoldKind::VisibleFold: return "VisibleFold";
    case FoldKind::InvisibleFold: return "InvisibleFold";
    case FoldKind::Regular: return "Regular";
    case FoldKind::Degenerate: return "Degenerate";
  }
  return "?";
}

struct TangencyClass {
  FoldKind upper = FoldKind::Regular;
  FoldKind lower = FoldKind::Regular;

  static bool is_fold(FoldKind k) {
    return k == FoldKind::VisibleFold || k == FoldKind::InvisibleFold;
  }
  bool two_fold() const { return is_fold(upper) && is_fold(lower); }
  bool regular_fold() const { return is_fold(upper) != is_fold(lower); }
  bool degenerate() const {
    return upper == FoldKind::Degenerate || lower == FoldKind::Degenerate;
  }
};

struct SigmaClass {
  SigmaTag tag = SigmaTag::Crossing;
  std::optional<TangencyClass> tangency;
};

/// Normal components Xh = X^2(x, 0) and Yh = Y^2(x, 0).
inline std::pair<double, double> normal_components(const FilippovSystem& z, double x) {
  return {z.upper.dy(x, 0.0), z.lower.dy(x, 0.0)};
}

/// Fold type of one field at (x, 0). `visible_sign` is +1 for the upper
/// field (visible iff F^1 dF^2/dx > 0) and -1 for the lower one.
inline FoldKind fold_kind(const PolyField& f, double x, int visible_sign, double tol = kTolTan) {
  if (std::abs(f.dy(x, 0.0)) > tol) return FoldKind::Regular;
  const double curvature = f.dx(x, 0.0) * f.dy.d_dx()(x, 0.0);
  if (std::abs(curvature) <= tol) return FoldKind::Degenerate;
  return visible_sign * curvature > 0.0 ? FoldKind::VisibleFold : FoldKind::InvisibleFold;
}

inline TangencyClass classify_tangency(const FilippovSystem& z, double x, double tol = kTolTan) {
  return {fold_kind(z.upper, x, +1, tol), fold_kind(z.lower, x, -1, tol)};
}

inline SigmaClass classify_sigma_point(const FilippovSystem& z, double x, double tol = kTolTan) {
  const auto [u, v] = normal_components(z, x);
  if (std::abs(u) <= tol || std::abs(v) <= tol)
    return {SigmaTag::Tangency, classify_tangency(z, x, tol)};
  if (u * v > 0.0) return {SigmaTag::Crossing, std::nullopt};
  if (u < 0.0) return {SigmaTag::Sliding, std::nullopt};
  return {SigmaTag::Escaping, std::nullopt};
}

/// Convex combination of X and Y tangent to the switching line. Defined
/// wherever Yh != Xh; meaningful on sliding and escaping points.
inline Vec2 sliding_field(const FilippovSystem& z, double x, double tol = kTolTan) {
  const Vec2 p{x, 0.0};
  const double u = z.upper.dy(p);
  const double v = z.lower.dy(p);
  const double denom = v - u;
  if (std::abs(denom) < tol)
    throw Error(ErrorCode::DenominatorUnderflow, "Yh - Xh vanishes at x = " + std::to_string(x));
  const Vec2 xf = z.upper(p);
  const Vec2 yf = z.lower(p);
  const double lambda = v / denom;
  // second component is v*u - u*v; written out so it cancels exactly
  return {lambda * xf.x + (1.0 - lambda) * yf.x, (v * xf.y - u * yf.y) / denom};
}

/// N(x) = X^1 Y^2 - Y^1 X^2 on y = 0; same zeros as the sliding field.
inline double normalized_sliding_field(const FilippovSystem& z, double x) {
  const Vec2 p{x, 0.0};
  return z.upper.dx(p) * z.lower.dy(p) - z.lower.dx(p) * z.upper.dy(p);
}

/// N as a univariate polynomial on the switching line.
inline Poly1 normalized_sliding_poly(const FilippovSystem& z) {
  return z.upper.dx.on_sigma() * z.lower.dy.on_sigma() -
         z.lower.dx.on_sigma() * z.upper.dy.on_sigma();
}

/// Conjugation by the rotation (x, y) -> (-x, -y): upper' = -Y(-x, -y),
/// lower' = -X(-x, -y).
inline FilippovSystem rotate_pi(const FilippovSystem& z) {
  return {{z.lower.dx.reflected(-1, -1, -1), z.lower.dy.reflected(-1, -1, -1)},
          {z.upper.dx.reflected(-1, -1, -1), z.upper.dy.reflected(-1, -1, -1)}};
}

/// Reflection (x, y) -> (x, -y) combined with time reversal:
/// upper' = (-Y^1, Y^2)(x, -y), lower' = (-X^1, X^2)(x, -y). Maps visible
/// folds to visible folds, (alpha, beta) to (-alpha, -beta) and M to -M, so
/// systems with an unstable two-fold cycle classify through the stable table.
inline FilippovSystem reflect_time_reversed(const FilippovSystem& z) {
  return {{z.lower.dx.reflected(1, -1, -1), z.lower.dy.reflected(1, -1, 1)},
          {z.upper.dx.reflected(1, -1, -1), z.upper.dy.reflected(1, -1, 1)}};
}

}  // namespace twofold
