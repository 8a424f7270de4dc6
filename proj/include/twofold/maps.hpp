#pragma once

// Folds, the unfolding parameters (alpha, beta), the displacement function
// f(x) = half_map_up(x) - half_map_down_backward(x) on [A, A + lambda) with
// A = max(0, alpha), and fits of its quadratic coefficients.
//
// All map computations happen in coordinates translated so that the visible
// fold of the upper field sits at x = 0.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "twofold/core.hpp"
#include "twofold/error.hpp"
#include "twofold/flow.hpp"
#include "twofold/parallel.hpp"
#include "twofold/roots.hpp"

namespace twofold {

inline constexpr double kDefaultLambda = 0.25;

struct FoldPair {
  double p_x = 0.0;
  double p_y = 0.0;
  /// X^1 dX^2/dx at p_x (> 0 for a visible fold) and Y^1 dY^2/dx at p_y (< 0).
  double cert_x = 0.0;
  double cert_y = 0.0;
};

/// Visible folds of X and Y inside [lo, hi]: zeros of X^2(., 0) and Y^2(., 0)
/// with positive slope.
inline FoldPair find_folds(const FilippovSystem& z, double lo = -0.3, double hi = 0.3) {
  auto one_fold = [&](const Poly& normal, const char* name) {
    const Poly1 g = normal.on_sigma();
    const Poly1 dg = g.derivative();
    std::vector<double> hits;
    for (double r : scan_roots(g, lo, hi, 600, 1e-15))
      if (dg(r) > 0.0) hits.push_back(r);
    if (hits.empty()) throw Error(ErrorCode::NoFold, std::string("no fold of ") + name + " in bracket");
    if (hits.size() > 1) throw Error(ErrorCode::MultipleFolds, std::string("several folds of ") + name);
    return hits.front();
  };
  FoldPair f;
  f.p_x = one_fold(z.upper.dy, "X");
  f.p_y = one_fold(z.lower.dy, "Y");
  f.cert_x = z.upper.dx(f.p_x, 0.0) * z.upper.dy.d_dx()(f.p_x, 0.0);
  f.cert_y = z.lower.dx(f.p_y, 0.0) * z.lower.dy.d_dx()(f.p_y, 0.0);
  if (fold_kind(z.upper, f.p_x, +1) != FoldKind::VisibleFold)
    throw Error(ErrorCode::NoFold, "fold of X at " + std::to_string(f.p_x) + " is not visible");
  if (fold_kind(z.lower, f.p_y, -1) != FoldKind::VisibleFold)
    throw Error(ErrorCode::NoFold, "fold of Y at " + std::to_string(f.p_y) + " is not visible");
  return f;
}

struct Eta {
  double alpha = 0.0;
  double beta = 0.0;
  double q_x = 0.0;
  double q_y = 0.0;
};

/// A system prepared for map computations: translated so p_X = 0, with its
/// folds and (alpha, beta).
struct MapContext {
  FilippovSystem z;  // translated
  double shift = 0.0;
  FoldPair folds;    // in translated coordinates
  Eta eta;
  double lambda = kDefaultLambda;
  IntegratorOptions opts;

  double a_alpha() const { return std::max(0.0, eta.alpha); }
};

inline MapContext prepare(const FilippovSystem& original, double lambda = kDefaultLambda,
                          const IntegratorOptions& opts = {}) {
  MapContext c;
  c.lambda = lambda;
  c.opts = opts;
  const FoldPair raw = find_folds(original);
  c.shift = raw.p_x;
  c.z = original.translated(raw.p_x);
  c.folds = {0.0, raw.p_y - raw.p_x, raw.cert_x, raw.cert_y};
  c.eta.alpha = c.folds.p_y;
  c.eta.q_x = half_map_up(c.z, 0.0, opts);
  c.eta.q_y = half_map_down_backward(c.z, c.eta.alpha, opts);
  c.eta.beta = c.eta.q_x - c.eta.q_y;
  return c;
}

inline Eta eta(const FilippovSystem& z, const IntegratorOptions& opts = {}) { return prepare(z, kDefaultLambda, opts).eta; }

inline double displacement(const MapContext& c, double x) {
  const double lo = c.a_alpha();
  if (!(x >= lo && x < lo + c.lambda))
    throw Error(ErrorCode::OutOfDomain, "x = " + std::to_string(x) + " outside the displacement domain");
  return half_map_up(c.z, x, c.opts) - half_map_down_backward(c.z, x, c.opts);
}

inline double displacement(const FilippovSystem& z, double x) { return displacement(prepare(z), x); }

struct ProfileSample {
  double x = 0.0;
  double f = 0.0;
  double xi_plus = 0.0;
  double xi_minus = 0.0;
};

struct QuadraticFit {
  double coefficient = 0.0;  // of the squared offset
  double residual = 0.0;     // rms
};

struct DisplacementProfile {
  double A_alpha = 0.0;
  double lambda = kDefaultLambda;
  double shift = 0.0;
  Eta eta;
  std::vector<ProfileSample> samples;
  QuadraticFit ell;
  QuadraticFit k;
  double L = 0.0;
  std::optional<QuadraticFit> M;
};

/// Geometric abscissae d_j = 0.3 lambda * 0.7^j, j = 0..11.
inline std::vector<double> fit_offsets(double lambda) {
  std::vector<double> d;
  double v = 0.3 * lambda;
  for (int j = 0; j < 12; ++j, v *= 0.7) d.push_back(v);
  return d;
}

/// Fits g(d) ~ c2 d^2 + c3 d^3 + c4 d^4 and returns c2. The cubic and quartic
/// columns absorb the higher-order terms that would otherwise bias c2.
inline QuadraticFit fit_leading_quadratic(const std::vector<double>& d, const std::vector<double>& g) {
  std::vector<std::vector<double>> rows;
  for (double v : d) rows.push_back({v * v, v * v * v, v * v * v * v});
  const auto fit = least_squares(rows, g);
  QuadraticFit q{fit.coefficients[0], fit.rms_residual};
  double lead = 0.0;
  for (double v : d) lead += std::pow(q.coefficient * v * v, 2);
  lead = std::sqrt(lead / static_cast<double>(d.size()));
  if (!(q.residual <= 0.1 * lead))
    throw Error(ErrorCode::FitIllConditioned, "fit residual " + std::to_string(q.residual) +
                                                  " exceeds 10% of the leading term");
  return q;
}

inline DisplacementProfile displacement_profile(const MapContext& c, int n, unsigned workers = 1) {
  if (n < 8) throw Error(ErrorCode::ConfigError, "profile needs at least 8 samples");
  DisplacementProfile p;
  p.A_alpha = c.a_alpha();
  p.lambda = c.lambda;
  p.shift = c.shift;
  p.eta = c.eta;
  p.samples = parallel_map(static_cast<std::size_t>(n), workers, [&](std::size_t i) {
    const double x = p.A_alpha + c.lambda * static_cast<double>(i) / n;
    ProfileSample s;
    s.x = x;
    s.xi_plus = half_map_up(c.z, x, c.opts);
    s.xi_minus = half_map_down_backward(c.z, x, c.opts);
    s.f = s.xi_plus - s.xi_minus;
    return s;
  });

  const auto d = fit_offsets(c.lambda);
  std::vector<double> gu, gd;
  for (double v : d) {
    gu.push_back(half_map_up(c.z, v, c.opts) - c.eta.q_x);
    gd.push_back(half_map_down_backward(c.z, c.eta.alpha + v, c.opts) - c.eta.q_y);
  }
  p.ell = fit_leading_quadratic(d, gu);
  p.k = fit_leading_quadratic(d, gd);
  p.L = p.ell.coefficient - p.k.coefficient;
  if (std::abs(c.eta.alpha) + std::abs(c.eta.beta) < 1e-10) {
    std::vector<double> gf;
    for (std::size_t j = 0; j < d.size(); ++j) gf.push_back(gu[j] + c.eta.q_x - gd[j] - c.eta.q_y);
    p.M = fit_leading_quadratic(d, gf);
  }
  return p;
}

inline DisplacementProfile displacement_profile(const FilippovSystem& z, int n, unsigned workers = 1) {
  return displacement_profile(prepare(z), n, workers);
}

/// CSV columns: x, f, xi_plus, xi_minus.
inline void write_profile_csv(std::ostream& os, const DisplacementProfile& p) {
  os << "x,f,xi_plus,xi_minus\n";
  char buf[128];
  for (const auto& s : p.samples) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", s.x, s.f, s.xi_plus, s.xi_minus);
    os << buf;
  }
}

inline nlohmann::json profile_metadata(const DisplacementProfile& p) {
  nlohmann::json j;
  j["alpha"] = p.eta.alpha;
  j["beta"] = p.eta.beta;
  j["q_x"] = p.eta.q_x;
  j["q_y"] = p.eta.q_y;
  j["translation"] = p.shift;
  j["A_alpha"] = p.A_alpha;
  j["lambda"] = p.lambda;
  j["ell"] = p.ell.coefficient;
  j["k"] = p.k.coefficient;
  j["L"] = p.L;
  j["M"] = p.M ? nlohmann::json(p.M->coefficient) : nlohmann::json(nullptr);
  j["residuals"] = {{"ell", p.ell.residual},
                    {"k", p.k.residual},
                    {"M", p.M ? nlohmann::json(p.M->residual) : nlohmann::json(nullptr)}};
  return j;
}

}  // namespace twofold
