#pragma once

// Cycles from zeros of the displacement function, the pseudo-equilibrium of
// the sliding/escaping segment, fold-to-fold landings, and continuation of
// the five bifurcation curves of a two-parameter family.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "twofold/core.hpp"
#include "twofold/error.hpp"
#include "twofold/flow.hpp"
#include "twofold/maps.hpp"
#include "twofold/oracle_family.hpp"
#include "twofold/parallel.hpp"
#include "twofold/roots.hpp"

namespace twofold {

struct BifurcationTolerances {
  double tol_b = 1e-6;  // boundary zero -> critical crossing cycle
  double tol_d = 1e-6;  // stability sign band on f'
  double tol_m = 1e-8;  // double-zero detection
};

// ---------------------------------------------------------------------------
// Families

/// Coefficient c0 + ca*a + cb*b of the monomial x^i y^j.
struct AffineTerm {
  int i = 0;
  int j = 0;
  double c0 = 0.0;
  double ca = 0.0;
  double cb = 0.0;
};

struct Family {
  enum class Kind { BuiltInHamiltonian, PolynomialTemplate };

  Kind kind = Kind::BuiltInHamiltonian;
  std::string id{hamiltonian7::kFamilyId};
  /// upper dx, upper dy, lower dx, lower dy
  std::array<std::vector<AffineTerm>, 4> terms;
  /// Members are passed through reflect_time_reversed.
  bool time_reversed = false;

  static Family hamiltonian() { return {}; }

  FilippovSystem instantiate(double a, double b) const {
    const FilippovSystem z = instantiate_plain(a, b);
    return time_reversed ? reflect_time_reversed(z) : z;
  }

 private:
  FilippovSystem instantiate_plain(double a, double b) const {
    if (kind == Kind::BuiltInHamiltonian) return hamiltonian7::make_system(a, b);
    auto poly = [&](const std::vector<AffineTerm>& ts) {
      std::vector<Monomial> raw;
      for (const auto& t : ts) raw.push_back({t.i, t.j, t.c0 + t.ca * a + t.cb * b});
      return Poly::accumulate(std::move(raw));
    };
    return {{poly(terms[0]), poly(terms[1])}, {poly(terms[2]), poly(terms[3])}};
  }
};

// ---------------------------------------------------------------------------
// Cycles

enum class Stability { Stable, Unstable, SemiStable };
enum class CycleKind { Crossing, CriticalCrossing, SlidingCycle };

inline std::string_view to_string(Stability s) {
  switch (s) {
    case Stability::Stable: return "Stable";
    case Stability::Unstable: return "Unstable";
    case Stability::SemiStable: return "SemiStable";
  }
  return "?";
}

inline std::string_view to_string(CycleKind k) {
  switch (k) {
    case CycleKind::Crossing: return "Crossing";
    case CycleKind::CriticalCrossing: return "CriticalCrossing";
    case CycleKind::SlidingCycle: return "SlidingCycle";
  }
  return "?";
}

struct CycleRecord {
  double x_star = 0.0;
  CycleKind kind = CycleKind::Crossing;
  Stability stability = Stability::Stable;
  double f_prime = 0.0;
};

namespace detail {

/// f' by second-order differences; one-sided at the left end of the domain.
inline double displacement_slope(const MapContext& c, double x, double h = 1e-4) {
  if (x - h < c.a_alpha())
    return (-3.0 * displacement(c, x) + 4.0 * displacement(c, x + h) - displacement(c, x + 2 * h)) / (2 * h);
  return (displacement(c, x + h) - displacement(c, x - h)) / (2 * h);
}

inline Stability stability_from_slope(double fp, const BifurcationTolerances& tol) {
  if (fp > tol.tol_d) return Stability::Stable;
  if (fp < -tol.tol_d) return Stability::Unstable;
  return Stability::SemiStable;
}

}  // namespace detail

/// Zeros of the displacement function on [A, A + lambda). The scan stops at
/// the first abscissa where a half-map is undefined, so only the part of the
/// domain adjacent to the folds is searched.
inline std::vector<CycleRecord> find_cycles(const MapContext& c, const BifurcationTolerances& tol = {}) {
  constexpr int kGrid = 200;
  const double lo = c.a_alpha();
  const double h = c.lambda / kGrid;
  std::vector<double> xs, fs;
  for (int i = 0; i < kGrid; ++i) {
    const double x = lo + h * i;
    try {
      fs.push_back(displacement(c, x));
    } catch (const Error&) {
      break;
    }
    xs.push_back(x);
  }
  std::vector<CycleRecord> out;
  if (fs.empty()) return out;

  // f is C^2 with O(1) curvature near the folds; a jump here means the grid
  // does not resolve it.
  constexpr double kCurvatureBound = 100.0;
  for (std::size_t i = 1; i + 1 < fs.size(); ++i) {
    if (std::abs(fs[i + 1] - 2.0 * fs[i] + fs[i - 1]) > kCurvatureBound * h * h)
      throw Error(ErrorCode::GridTooCoarse, "displacement not resolved near x = " + std::to_string(xs[i]));
  }

  auto f = [&](double x) { return displacement(c, x); };
  auto add = [&](double x, bool semi) {
    CycleRecord r;
    r.x_star = x;
    r.kind = std::abs(x - lo) <= tol.tol_b ? CycleKind::CriticalCrossing : CycleKind::Crossing;
    r.f_prime = detail::displacement_slope(c, x);
    r.stability = semi ? Stability::SemiStable : detail::stability_from_slope(r.f_prime, tol);
    for (const auto& e : out)
      if (std::abs(e.x_star - x) <= tol.tol_b) return;
    out.push_back(r);
  };

  if (std::abs(fs[0]) <= tol.tol_b) add(lo, false);
  for (std::size_t i = 0; i + 1 < fs.size(); ++i) {
    if (fs[i] == 0.0 && i > 0) add(xs[i], false);
    if (fs[i] != 0.0 && fs[i + 1] != 0.0 && std::signbit(fs[i]) != std::signbit(fs[i + 1]))
      add(find_root(f, xs[i], xs[i + 1], 1e-12), false);
  }
  // Near-tangential interior extrema of |f|: a double zero, or two zeros
  // closer together than the grid spacing.
  for (std::size_t i = 1; i + 1 < fs.size(); ++i) {
    const double s = fs[i] > 0.0 ? 1.0 : -1.0;
    if (s * fs[i - 1] <= 0.0 || s * fs[i + 1] <= 0.0) continue;
    if (!(s * fs[i] <= s * fs[i - 1] && s * fs[i] <= s * fs[i + 1])) continue;
    const auto [xm, gm] = minimize([&](double x) { return s * f(x); }, xs[i - 1], xs[i + 1]);
    if (std::abs(gm) < tol.tol_m) {
      add(xm, true);
    } else if (gm < 0.0) {
      add(find_root(f, xs[i - 1], xm, 1e-12), false);
      add(find_root(f, xm, xs[i + 1], 1e-12), false);
    }
  }
  std::sort(out.begin(), out.end(), [](const CycleRecord& a, const CycleRecord& b) { return a.x_star < b.x_star; });
  return out;
}

// ---------------------------------------------------------------------------
// Pseudo-equilibria

struct PseudoEq {
  double p = 0.0;
  Stability stability = Stability::Stable;
  double n_prime = 0.0;
};

/// Root of N = X^1 Y^2 - Y^1 X^2 strictly between the two folds. Stable when
/// the sliding dynamics x' = N / (Yh - Xh) contracts there.
inline std::optional<PseudoEq> find_pseudo_equilibrium(const MapContext& c) {
  const double alpha = c.eta.alpha;
  if (alpha == 0.0) return std::nullopt;
  const double lo = std::min(0.0, alpha);
  const double hi = std::max(0.0, alpha);
  const Poly1 n = normalized_sliding_poly(c.z);
  std::vector<double> roots;
  for (double r : scan_roots(n, lo, hi, 400, 1e-15))
    if (r > lo && r < hi) roots.push_back(r);
  if (roots.empty()) throw Error(ErrorCode::NoRoot, "no pseudo-equilibrium between the folds");
  if (roots.size() > 1) throw Error(ErrorCode::MultipleRoots, "several pseudo-equilibria between the folds");
  PseudoEq pe;
  pe.p = roots.front();
  pe.n_prime = n.derivative()(pe.p);
  const auto [u, v] = normal_components(c.z, pe.p);
  pe.stability = pe.n_prime / (v - u) < 0.0 ? Stability::Stable : Stability::Unstable;
  return pe;
}

/// Landing point of the fold-to-fold return used to place sliding cycles and
/// connections.
///  alpha > 0: the backward orbit from the fold (alpha, 0), taken once around
///             (lower then upper half-plane), lands at s in the escaping segment.
///  alpha < 0: the forward orbit from the fold (0, 0), taken once around
///             (upper then lower), lands at L near the sliding segment.
inline double landing_point(const MapContext& c) {
  const double alpha = c.eta.alpha;
  if (alpha > 0.0) return half_map_up_backward(c.z, c.eta.q_y, c.opts);
  if (alpha < 0.0) return half_map_down_forward(c.z, c.eta.q_x, c.opts);
  throw Error(ErrorCode::DomainError, "landing undefined at coincident folds");
}

/// landing_point - pseudo-equilibrium.
inline double landing_gap(const MapContext& c) {
  const auto pe = find_pseudo_equilibrium(c);
  if (!pe) throw Error(ErrorCode::NoRoot, "no pseudo-equilibrium");
  return landing_point(c) - pe->p;
}

// ---------------------------------------------------------------------------
// Curve continuation

struct CurvePoint {
  double alpha = 0.0;  // family parameter a; equals the unfolding alpha for the built-in family
  double beta = 0.0;   // family parameter b at which the defining residual vanishes
  double residual = 0.0;
  bool converged = false;
  std::string diagnostic;
  std::optional<double> x_star;  // minimiser of f (curve 1)
};

struct CurveTrace {
  int curve_id = 0;
  std::vector<CurvePoint> points;
  double leading_coefficient = 0.0;
  double uncertainty = 0.0;

  std::size_t converged_count() const {
    return static_cast<std::size_t>(std::count_if(points.begin(), points.end(), [](const CurvePoint& p) { return p.converged; }));
  }
};

struct TraceOptions {
  double lambda = kDefaultLambda;
  double beta_lo = -0.05;
  double beta_hi = 0.05;
  int beta_cells = 32;
  double residual_tol = 1e-9;
  unsigned workers = 1;
  IntegratorOptions integrator;
};

/// Default alpha grid for one side: 0.08 * 0.85^k, k = 0..19, ascending in |alpha|.
inline std::vector<double> default_alpha_grid(int side) {
  std::vector<double> g;
  double v = 0.08;
  for (int k = 0; k < 20; ++k, v *= 0.85) g.push_back(side * v);
  std::reverse(g.begin(), g.end());
  return g;
}

inline bool curve_on_positive_side(int id) { return id == 1 || id == 2 || id == 4; }

namespace detail {

struct MinResult {
  double x = 0.0;
  double f = 0.0;
};

/// Global minimum of f over the displacement domain: coarse scan, then Brent.
inline MinResult min_displacement(const MapContext& c) {
  constexpr int kScan = 40;
  const double lo = c.a_alpha();
  const double h = c.lambda / kScan;
  std::vector<double> xs, fs;
  for (int i = 0; i < kScan; ++i) {
    try {
      fs.push_back(displacement(c, lo + i * h));
      xs.push_back(lo + i * h);
    } catch (const Error&) {
      break;
    }
  }
  if (fs.empty()) throw Error(ErrorCode::OutOfDomain, "displacement undefined on its domain");
  const auto it = std::min_element(fs.begin(), fs.end());
  const auto i = static_cast<std::size_t>(it - fs.begin());
  const double a = xs[i == 0 ? 0 : i - 1];
  const double b = xs[std::min(i + 1, xs.size() - 1)];
  if (a == b) return {xs[i], fs[i]};
  const auto [xm, fm] = minimize([&](double x) { return displacement(c, x); }, a, b, 50);
  return fm < fs[i] ? MinResult{xm, fm} : MinResult{xs[i], fs[i]};
}

/// Defining residual of curve `id` for the system at (a, b).
inline double curve_residual(const Family& fam, int id, double a, double b, const TraceOptions& o,
                             std::optional<double>* x_star = nullptr) {
  const MapContext c = prepare(fam.instantiate(a, b), o.lambda, o.integrator);
  switch (id) {
    case 1: {
      const auto m = min_displacement(c);
      if (x_star) *x_star = m.x;
      return m.f;
    }
    case 2: return displacement(c, c.eta.alpha);
    case 3: return displacement(c, 0.0);
    case 4:
    case 5: return landing_gap(c);
    default: throw Error(ErrorCode::ConfigError, "curve id must be in 1..5");
  }
}

}  // namespace detail

/// Solves the defining residual of one curve in the family parameter b at
/// each a of the grid.
inline CurvePoint trace_point(const Family& fam, int id, double a, const TraceOptions& o) {
  CurvePoint pt;
  pt.alpha = a;
  const bool positive = curve_on_positive_side(id);
  if ((positive && !(a > 0.0)) || (!positive && !(a < 0.0))) {
    pt.diagnostic = "alpha on the wrong side for this curve";
    return pt;
  }
  auto r = [&](double b) { return detail::curve_residual(fam, id, a, b, o); };

  // Bracket on a uniform b-grid; points where the residual is undefined are
  // skipped, and the first sign change from below wins.
  std::optional<std::pair<double, double>> prev;
  std::optional<std::pair<double, double>> bracket;
  for (int k = 0; k <= o.beta_cells && !bracket; ++k) {
    const double b = o.beta_lo + (o.beta_hi - o.beta_lo) * k / o.beta_cells;
    double v;
    try {
      v = r(b);
    } catch (const Error&) {
      prev.reset();
      continue;
    }
    if (v == 0.0) bracket = {b, b};
    else if (prev && std::signbit(prev->second) != std::signbit(v)) bracket = {prev->first, b};
    prev = {b, v};
  }
  if (!bracket) {
    pt.diagnostic = "BracketFailure: residual has no sign change over the beta window";
    return pt;
  }
  try {
    const double b = bracket->first == bracket->second ? bracket->first
                                                       : find_root(r, bracket->first, bracket->second, 1e-14);
    pt.beta = b;
    pt.residual = detail::curve_residual(fam, id, a, b, o, &pt.x_star);
    pt.converged = std::abs(pt.residual) <= o.residual_tol;
    if (!pt.converged) pt.diagnostic = "residual above tolerance";
  } catch (const Error& e) {
    pt.diagnostic = e.what();
  }
  return pt;
}

/// beta/alpha^2 extrapolated linearly in alpha to alpha = 0. The uncertainty
/// combines the regression standard error with the shift from adding a
/// quadratic term.
inline std::pair<double, double> leading_coefficient(const CurveTrace& tr) {
  std::vector<std::vector<double>> lin, quad;
  std::vector<double> y;
  for (const auto& p : tr.points) {
    if (!p.converged) continue;
    lin.push_back({1.0, p.alpha});
    quad.push_back({1.0, p.alpha, p.alpha * p.alpha});
    y.push_back(p.beta / (p.alpha * p.alpha));
  }
  if (y.size() < 4) throw Error(ErrorCode::FitIllConditioned, "leading coefficient needs at least 4 points");
  const auto f1 = least_squares(lin, y);
  const auto f2 = least_squares(quad, y);
  double sxx = 0.0, mean = 0.0;
  for (const auto& r : lin) mean += r[1];
  mean /= static_cast<double>(lin.size());
  for (const auto& r : lin) sxx += (r[1] - mean) * (r[1] - mean);
  const double n = static_cast<double>(y.size());
  const double s2 = f1.rms_residual * f1.rms_residual * n / (n - 2.0);
  const double se = std::sqrt(s2 * (1.0 / n + mean * mean / sxx));
  return {f1.coefficients[0], se + std::abs(f1.coefficients[0] - f2.coefficients[0])};
}

inline CurveTrace trace_curve(const Family& fam, int id, const std::vector<double>& alpha_grid,
                              const TraceOptions& o = {}) {
  if (id < 1 || id > 5) throw Error(ErrorCode::ConfigError, "curve id must be in 1..5");
  CurveTrace tr;
  tr.curve_id = id;
  tr.points = parallel_map(alpha_grid.size(), o.workers,
                           [&](std::size_t i) { return trace_point(fam, id, alpha_grid[i], o); });
  if (tr.converged_count() >= 4) {
    const auto [c, u] = leading_coefficient(tr);
    tr.leading_coefficient = c;
    tr.uncertainty = u;
  }
  return tr;
}

/// beta_i at alpha by interpolating beta/alpha^2 linearly between traced
/// points (held constant below the smallest traced |alpha|). Empty outside
/// the traced range.
inline std::optional<double> interpolate_curve(const CurveTrace& tr, double alpha) {
  std::vector<const CurvePoint*> pts;
  for (const auto& p : tr.points)
    if (p.converged) pts.push_back(&p);
  if (pts.empty() || alpha == 0.0) return std::nullopt;
  std::sort(pts.begin(), pts.end(), [](auto* l, auto* r) { return std::abs(l->alpha) < std::abs(r->alpha); });
  if ((alpha > 0) != (pts.front()->alpha > 0)) return std::nullopt;
  const double m = std::abs(alpha);
  auto ratio = [](const CurvePoint* p) { return p->beta / (p->alpha * p->alpha); };
  if (m > std::abs(pts.back()->alpha) * (1.0 + 1e-12)) return std::nullopt;
  if (m <= std::abs(pts.front()->alpha)) return ratio(pts.front()) * alpha * alpha;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const double m0 = std::abs(pts[k]->alpha);
    const double m1 = std::abs(pts[k + 1]->alpha);
    if (m <= m1) {
      const double w = (m - m0) / (m1 - m0);
      return ((1 - w) * ratio(pts[k]) + w * ratio(pts[k + 1])) * alpha * alpha;
    }
  }
  return ratio(pts.back()) * alpha * alpha;
}

/// Largest residual among converged points within one grid cell of alpha.
inline double local_residual(const CurveTrace& tr, double alpha) {
  double r = 0.0;
  for (const auto& p : tr.points)
    if (p.converged && std::abs(std::abs(p.alpha) - std::abs(alpha)) <= 0.25 * std::abs(alpha) + 1e-3)
      r = std::max(r, std::abs(p.residual));
  return r;
}

/// CSV columns: curve_id, alpha, beta, residual (unconverged rows flagged).
inline void write_traces_csv(std::ostream& os, const std::vector<CurveTrace>& traces) {
  os << "curve_id,alpha,beta,residual,converged\n";
  char buf[160];
  for (const auto& t : traces)
    for (const auto& p : t.points) {
      std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%d\n", t.curve_id, p.alpha, p.beta, p.residual,
                    p.converged ? 1 : 0);
      os << buf;
    }
}

inline nlohmann::json traces_summary(const std::vector<CurveTrace>& traces) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& t : traces) {
    nlohmann::json e;
    e["curve_id"] = t.curve_id;
    e["points"] = t.points.size();
    e["converged"] = t.converged_count();
    e["leading_coefficient"] = t.leading_coefficient;
    e["uncertainty"] = t.uncertainty;
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& p : t.points)
      if (!p.converged) failures.push_back({{"alpha", p.alpha}, {"diagnostic", p.diagnostic}});
    e["failures"] = failures;
    j.push_back(e);
  }
  return j;
}

}  // namespace twofold
