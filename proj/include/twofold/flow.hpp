#pragma once

// Event-located integration of the two smooth pieces and composition of
// Filippov orbits. Everything downstream is built on the four half-return
// maps at the bottom of this file.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "twofold/core.hpp"
#include "twofold/error.hpp"
#include "twofold/roots.hpp"

namespace twofold {

struct IntegratorOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = 0.05;
  long max_steps = 200000;
  double event_tol = 1e-11;
  double arm_threshold = 1e-6;
  /// An armed orbit whose distance to the line has a local minimum below this
  /// is taken to land there tangentially.
  double graze_tol = 1e-9;
  /// Horizon for a single search of the switching line.
  double max_time = 50.0;
  /// Bounding box is [-box, box]^2.
  double box = 1.5;

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0)) throw Error(ErrorCode::ConfigError, std::string(name) + " must be positive");
    };
    positive(rel_tol, "rel_tol");
    positive(abs_tol, "abs_tol");
    positive(max_step, "max_step");
    positive(event_tol, "event_tol");
    positive(arm_threshold, "arm_threshold");
    positive(graze_tol, "graze_tol");
    positive(max_time, "max_time");
    positive(box, "box");
    if (max_steps <= 0) throw Error(ErrorCode::ConfigError, "max_steps must be positive");
    if (event_tol < abs_tol) throw Error(ErrorCode::ConfigError, "event_tol must be >= abs_tol");
  }

  bool inside_box(Vec2 p) const { return std::abs(p.x) <= box && std::abs(p.y) <= box; }
};

enum class Direction { Forward, Backward };
enum class ArcTag { Upper, Lower, Sliding };

inline std::string_view to_string(ArcTag t) {
  switch (t) {
    case ArcTag::Upper: return "Upper";
    case ArcTag::Lower: return "Lower";
    case ArcTag::Sliding: return "Sliding";
  }
  return "?";
}

struct Sample {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
};

struct Arc {
  ArcTag tag = ArcTag::Upper;
  double t0 = 0.0;
  double t1 = 0.0;
  std::vector<Sample> samples;

  Vec2 front() const { return {samples.front().x, samples.front().y}; }
  Vec2 back() const { return {samples.back().x, samples.back().y}; }
};

enum class Termination {
  TimeExhausted,
  ReachedSigma,
  PseudoEquilibrium,
  EscapingAmbiguity,
  LeftDomain,
  StepLimit,
};

inline std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::TimeExhausted: return "TimeExhausted";
    case Termination::ReachedSigma: return "ReachedSigma";
    case Termination::PseudoEquilibrium: return "PseudoEquilibrium";
    case Termination::EscapingAmbiguity: return "EscapingAmbiguity";
    case Termination::LeftDomain: return "LeftDomain";
    case Termination::StepLimit: return "StepLimit";
  }
  return "?";
}

struct Trajectory {
  std::vector<Arc> arcs;
  Termination termination = Termination::TimeExhausted;

  /// Abscissae where the orbit met the switching line, in time order.
  std::vector<double> sigma_hits() const {
    std::vector<double> out;
    for (std::size_t k = 0; k + 1 < arcs.size(); ++k) {
      if (arcs[k].tag != ArcTag::Sliding && arcs[k + 1].tag != ArcTag::Sliding)
        out.push_back(arcs[k].samples.back().x);
    }
    if (termination == Termination::ReachedSigma && !arcs.empty())
      out.push_back(arcs.back().samples.back().x);
    return out;
  }
};

struct SigmaHit {
  double x = 0.0;
  double elapsed = 0.0;
  Arc arc;
};

namespace detail {

using State2 = std::array<double, 2>;

enum class PieceEnd { Hit, TimeUp, LeftDomain, StepLimit };

struct PieceResult {
  PieceEnd end = PieceEnd::TimeUp;
  Vec2 state;
  double elapsed = 0.0;
  std::vector<Sample> samples;  // times relative to the piece start
};

/// Integrates `field` from `start` until the orbit returns to y = 0 from the
/// half-plane with sign `side` (+1 upper, -1 lower). A start on the line is
/// allowed; the event is armed once side*y exceeds arm_threshold.
template <class Field>
PieceResult run_piece(const Field& field, Vec2 start, int side, double t_limit, bool on_sigma,
                      const IntegratorOptions& o) {
  namespace ode = boost::numeric::odeint;
  auto sys = [&field](const State2& q, State2& dq, double) {
    const Vec2 v = field(Vec2{q[0], q[1]});
    dq[0] = v.x;
    dq[1] = v.y;
  };
  auto dense = ode::make_dense_output(o.abs_tol, o.rel_tol, o.max_step,
                                      ode::runge_kutta_dopri5<State2>());
  dense.initialize(State2{start.x, start.y}, 0.0, std::min(1e-3, o.max_step));

  PieceResult res;
  res.samples.push_back({0.0, start.x, start.y});
  bool armed = !on_sigma;
  double v_prev = 0.0;  // side * dy/dt at the previous probe
  constexpr int kSub = 8;  // interior probes per step, catches shallow dips

  for (long steps = 0;; ++steps) {
    if (steps >= o.max_steps) {
      res.end = PieceEnd::StepLimit;
      const auto& q = dense.current_state();
      res.state = {q[0], q[1]};
      res.elapsed = dense.current_time();
      return res;
    }
    const auto [ta, tb] = dense.do_step(sys);
    const double tend = std::min(tb, t_limit);
    const State2 qa = dense.previous_state();

    double t_prev = ta;
    for (int k = 1; k <= kSub; ++k) {
      const double tk = ta + (tend - ta) * k / kSub;
      State2 qk;
      if (k == kSub && tend == tb)
        qk = dense.current_state();
      else
        dense.calc_state(tk, qk);
      const double yk = side * qk[1];
      const double vk = side * field(Vec2{qk[0], qk[1]}).y;
      if (!armed) {
        if (yk > o.arm_threshold) {
          armed = true;
        } else if (yk < -o.event_tol) {
          throw Error(ErrorCode::DomainError, "field does not depart into the requested half-plane");
        }
        t_prev = tk;
        v_prev = vk;
        continue;
      }
      double t_cross = tk;  // right end of the crossing bracket
      if (yk > 0.0 && v_prev < 0.0 && vk >= 0.0) {
        // closest approach inside (t_prev, tk): tangential landing if shallow
        auto v_dense = [&](double t) {
          State2 q;
          dense.calc_state(t, q);
          return side * field(Vec2{q[0], q[1]}).y;
        };
        const double t_min = find_root(v_dense, t_prev, tk, 1e-15);
        State2 q;
        dense.calc_state(t_min, q);
        if (std::abs(q[1]) <= o.graze_tol) {
          res.end = PieceEnd::Hit;
          res.state = {q[0], 0.0};
          res.elapsed = t_min;
          res.samples.push_back({t_min, q[0], 0.0});
          return res;
        }
        // A shallow excursion across the line between two probes: the
        // crossing lies before the extremum.
        if (side * q[1] < 0.0) t_cross = t_min;
      }
      if (yk > 0.0 && t_cross == tk) {
        t_prev = tk;
        v_prev = vk;
        continue;
      }

      // Bracketed in [t_prev, t_cross] on the dense interpolant.
      auto y_dense = [&](double t) {
        State2 q;
        dense.calc_state(t, q);
        return q[1];
      };
      double t_hit = find_root(y_dense, t_prev, t_cross, 1e-15);

      // Newton polish with genuine steps from the start of the current step.
      ode::runge_kutta_dopri5<State2> rk;
      State2 dqa;
      sys(qa, dqa, ta);
      auto true_state = [&](double t) {
        State2 out;
        State2 dout;
        if (t == ta) return qa;
        rk.do_step(sys, qa, dqa, ta, out, dout, t - ta);
        return out;
      };
      State2 q = true_state(t_hit);
      for (int it = 0; it < 4 && std::abs(q[1]) > 1e-16; ++it) {
        State2 dq;
        sys(q, dq, t_hit);
        if (std::abs(dq[1]) < 1e-12) break;
        const double t_next = t_hit - q[1] / dq[1];
        if (!(t_next >= ta && t_next <= tend)) break;
        t_hit = t_next;
        q = true_state(t_hit);
      }
      res.end = PieceEnd::Hit;
      res.state = {q[0], 0.0};
      res.elapsed = t_hit;
      res.samples.push_back({t_hit, q[0], 0.0});
      return res;
    }

    State2 qe;
    if (tend == tb)
      qe = dense.current_state();
    else
      dense.calc_state(tend, qe);
    res.samples.push_back({tend, qe[0], qe[1]});
    res.state = {qe[0], qe[1]};
    res.elapsed = tend;
    if (!o.inside_box(res.state)) {
      res.end = PieceEnd::LeftDomain;
      return res;
    }
    if (tend >= t_limit) {
      res.end = PieceEnd::TimeUp;
      return res;
    }
  }
}

inline const PolyField& field_of(const FilippovSystem& z, Side s) {
  return s == Side::Upper ? z.upper : z.lower;
}

inline int sign_of(Side s) { return s == Side::Upper ? +1 : -1; }

/// Whether `side`'s field, run in time direction `dir`, leaves (x, 0) into its
/// own half-plane: transversally, or tangentially at a visible fold.
inline bool departs(const FilippovSystem& z, Side side, double x, Direction dir) {
  const PolyField& f = field_of(z, side);
  const double w = (dir == Direction::Forward ? 1.0 : -1.0) * f.dy(x, 0.0);
  const int s = sign_of(side);
  if (s * w > kTolTan) return true;
  if (std::abs(w) > kTolTan) return false;
  return fold_kind(f, x, s) == FoldKind::VisibleFold;
}

inline Arc make_arc(ArcTag tag, double t_offset, double time_sign, const std::vector<Sample>& rel) {
  Arc arc;
  arc.tag = tag;
  arc.samples.reserve(rel.size());
  for (const auto& s : rel) arc.samples.push_back({t_offset + time_sign * s.t, s.x, s.y});
  if (time_sign < 0) std::reverse(arc.samples.begin(), arc.samples.end());
  arc.t0 = arc.samples.front().t;
  arc.t1 = arc.samples.back().t;
  return arc;
}

}  // namespace detail

/// First return to the switching line through the half-plane of `side`,
/// forward or backward in time.
inline SigmaHit integrate_to_sigma(const FilippovSystem& z, Side side, Vec2 start, Direction dir,
                                   const IntegratorOptions& o = {}) {
  if (!o.inside_box(start)) throw Error(ErrorCode::LeftDomain, "start outside bounding box");
  const int s = detail::sign_of(side);
  const bool on_sigma = std::abs(start.y) <= o.event_tol;
  if (on_sigma) {
    start.y = 0.0;
    if (!detail::departs(z, side, start.x, dir))
      throw Error(ErrorCode::DomainError, std::string(to_string(side)) +
                                              " field does not depart from x = " +
                                              std::to_string(start.x));
  } else if (s * start.y < 0.0) {
    throw Error(ErrorCode::DomainError, "start not in the requested half-plane");
  }
  const PolyField& f = detail::field_of(z, side);
  detail::PieceResult r;
  if (dir == Direction::Forward) {
    r = detail::run_piece(f, start, s, o.max_time, on_sigma, o);
  } else {
    auto neg = [&f](Vec2 p) { return -f(p); };
    r = detail::run_piece(neg, start, s, o.max_time, on_sigma, o);
  }
  switch (r.end) {
    case detail::PieceEnd::Hit: break;
    case detail::PieceEnd::StepLimit: throw Error(ErrorCode::StepLimit, "max_steps exceeded");
    case detail::PieceEnd::LeftDomain:
      throw Error(ErrorCode::LeftDomain, "orbit left the bounding box from x = " + std::to_string(start.x));
    case detail::PieceEnd::TimeUp:
      throw Error(ErrorCode::NoReturn, "no return to the switching line from x = " + std::to_string(start.x));
  }
  const double sign = dir == Direction::Forward ? 1.0 : -1.0;
  const ArcTag tag = side == Side::Upper ? ArcTag::Upper : ArcTag::Lower;
  return {r.state.x, r.elapsed, detail::make_arc(tag, 0.0, sign, r.samples)};
}

/// Forward return through y > 0.
inline double half_map_up(const FilippovSystem& z, double x, const IntegratorOptions& o = {}) {
  return integrate_to_sigma(z, Side::Upper, {x, 0.0}, Direction::Forward, o).x;
}

/// Backward return through y > 0 (inverse of half_map_up).
inline double half_map_up_backward(const FilippovSystem& z, double x, const IntegratorOptions& o = {}) {
  return integrate_to_sigma(z, Side::Upper, {x, 0.0}, Direction::Backward, o).x;
}

/// Backward return through y < 0.
inline double half_map_down_backward(const FilippovSystem& z, double x, const IntegratorOptions& o = {}) {
  return integrate_to_sigma(z, Side::Lower, {x, 0.0}, Direction::Backward, o).x;
}

/// Forward return through y < 0 (inverse of half_map_down_backward).
inline double half_map_down_forward(const FilippovSystem& z, double x, const IntegratorOptions& o = {}) {
  return integrate_to_sigma(z, Side::Lower, {x, 0.0}, Direction::Forward, o).x;
}

// ---------------------------------------------------------------------------
// Filippov orbits

enum class EscapePolicy { Refuse, Upper, Lower };

struct OrbitOptions : IntegratorOptions {
  EscapePolicy escape = EscapePolicy::Refuse;
  /// Stop with ReachedSigma after this many arrivals at the switching line.
  std::size_t max_sigma_hits = std::numeric_limits<std::size_t>::max();
};

namespace detail {

enum class Departure { Upper, Lower, Slide, Ambiguous };

inline Departure departure_at(const FilippovSystem& z, double x, EscapePolicy policy) {
  const bool up = departs(z, Side::Upper, x, Direction::Forward);
  const bool down = departs(z, Side::Lower, x, Direction::Forward);
  if (up && down) {
    if (policy == EscapePolicy::Upper) return Departure::Upper;
    if (policy == EscapePolicy::Lower) return Departure::Lower;
    return Departure::Ambiguous;
  }
  if (up) return Departure::Upper;
  if (down) return Departure::Lower;
  const auto [u, v] = normal_components(z, x);
  if (std::abs(v - u) < kTolTan) return Departure::Ambiguous;
  return Departure::Slide;
}

enum class SlideEnd { Exit, PseudoEquilibrium, TimeUp, StepLimit };

struct SlideResult {
  SlideEnd end = SlideEnd::TimeUp;
  double x = 0.0;
  double elapsed = 0.0;
  std::vector<Sample> samples;
};

/// Motion along a sliding segment under the first component of the sliding
/// field, until a segment endpoint (fold) or a contracting pseudo-equilibrium.
inline SlideResult run_slide(const FilippovSystem& z, double x0, double t_limit, const IntegratorOptions& o) {
  namespace ode = boost::numeric::odeint;
  using State1 = std::array<double, 1>;
  const Poly1 u = z.upper.dy.on_sigma();
  const Poly1 v = z.lower.dy.on_sigma();
  // Positive strictly inside the sliding segment.
  auto inside = [&](double x) { return std::min(-u(x), v(x)); };
  auto speed = [&](double x) {
    const double d = v(x) - u(x);
    return (v(x) * z.upper.dx(x, 0.0) - u(x) * z.lower.dx(x, 0.0)) / d;
  };
  auto sys = [&](const State1& q, State1& dq, double) { dq[0] = speed(q[0]); };

  SlideResult res;
  res.samples.push_back({0.0, x0, 0.0});
  auto settled = [&](double x) {
    const double g = speed(x);
    const double h = 1e-7;
    return std::abs(g) < o.abs_tol && (speed(x + h) - speed(x - h)) < 0.0;
  };
  if (settled(x0)) {
    res.end = SlideEnd::PseudoEquilibrium;
    res.x = x0;
    return res;
  }

  auto dense = ode::make_dense_output(o.abs_tol, o.rel_tol, o.max_step,
                                      ode::runge_kutta_dopri5<State1>());
  dense.initialize(State1{x0}, 0.0, std::min(1e-3, o.max_step));
  bool armed = inside(x0) > kTolTan;
  for (long steps = 0;; ++steps) {
    if (steps >= o.max_steps) {
      res.end = SlideEnd::StepLimit;
      res.x = dense.current_state()[0];
      res.elapsed = dense.current_time();
      return res;
    }
    const auto [ta, tb] = dense.do_step(sys);
    const double tend = std::min(tb, t_limit);
    auto x_at = [&](double t) {
      State1 q;
      dense.calc_state(t, q);
      return q[0];
    };
    const double xe = x_at(tend);
    if (!armed && inside(xe) > kTolTan) armed = true;
    if (armed && inside(xe) <= 0.0) {
      const double t_exit = find_root([&](double t) { return inside(x_at(t)); }, ta, tend, 1e-15);
      double x_exit = x_at(t_exit);
      // snap onto the fold that bounds the segment
      const Poly1& edge = (-u(x_exit) < v(x_exit)) ? u : v;
      const double lo = std::min(x_at(ta), xe);
      const double hi = std::max(x_at(ta), xe);
      if (edge(lo) * edge(hi) <= 0.0) x_exit = find_root(edge, lo, hi, 1e-16);
      res.end = SlideEnd::Exit;
      res.x = x_exit;
      res.elapsed = t_exit;
      res.samples.push_back({t_exit, x_exit, 0.0});
      return res;
    }
    res.samples.push_back({tend, xe, 0.0});
    res.x = xe;
    res.elapsed = tend;
    if (settled(xe)) {
      res.end = SlideEnd::PseudoEquilibrium;
      return res;
    }
    if (tend >= t_limit) {
      res.end = SlideEnd::TimeUp;
      return res;
    }
  }
}

}  // namespace detail

/// Global orbit under Filippov's convention, starting at time 0.
inline Trajectory filippov_orbit(const FilippovSystem& z, Vec2 start, double t_max, const OrbitOptions& o = {}) {
  Trajectory tr;
  const auto side_tag = [](Vec2 p) { return p.y >= 0.0 ? ArcTag::Upper : ArcTag::Lower; };
  if (!o.inside_box(start)) {
    tr.termination = Termination::LeftDomain;
    return tr;
  }
  if (t_max <= 0.0) {
    tr.arcs.push_back({side_tag(start), 0.0, 0.0, {{0.0, start.x, start.y}}});
    tr.termination = Termination::TimeExhausted;
    return tr;
  }

  double t = 0.0;
  Vec2 p = start;
  std::size_t hits = 0;
  for (;;) {
    const double remaining = t_max - t;
    if (remaining <= 0.0) {
      tr.termination = Termination::TimeExhausted;
      return tr;
    }
    const bool on_sigma = std::abs(p.y) <= o.event_tol;
    Side side = p.y > 0.0 ? Side::Upper : Side::Lower;
    if (on_sigma) {
      p.y = 0.0;
      switch (detail::departure_at(z, p.x, o.escape)) {
        case detail::Departure::Upper: side = Side::Upper; break;
        case detail::Departure::Lower: side = Side::Lower; break;
        case detail::Departure::Ambiguous:
          if (tr.arcs.empty()) tr.arcs.push_back({ArcTag::Sliding, t, t, {{t, p.x, 0.0}}});
          tr.termination = Termination::EscapingAmbiguity;
          return tr;
        case detail::Departure::Slide: {
          const auto r = detail::run_slide(z, p.x, remaining, o);
          tr.arcs.push_back(detail::make_arc(ArcTag::Sliding, t, 1.0, r.samples));
          t += r.elapsed;
          p = {r.x, 0.0};
          if (r.end == detail::SlideEnd::Exit) continue;
          tr.termination = r.end == detail::SlideEnd::PseudoEquilibrium ? Termination::PseudoEquilibrium
                           : r.end == detail::SlideEnd::StepLimit        ? Termination::StepLimit
                                                                         : Termination::TimeExhausted;
          return tr;
        }
      }
    }
    const PolyField& f = detail::field_of(z, side);
    const auto r = detail::run_piece(f, p, detail::sign_of(side), remaining, on_sigma, o);
    tr.arcs.push_back(detail::make_arc(side == Side::Upper ? ArcTag::Upper : ArcTag::Lower, t, 1.0, r.samples));
    t += r.elapsed;
    p = r.state;
    switch (r.end) {
      case detail::PieceEnd::Hit:
        if (++hits >= o.max_sigma_hits) {
          tr.termination = Termination::ReachedSigma;
          return tr;
        }
        break;
      case detail::PieceEnd::TimeUp: tr.termination = Termination::TimeExhausted; return tr;
      case detail::PieceEnd::LeftDomain: tr.termination = Termination::LeftDomain; return tr;
      case detail::PieceEnd::StepLimit: tr.termination = Termination::StepLimit; return tr;
    }
  }
}

/// CSV columns: t, x, y, arc_index, field_tag.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
  os << "t,x,y,arc_index,field_tag\n";
  char buf[160];
  for (std::size_t k = 0; k < tr.arcs.size(); ++k) {
    for (const auto& s : tr.arcs[k].samples) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%zu,", s.t, s.x, s.y, k);
      os << buf << to_string(tr.arcs[k].tag) << '\n';
    }
  }
}

}  // namespace twofold
