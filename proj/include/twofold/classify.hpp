#pragma once

// Phase-portrait inventory of one system and its region/boundary label in
// the (alpha, beta) unfolding, cross-checked against the traced curves.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "twofold/bifurcation.hpp"
#include "twofold/core.hpp"
#include "twofold/error.hpp"
#include "twofold/maps.hpp"
#include "twofold/parallel.hpp"

namespace twofold {

enum class ConnectionKind { FoldFold, FoldPseudoEq, SlidingFoldFold };

inline std::string_view to_string(ConnectionKind k) {
  switch (k) {
    case ConnectionKind::FoldFold: return "FoldFold";
    case ConnectionKind::FoldPseudoEq: return "FoldPseudoEq";
    case ConnectionKind::SlidingFoldFold: return "SlidingFoldFold";
  }
  return "?";
}

struct Connection {
  ConnectionKind kind = ConnectionKind::FoldFold;
  double from = 0.0;
  double to = 0.0;
};

struct SlidingCycle {
  double fold = 0.0;  // the fold the cycle passes through
  Stability stability = Stability::Stable;
};

struct Inventory {
  Eta eta;
  double shift = 0.0;
  std::vector<std::pair<double, TangencyClass>> folds;
  std::optional<double> two_fold;
  bool two_fold_cycle = false;
  std::optional<PseudoEq> pseudo_eq;
  std::vector<CycleRecord> cycles;
  std::optional<SlidingCycle> sliding_cycle;
  std::vector<Connection> connections;
  std::optional<double> landing;

  bool has(ConnectionKind k) const {
    return std::any_of(connections.begin(), connections.end(), [k](const Connection& c) { return c.kind == k; });
  }
};

inline double label_tolerance(double local_residual) { return std::max(1e-5, 3.0 * local_residual); }

inline Inventory inventory(const MapContext& c, double tol_lab = 1e-5, const BifurcationTolerances& tol = {}) {
  Inventory inv;
  inv.eta = c.eta;
  inv.shift = c.shift;
  const double alpha = c.eta.alpha;
  const double beta = c.eta.beta;
  const bool coincident = std::abs(alpha) <= tol_lab;

  inv.folds.push_back({0.0, classify_tangency(c.z, 0.0)});
  if (coincident) {
    inv.two_fold = 0.0;
    inv.two_fold_cycle = std::abs(alpha) + std::abs(beta) <= tol_lab;
  } else {
    inv.folds.push_back({alpha, classify_tangency(c.z, alpha)});
    inv.pseudo_eq = find_pseudo_equilibrium(c);
  }

  inv.cycles = find_cycles(c, tol);
  if (inv.two_fold_cycle) {
    // the boundary zero at the two-fold is the two-fold cycle itself
    std::erase_if(inv.cycles, [&](const CycleRecord& r) { return r.kind == CycleKind::CriticalCrossing; });
  }
  if (coincident) return inv;

  if (std::abs(beta) <= tol_lab) {
    inv.connections.push_back({ConnectionKind::FoldFold, 0.0, alpha});
    return inv;
  }
  try {
    inv.landing = landing_point(c);
  } catch (const Error&) {
    return inv;  // the fold orbit does not come back near the segment
  }
  const double land = *inv.landing;
  const double p = inv.pseudo_eq->p;
  // Far fold is the one the landing orbit did not start from.
  const double far = alpha > 0.0 ? 0.0 : alpha;
  const double launch = alpha > 0.0 ? alpha : 0.0;
  const double lo = std::min(far, p);
  const double hi = std::max(far, p);
  if (std::abs(land - p) <= tol_lab) {
    inv.connections.push_back({ConnectionKind::FoldPseudoEq, launch, p});
  } else if (land > lo && land < hi) {
    inv.connections.push_back({ConnectionKind::SlidingFoldFold, launch, far});
  } else if (std::abs(land - launch) > tol.tol_b && land > std::min(p, launch) && land < std::max(p, launch)) {
    inv.sliding_cycle = SlidingCycle{launch, alpha > 0.0 ? Stability::Unstable : Stability::Stable};
  }
  return inv;
}

// ---------------------------------------------------------------------------
// Labels

enum class RegionLabel {
  R1, R2, R3, R4, R5, R6, R7, R8, R9,
  B12, B23, B34, B45, B56, B67, B78, B89, B91,
  ORIGIN, OUTSIDE,
};

inline constexpr std::array<RegionLabel, 20> kAllLabels = {
    RegionLabel::R1,  RegionLabel::R2,  RegionLabel::R3,  RegionLabel::R4,  RegionLabel::R5,
    RegionLabel::R6,  RegionLabel::R7,  RegionLabel::R8,  RegionLabel::R9,  RegionLabel::B12,
    RegionLabel::B23, RegionLabel::B34, RegionLabel::B45, RegionLabel::B56, RegionLabel::B67,
    RegionLabel::B78, RegionLabel::B89, RegionLabel::B91, RegionLabel::ORIGIN, RegionLabel::OUTSIDE};

inline std::string_view to_string(RegionLabel l) {
  constexpr std::array<std::string_view, 20> names = {"R1",  "R2",  "R3",  "R4",  "R5",  "R6",    "R7",
                                                      "R8",  "R9",  "B12", "B23", "B34", "B45",   "B56",
                                                      "B67", "B78", "B89", "B91", "ORIGIN", "OUTSIDE"};
  return names[static_cast<std::size_t>(l)];
}

inline std::optional<RegionLabel> label_from_string(std::string_view s) {
  for (auto l : kAllLabels)
    if (to_string(l) == s) return l;
  return std::nullopt;
}

/// Objects the phase portrait must contain for each label (besides the folds
/// and the pseudo-equilibrium, whose stability is fixed by the sign of alpha).
struct Signature {
  int side = 0;  // sign of alpha
  int stable_crossing = 0;
  int unstable_crossing = 0;
  int semi_stable = 0;
  std::optional<Stability> critical;
  std::optional<Stability> sliding;
  bool fold_fold = false;
  bool fold_pseudo_eq = false;
  bool sliding_fold_fold = false;
  bool two_fold_cycle = false;

  friend bool operator==(const Signature&, const Signature&) = default;
};

inline std::string describe(const Signature& s) {
  std::ostringstream os;
  os << "side=" << s.side << " stable=" << s.stable_crossing << " unstable=" << s.unstable_crossing
     << " semi=" << s.semi_stable;
  if (s.critical) os << " critical=" << to_string(*s.critical);
  if (s.sliding) os << " sliding=" << to_string(*s.sliding);
  if (s.fold_fold) os << " FoldFold";
  if (s.fold_pseudo_eq) os << " FoldPseudoEq";
  if (s.sliding_fold_fold) os << " SlidingFoldFold";
  if (s.two_fold_cycle) os << " two-fold-cycle";
  return os.str();
}

inline std::optional<Signature> expected_signature(RegionLabel l) {
  using S = Stability;
  Signature s;
  switch (l) {
    case RegionLabel::R1: s.side = -1; s.stable_crossing = 1; break;
    case RegionLabel::B91: s.side = -1; s.critical = S::Stable; break;
    case RegionLabel::R9: s.side = -1; s.sliding = S::Stable; break;
    case RegionLabel::B89: s.side = -1; s.fold_pseudo_eq = true; break;
    case RegionLabel::R8: s.side = -1; s.sliding_fold_fold = true; break;
    case RegionLabel::B78: s.side = -1; s.fold_fold = true; break;
    case RegionLabel::R7: s.side = -1; break;
    case RegionLabel::B12: s.side = 0; s.stable_crossing = 1; break;
    case RegionLabel::ORIGIN: s.side = 0; s.two_fold_cycle = true; break;
    case RegionLabel::B67: s.side = 0; break;
    case RegionLabel::R2: s.side = 1; s.stable_crossing = 1; break;
    case RegionLabel::B23: s.side = 1; s.stable_crossing = 1; s.fold_fold = true; break;
    case RegionLabel::R3: s.side = 1; s.stable_crossing = 1; s.sliding_fold_fold = true; break;
    case RegionLabel::B34: s.side = 1; s.stable_crossing = 1; s.fold_pseudo_eq = true; break;
    case RegionLabel::R4: s.side = 1; s.stable_crossing = 1; s.sliding = S::Unstable; break;
    case RegionLabel::B45: s.side = 1; s.stable_crossing = 1; s.critical = S::Unstable; break;
    case RegionLabel::R5: s.side = 1; s.stable_crossing = 1; s.unstable_crossing = 1; break;
    case RegionLabel::B56: s.side = 1; s.semi_stable = 1; break;
    case RegionLabel::R6: s.side = 1; break;
    case RegionLabel::OUTSIDE: return std::nullopt;
  }
  return s;
}

inline Signature signature_of(const Inventory& inv) {
  Signature s;
  s.side = inv.two_fold ? 0 : (inv.eta.alpha > 0.0 ? 1 : -1);
  for (const auto& c : inv.cycles) {
    if (c.kind == CycleKind::CriticalCrossing) {
      s.critical = c.stability;
    } else if (c.stability == Stability::Stable) {
      ++s.stable_crossing;
    } else if (c.stability == Stability::Unstable) {
      ++s.unstable_crossing;
    } else {
      ++s.semi_stable;
    }
  }
  if (inv.sliding_cycle) s.sliding = inv.sliding_cycle->stability;
  s.fold_fold = inv.has(ConnectionKind::FoldFold);
  s.fold_pseudo_eq = inv.has(ConnectionKind::FoldPseudoEq);
  s.sliding_fold_fold = inv.has(ConnectionKind::SlidingFoldFold);
  s.two_fold_cycle = inv.two_fold_cycle;
  return s;
}

/// The unique label whose expected objects match the inventory. Throws
/// IncompatibleInventory with the evidence when none does.
inline RegionLabel label_from_inventory(const Inventory& inv) {
  const Signature got = signature_of(inv);
  if (got.side != 0) {
    const Stability want = got.side > 0 ? Stability::Stable : Stability::Unstable;
    if (!inv.pseudo_eq || inv.pseudo_eq->stability != want)
      throw Error(ErrorCode::IncompatibleInventory, "pseudo-equilibrium missing or with wrong stability; " + describe(got));
  }
  for (auto l : kAllLabels) {
    const auto want = expected_signature(l);
    if (want && *want == got) return l;
  }
  throw Error(ErrorCode::IncompatibleInventory, "no case matches: " + describe(got));
}

/// Label from the position of (alpha, beta) relative to the traced curves.
/// `traces` is indexed by curve id - 1.
inline RegionLabel label_from_curves(double alpha, double beta, const std::array<CurveTrace, 5>& traces,
                                     double tol_lab, double beta_limit = 0.05) {
  if (std::abs(beta) > beta_limit + tol_lab) return RegionLabel::OUTSIDE;
  if (std::abs(alpha) <= tol_lab) {
    if (std::abs(alpha) + std::abs(beta) <= tol_lab) return RegionLabel::ORIGIN;
    return beta < 0.0 ? RegionLabel::B12 : RegionLabel::B67;
  }
  auto near = [&](double v) { return std::abs(beta - v) <= tol_lab; };
  if (alpha > 0.0) {
    const auto b1 = interpolate_curve(traces[0], alpha);
    const auto b2 = interpolate_curve(traces[1], alpha);
    const auto b4 = interpolate_curve(traces[3], alpha);
    if (!b1 || !b2 || !b4) return RegionLabel::OUTSIDE;
    if (near(0.0)) return RegionLabel::B23;
    if (beta < 0.0) return RegionLabel::R2;
    if (near(*b4)) return RegionLabel::B34;
    if (beta < *b4) return RegionLabel::R3;
    if (near(*b2)) return RegionLabel::B45;
    if (beta < *b2) return RegionLabel::R4;
    if (near(*b1)) return RegionLabel::B56;
    if (beta < *b1) return RegionLabel::R5;
    return RegionLabel::R6;
  }
  const auto b3 = interpolate_curve(traces[2], alpha);
  const auto b5 = interpolate_curve(traces[4], alpha);
  if (!b3 || !b5) return RegionLabel::OUTSIDE;
  if (near(0.0)) return RegionLabel::B78;
  if (beta > 0.0) return RegionLabel::R7;
  if (near(*b5)) return RegionLabel::B89;
  if (beta > *b5) return RegionLabel::R8;
  if (near(*b3)) return RegionLabel::B91;
  if (beta > *b3) return RegionLabel::R9;
  return RegionLabel::R1;
}

struct LabelResult {
  RegionLabel label = RegionLabel::OUTSIDE;
  Inventory inventory;
  double tol_lab = 1e-5;
};

/// Region label of the family member at (a, b), computed from the curves and
/// confirmed by the inventory. Throws IncompatibleInventory on disagreement.
inline LabelResult region_label(const Family& fam, double a, double b, const std::array<CurveTrace, 5>& traces,
                                const TraceOptions& o = {}) {
  LabelResult res;
  const MapContext c = prepare(fam.instantiate(a, b), o.lambda, o.integrator);
  const double alpha = c.eta.alpha;
  const double beta = c.eta.beta;
  double resid = 0.0;
  for (const auto& t : traces) resid = std::max(resid, local_residual(t, alpha));
  res.tol_lab = label_tolerance(resid);
  res.label = label_from_curves(alpha, beta, traces, res.tol_lab, std::max(std::abs(o.beta_lo), std::abs(o.beta_hi)));
  if (res.label == RegionLabel::OUTSIDE) return res;
  res.inventory = inventory(c, res.tol_lab);
  const RegionLabel from_inv = label_from_inventory(res.inventory);
  if (from_inv != res.label)
    throw Error(ErrorCode::IncompatibleInventory, "curves give " + std::string(to_string(res.label)) +
                                                      ", inventory gives " + std::string(to_string(from_inv)));
  return res;
}

// ---------------------------------------------------------------------------
// Symmetries (system-level versions live in core)

/// The family whose members are reflect_time_reversed of the input's.
inline Family reflect_time_reversed(const Family& fam) {
  Family out = fam;
  out.time_reversed = !fam.time_reversed;
  out.id = fam.id + (out.time_reversed ? "-reflected" : "");
  return out;
}

// ---------------------------------------------------------------------------
// Parameter sweep

struct SweepSpec {
  double a_lo = -0.05;
  double a_hi = 0.05;
  int na = 21;
  double b_lo = -0.05;
  double b_hi = 0.05;
  int nb = 21;
};

struct SweepRow {
  double a = 0.0;
  double b = 0.0;
  double alpha = std::nan("");
  double beta = std::nan("");
  std::string label = "ERROR";
  std::string reason;
  std::vector<CycleRecord> cycles;
  std::optional<PseudoEq> pseudo_eq;
  bool sliding_cycle = false;
  bool mirrored = false;

  bool labeled() const { return label != "ERROR" && label != "OUTSIDE"; }
};

inline std::vector<double> grid_values(double lo, double hi, int n) {
  std::vector<double> v;
  for (int k = 0; k < n; ++k) {
    double x = n == 1 ? lo : lo + (hi - lo) * k / (n - 1);
    if (std::abs(x) < 1e-15) x = 0.0;
    v.push_back(x);
  }
  return v;
}

/// Labels every grid point. Rows come back in grid order (a outer, b inner);
/// failures become label ERROR with the reason. With `mirrored`, `fam` is the
/// time-reversed family and labels carry a trailing '*'.
inline std::vector<SweepRow> sweep(const Family& fam, const SweepSpec& spec, const std::array<CurveTrace, 5>& traces,
                                   unsigned workers = 1, const TraceOptions& o = {}, bool mirrored = false) {
  const auto as = grid_values(spec.a_lo, spec.a_hi, spec.na);
  const auto bs = grid_values(spec.b_lo, spec.b_hi, spec.nb);
  return parallel_map(as.size() * bs.size(), workers, [&](std::size_t idx) {
    SweepRow row;
    row.a = as[idx / bs.size()];
    row.b = bs[idx % bs.size()];
    row.mirrored = mirrored;
    try {
      const MapContext c = prepare(fam.instantiate(row.a, row.b), o.lambda, o.integrator);
      row.alpha = c.eta.alpha;
      row.beta = c.eta.beta;
      try {
        const auto inv = inventory(c);
        row.cycles = inv.cycles;
        row.pseudo_eq = inv.pseudo_eq;
        row.sliding_cycle = inv.sliding_cycle.has_value();
      } catch (const Error&) {
      }
      const LabelResult lr = region_label(fam, row.a, row.b, traces, o);
      row.label = std::string(to_string(lr.label)) + (mirrored ? "*" : "");
      row.cycles = lr.inventory.cycles;
      row.pseudo_eq = lr.inventory.pseudo_eq;
      row.sliding_cycle = lr.inventory.sliding_cycle.has_value();
    } catch (const Error& e) {
      row.label = "ERROR";
      row.reason = e.what();
    }
    return row;
  });
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "a,b,alpha,beta,label,n_cycles,cycle_x_list,cycle_stabilities,pseudo_eq_x,pseudo_eq_stability,"
        "sliding_cycle_flag,reason\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& r : rows) {
    std::string xs, st;
    for (std::size_t k = 0; k < r.cycles.size(); ++k) {
      if (k) {
        xs += ';';
        st += ';';
      }
      xs += num(r.cycles[k].x_star);
      st += to_string(r.cycles[k].stability);
    }
    std::string reason = r.reason;
    std::replace(reason.begin(), reason.end(), ',', ';');
    std::replace(reason.begin(), reason.end(), '\n', ' ');
    os << num(r.a) << ',' << num(r.b) << ',' << num(r.alpha) << ',' << num(r.beta) << ',' << r.label << ','
       << r.cycles.size() << ',' << xs << ',' << st << ',' << (r.pseudo_eq ? num(r.pseudo_eq->p) : "") << ','
       << (r.pseudo_eq ? std::string(to_string(r.pseudo_eq->stability)) : "") << ',' << (r.sliding_cycle ? 1 : 0)
       << ',' << reason << '\n';
  }
}

}  // namespace twofold
