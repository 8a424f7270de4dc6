#pragma once

// Plain SVG 1.1 rendering of phase portraits and parameter-plane diagrams.
// Output depends only on the inputs (fixed number formatting, no timestamps).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "twofold/bifurcation.hpp"
#include "twofold/classify.hpp"
#include "twofold/core.hpp"
#include "twofold/flow.hpp"

namespace twofold {

struct Viewport {
  double x0 = -1.0, x1 = 1.0, y0 = -1.0, y1 = 1.0;
  int width = 640, height = 640;
};

struct Glyph {
  enum class Kind { Fold, PseudoEq, Cycle } kind = Kind::Fold;
  double x = 0.0, y = 0.0;
};

struct SvgScene {
  Viewport view;
  std::vector<std::pair<ArcTag, std::vector<Vec2>>> polylines;
  /// Coloured segments of the switching line: (x0, x1, class).
  std::vector<std::tuple<double, double, SigmaTag>> sigma_segments;
  std::vector<Glyph> glyphs;
};

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

inline double px(const Viewport& v, double x) { return (x - v.x0) / (v.x1 - v.x0) * v.width; }
inline double py(const Viewport& v, double y) { return (v.y1 - y) / (v.y1 - v.y0) * v.height; }

inline const char* arc_colour(ArcTag t) {
  switch (t) {
    case ArcTag::Upper: return "#1f77b4";
    case ArcTag::Lower: return "#d62728";
    case ArcTag::Sliding: return "#2ca02c";
  }
  return "#000";
}

inline const char* sigma_colour(SigmaTag t) {
  switch (t) {
    case SigmaTag::Crossing: return "#999999";
    case SigmaTag::Sliding: return "#2ca02c";
    case SigmaTag::Escaping: return "#ff7f0e";
    case SigmaTag::Tangency: return "#000000";
  }
  return "#000";
}

inline std::string header(int w, int h) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
         std::to_string(w) + "\" height=\"" + std::to_string(h) + "\" viewBox=\"0 0 " + std::to_string(w) + " " +
         std::to_string(h) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

}  // namespace detail

/// Scene for one orbit: arcs, the classified switching line and folds.
inline SvgScene portrait_scene(const FilippovSystem& z, const Trajectory& tr) {
  SvgScene s;
  double xmin = -0.1, xmax = 0.1, ymin = -0.1, ymax = 0.1;
  for (const auto& a : tr.arcs) {
    std::vector<Vec2> pts;
    for (const auto& p : a.samples) {
      pts.push_back({p.x, p.y});
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
    s.polylines.push_back({a.tag, std::move(pts)});
  }
  const double pad = 0.05 * std::max(xmax - xmin, ymax - ymin);
  s.view = {xmin - pad, xmax + pad, ymin - pad, ymax + pad, 640, 640};

  constexpr int kCells = 400;
  const double h = (s.view.x1 - s.view.x0) / kCells;
  for (int k = 0; k < kCells; ++k) {
    const double a = s.view.x0 + k * h;
    const SigmaTag t = classify_sigma_point(z, a + 0.5 * h).tag;
    if (!s.sigma_segments.empty() && std::get<2>(s.sigma_segments.back()) == t)
      std::get<1>(s.sigma_segments.back()) = a + h;
    else
      s.sigma_segments.emplace_back(a, a + h, t);
  }
  const Poly1 u = z.upper.dy.on_sigma(), v = z.lower.dy.on_sigma();
  for (const auto* g : {&u, &v})
    for (double r : scan_roots(*g, s.view.x0, s.view.x1, 400)) s.glyphs.push_back({Glyph::Kind::Fold, r, 0.0});
  return s;
}

inline std::string render_svg(const SvgScene& s) {
  const auto& v = s.view;
  std::string out = detail::header(v.width, v.height);
  for (const auto& [x0, x1, tag] : s.sigma_segments) {
    out += "<line x1=\"" + detail::fmt(detail::px(v, x0)) + "\" y1=\"" + detail::fmt(detail::py(v, 0)) + "\" x2=\"" +
           detail::fmt(detail::px(v, x1)) + "\" y2=\"" + detail::fmt(detail::py(v, 0)) + "\" stroke=\"" +
           detail::sigma_colour(tag) + "\" stroke-width=\"3\"/>\n";
  }
  for (const auto& [tag, pts] : s.polylines) {
    out += "<polyline fill=\"none\" stroke=\"";
    out += detail::arc_colour(tag);
    out += "\" stroke-width=\"1\" points=\"";
    for (const auto& p : pts) out += detail::fmt(detail::px(v, p.x)) + "," + detail::fmt(detail::py(v, p.y)) + " ";
    out += "\"/>\n";
  }
  for (const auto& g : s.glyphs) {
    const char* colour = g.kind == Glyph::Kind::Fold ? "black" : g.kind == Glyph::Kind::PseudoEq ? "purple" : "orange";
    out += "<circle cx=\"" + detail::fmt(detail::px(v, g.x)) + "\" cy=\"" + detail::fmt(detail::py(v, g.y)) +
           "\" r=\"4\" fill=\"" + colour + "\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

/// Parameter-plane diagram: one cell per sweep point coloured by label, with
/// the traced curves drawn on top.
inline std::string render_diagram_svg(const std::vector<SweepRow>& rows, const SweepSpec& spec,
                                      const std::array<CurveTrace, 5>& traces) {
  Viewport v{spec.a_lo, spec.a_hi, spec.b_lo, spec.b_hi, 640, 640};
  const double pad_a = spec.na > 1 ? 0.5 * (spec.a_hi - spec.a_lo) / (spec.na - 1) : 0.01;
  const double pad_b = spec.nb > 1 ? 0.5 * (spec.b_hi - spec.b_lo) / (spec.nb - 1) : 0.01;
  v.x0 -= pad_a;
  v.x1 += pad_a;
  v.y0 -= pad_b;
  v.y1 += pad_b;
  static const std::map<std::string, const char*> palette = {
      {"R1", "#8dd3c7"}, {"R2", "#ffffb3"}, {"R3", "#bebada"}, {"R4", "#fb8072"}, {"R5", "#80b1d3"},
      {"R6", "#fdb462"}, {"R7", "#b3de69"}, {"R8", "#fccde5"}, {"R9", "#bc80bd"}, {"ERROR", "#444444"},
      {"OUTSIDE", "#ffffff"}};
  std::string out = detail::header(v.width, v.height);
  const double cw = detail::px(v, v.x0 + 2 * pad_a) - detail::px(v, v.x0);
  const double ch = detail::py(v, v.y0) - detail::py(v, v.y0 + 2 * pad_b);
  for (const auto& r : rows) {
    std::string key = r.label;
    if (!key.empty() && key.back() == '*') key.pop_back();
    const auto it = palette.find(key);
    const char* colour = it != palette.end() ? it->second : "#d9d9d9";  // boundaries
    out += "<rect x=\"" + detail::fmt(detail::px(v, r.a - pad_a)) + "\" y=\"" +
           detail::fmt(detail::py(v, r.b + pad_b)) + "\" width=\"" + detail::fmt(cw) + "\" height=\"" +
           detail::fmt(ch) + "\" fill=\"" + colour + "\"><title>" + r.label + "</title></rect>\n";
  }
  for (const auto& t : traces) {
    out += "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"";
    for (const auto& p : t.points)
      if (p.converged && p.alpha >= v.x0 && p.alpha <= v.x1)
        out += detail::fmt(detail::px(v, p.alpha)) + "," + detail::fmt(detail::py(v, p.beta)) + " ";
    out += "\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace twofold
