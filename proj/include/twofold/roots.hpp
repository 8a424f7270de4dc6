#pragma once

// Thin wrappers over Boost.Math root finding / minimisation and Eigen least
// squares, reporting failures through twofold::Error.

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "twofold/error.hpp"

namespace twofold {

/// Bracketed root of f on [lo, hi] (TOMS 748). Throws BracketFailure when the
/// endpoint values share a strict sign.
template <class F>
double find_root(F&& f, double lo, double hi, double xtol = 1e-14, std::uintmax_t max_iter = 200) {
  const double flo = f(lo);
  const double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (std::signbit(flo) == std::signbit(fhi) || std::isnan(flo) || std::isnan(fhi)) {
    throw Error(ErrorCode::BracketFailure, "no sign change on [" + std::to_string(lo) + ", " +
                                               std::to_string(hi) + "]: f = " + std::to_string(flo) +
                                               ", " + std::to_string(fhi));
  }
  auto done = [xtol](double a, double b) { return std::abs(b - a) <= xtol; };
  std::uintmax_t iters = max_iter;
  const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, done, iters);
  const double fa = f(a);
  const double fb = f(b);
  return std::abs(fa) <= std::abs(fb) ? a : b;
}

/// Local minimum of f on [lo, hi] (Brent's golden-section/parabolic method).
/// Returns (argmin, min).
template <class F>
std::pair<double, double> minimize(F&& f, double lo, double hi, int bits = 40) {
  std::uintmax_t iters = 500;
  return boost::math::tools::brent_find_minima(f, lo, hi, bits, iters);
}

/// All sign-change roots of f on [lo, hi], located by a uniform scan with
/// `n` cells followed by bracketed refinement. Roots of even multiplicity are
/// missed.
template <class F>
std::vector<double> scan_roots(F&& f, double lo, double hi, int n = 400, double xtol = 1e-14) {
  std::vector<double> roots;
  double x0 = lo;
  double f0 = f(x0);
  if (f0 == 0.0) roots.push_back(x0);
  for (int k = 1; k <= n; ++k) {
    const double x1 = lo + (hi - lo) * k / n;
    const double f1 = f(x1);
    if (f1 == 0.0) {
      roots.push_back(x1);
    } else if (f0 != 0.0 && std::signbit(f0) != std::signbit(f1)) {
      roots.push_back(find_root(f, x0, x1, xtol));
    }
    x0 = x1;
    f0 = f1;
  }
  return roots;
}

struct LeastSquaresFit {
  std::vector<double> coefficients;
  double rms_residual = 0.0;
};

/// Solves min |A c - y|_2 where `rows` are the rows of A.
inline LeastSquaresFit least_squares(const std::vector<std::vector<double>>& rows,
                                     const std::vector<double>& y) {
  const auto m = static_cast<Eigen::Index>(rows.size());
  if (m == 0 || rows.front().empty() || rows.size() != y.size())
    throw Error(ErrorCode::FitIllConditioned, "empty or mismatched design matrix");
  const auto n = static_cast<Eigen::Index>(rows.front().size());
  if (m < n) throw Error(ErrorCode::FitIllConditioned, "fewer samples than unknowns");
  Eigen::MatrixXd a(m, n);
  Eigen::VectorXd rhs(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) a(r, c) = rows[r][c];
    rhs(r) = y[r];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < n) throw Error(ErrorCode::FitIllConditioned, "rank-deficient design matrix");
  const Eigen::VectorXd c = qr.solve(rhs);
  LeastSquaresFit fit;
  fit.coefficients.assign(c.data(), c.data() + n);
  fit.rms_residual = std::sqrt((a * c - rhs).squaredNorm() / static_cast<double>(m));
  return fit;
}

}  // namespace twofold
