#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace hybridcare::numeric {

inline constexpr int kMaxBisectionIterations = 200;

struct RootResult {
  double x = 0.0;
  double fx = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Bracketed bisection for f(x) = 0 on [lo, hi] where f(lo) and f(hi) differ in sign.
///
/// Stops once the bracket is narrower than x_tol, |f| <= f_tol, or the bracket
/// can no longer be split in floating point.
template <typename F>
RootResult bisect(F&& f, double lo, double hi, double x_tol, double f_tol = 0.0,
                  int max_iter = kMaxBisectionIterations) {
  double f_lo = f(lo);
  RootResult r;
  if (f_lo == 0.0) return {lo, 0.0, 0, true};
  const double f_hi = f(hi);
  if (f_hi == 0.0) return {hi, 0.0, 0, true};
  if ((f_lo > 0.0) == (f_hi > 0.0)) {
    r.x = std::abs(f_lo) < std::abs(f_hi) ? lo : hi;
    r.fx = std::abs(f_lo) < std::abs(f_hi) ? f_lo : f_hi;
    return r;
  }
  for (int i = 0; i < max_iter; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = f(mid);
    r.iterations = i + 1;
    r.x = mid;
    r.fx = f_mid;
    if (std::abs(f_mid) <= f_tol || mid == lo || mid == hi) {
      r.converged = true;
      return r;
    }
    if ((f_mid > 0.0) == (f_lo > 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= x_tol) {
      r.x = 0.5 * (lo + hi);
      r.fx = f(r.x);
      r.converged = true;
      return r;
    }
  }
  return r;
}

/// Golden-section minimisation of a unimodal f on [lo, hi] down to bracket width tol.
template <typename F>
double golden_section_minimize(F&& f, double lo, double hi, double tol, int max_iter = 500) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  for (int i = 0; i < max_iter && (hi - lo) > tol; ++i) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = f(d);
    }
  }
  return 0.5 * (lo + hi);
}

/// n evenly spaced points covering [lo, hi], endpoints included.
inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> g(n);
  if (n == 1) {
    g[0] = lo;
    return g;
  }
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) g[i] = lo + step * static_cast<double>(i);
  g[n - 1] = hi;
  return g;
}

}  // namespace hybridcare::numeric
