#include "hybridcare/lambert_w.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hybridcare/errors.hpp"

namespace hybridcare {

namespace {

double initial_guess(double z) {
  constexpr double e = 2.71828182845904523536;
  if (z < -0.25) {
    // series in p = sqrt(2(ez + 1)) around the branch point
    const double p = std::sqrt(std::max(0.0, 2.0 * (e * z + 1.0)));
    return -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0)));
  }
  if (z < 3.0) {
    return 0.5 * std::log1p(z) + 0.25 * z / (1.0 + 0.5 * z);
  }
  const double l1 = std::log(z);
  const double l2 = std::log(l1);
  return l1 - l2 + l2 / l1;
}

}  // namespace

double lambert_w(double z) {
  if (std::isnan(z) || z < kLambertBranchPoint) {
    throw DomainError("lambert_w: argument below -1/e");
  }
  if (z == 0.0) return 0.0;
  if (z == kLambertBranchPoint) return -1.0;
  if (std::isinf(z)) return z;

  double w = initial_guess(z);
  constexpr double eps = std::numeric_limits<double>::epsilon();
  for (int iter = 0; iter < 64; ++iter) {
    const double ew = std::exp(w);
    const double f = w * ew - z;
    const double wp1 = w + 1.0;
    if (wp1 == 0.0) break;
    const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
    if (denom == 0.0 || !std::isfinite(denom)) break;
    const double step = f / denom;
    double next = w - step;
    if (next < -1.0) next = -1.0;  // stay on the principal branch
    const bool done = std::abs(next - w) <= 4.0 * eps * (1.0 + std::abs(next));
    w = next;
    if (done) break;
  }
  return w;
}

}  // namespace hybridcare
