#pragma once

namespace hybridcare {

/// Smallest admissible argument of the principal branch, -1/e.
inline constexpr double kLambertBranchPoint = -0.36787944117144232160;

/// Principal branch W0 of the Lambert-W function: the w >= -1 solving w*e^w = z.
///
/// Halley iteration started from a series expansion around the branch point,
/// log1p for moderate arguments and the asymptotic log-log form for large ones.
/// Throws DomainError for z < -1/e or NaN.
double lambert_w(double z);

}  // namespace hybridcare
