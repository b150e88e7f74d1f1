#include "hybridcare/params.hpp"

#include <algorithm>
#include <cmath>

#include "hybridcare/errors.hpp"

namespace hybridcare {

namespace {

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) {
    throw ValidationError(std::string("parameter '") + name + "' is not finite");
  }
}

void require_positive(double v, const char* name) {
  require_finite(v, name);
  if (!(v > 0.0)) {
    throw ValidationError(std::string("parameter '") + name + "' must be > 0");
  }
}

void require_nonnegative(double v, const char* name) {
  require_finite(v, name);
  if (v < 0.0) {
    throw ValidationError(std::string("parameter '") + name + "' must be >= 0");
  }
}

}  // namespace

void validate(const PatientParams& p) {
  require_nonnegative(p.lambda, "lambda");
  require_positive(p.x, "x");
  require_nonnegative(p.T, "T");
  require_positive(p.theta_R, "theta_R");
  require_positive(p.theta_H, "theta_H");
  require_positive(p.theta_T, "theta_T");
  require_positive(p.sigma_R, "sigma_R");
  require_positive(p.sigma_H, "sigma_H");
  require_positive(p.h_R, "h_R");
  require_positive(p.h_H, "h_H");
  require_positive(p.h_T, "h_T");
  require_positive(p.S_bar, "S_bar");
}

PatientParams with_cost_surcharge(const PatientParams& p, double surcharge) {
  PatientParams q = p;
  q.h_R += surcharge;
  q.h_H += surcharge;
  return q;
}

double max_threshold(const PatientParams& p) {
  return std::max(0.0, p.S_bar - p.x - p.T * p.theta_T);
}

}  // namespace hybridcare
