#pragma once

#include <optional>

#include "hybridcare/params.hpp"

namespace hybridcare {

/// Scalar coefficients derived from one patient type.
struct DerivedCoeffs {
  double rho = 0.0;    ///< 2 theta_R / sigma_R^2
  double alpha = 0.0;  ///< per-patient cost of never calling in
  double beta = 0.0;   ///< cost of immediate transfer minus cost of never transferring
  double gamma = 0.0;  ///< marginal cost gap, h_H/theta_H - h_R/theta_R
  double eta = 0.0;    ///< marginal cost of travel time, h_T + h_H theta_T / theta_H
  double Delta = 0.0;  ///< workload-shape threshold
  double A_bar = 0.0;  ///< largest admissible call-in threshold
};

DerivedCoeffs derive_coeffs(const PatientParams& p);

// Two-barrier exit of a Brownian motion started at x with drift -theta_R,
// absorbed at 0 (discharge) and at x + a (call-in). All evaluated in a form
// that cannot overflow for large rho*a.

/// Probability the remote episode ends in call-in.
double call_in_prob(double rho, double x, double a);
/// d/da of call_in_prob; strictly negative.
double call_in_prob_deriv(double rho, double x, double a);
/// Expected remote length of stay.
double elos_remote(double rho, double theta_R, double x, double a);

/// Expected on-site length of stay, (x + a + T theta_T) / theta_H.
double elos_onsite(const PatientParams& p, double a);

struct Workloads {
  double onsite = 0.0;  ///< W_H
  double remote = 0.0;  ///< W_R
  double total = 0.0;   ///< W_T
};

Workloads workloads(const PatientParams& p, double a);
/// Closed-form derivatives of W_H, W_R and W_T with respect to a.
Workloads workload_derivs(const PatientParams& p, double a);
double workload_total_deriv(const PatientParams& p, double a);

/// Long-run average cost rate lambda (alpha + beta p + gamma p a).
double cost_rate(const PatientParams& p, double a);
/// Same quantity assembled from expected lengths of stay and travel cost.
double cost_rate_direct(const PatientParams& p, double a);
/// d/da of cost_rate.
double cost_rate_deriv(const PatientParams& p, double a);

/// Second moments of the remote and on-site lengths of stay.
///
/// The remote moment is evaluated exactly as (2/theta_R^2)(p - theta_R x / sigma_R^2);
/// that expression can turn negative and is flagged rather than clamped.
struct SecondMoments {
  double remote = 0.0;
  double onsite = 0.0;
  bool remote_negative = false;
};

SecondMoments second_moments(const PatientParams& p, double a);

/// Coefficients of V(a) = vartheta + delta a p + phi a^2 p + psi p under quadratic holding costs.
struct QuadraticCoeffs {
  double vartheta = 0.0;
  double delta = 0.0;
  double phi = 0.0;
  double psi = 0.0;
};

QuadraticCoeffs quadratic_coeffs(const PatientParams& p);

struct QuadraticCost {
  double value = 0.0;
  bool remote_moment_negative = false;
};

/// Quadratic-cost objective built from the second moments.
QuadraticCost cost_rate_quadratic(const PatientParams& p, double a);
/// Quadratic-cost objective from the collected coefficients.
double cost_rate_quadratic_coeffs(const PatientParams& p, double a);

enum class WorkloadShape { Decreasing, Unimodal, Increasing };

/// Shape of W_T(a) on [0, inf); a0 is the interior minimiser for the unimodal shape.
struct WorkloadCase {
  WorkloadShape shape = WorkloadShape::Decreasing;
  std::optional<double> a0;
};

const char* to_string(WorkloadShape shape);

}  // namespace hybridcare
