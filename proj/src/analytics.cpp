#include "hybridcare/analytics.hpp"

#include <cmath>

namespace hybridcare {

namespace {

// 1 - e^{-u} without cancellation for small u.
double one_minus_exp_neg(double u) { return -std::expm1(-u); }

// u - 1 + e^{-u}, positive for u > 0.
double h_shape(double u) { return u + std::expm1(-u); }

double rho_of(const PatientParams& p) { return 2.0 * p.theta_R / (p.sigma_R * p.sigma_R); }

double onsite_start(const PatientParams& p, double a) { return p.x + a + p.T * p.theta_T; }

}  // namespace

DerivedCoeffs derive_coeffs(const PatientParams& p) {
  validate(p);
  DerivedCoeffs c;
  c.rho = rho_of(p);
  c.alpha = p.h_R * p.x / p.theta_R;
  c.beta = -p.h_R * p.x / p.theta_R + p.h_T * p.T + p.h_H * (p.x + p.theta_T * p.T) / p.theta_H;
  c.gamma = -p.h_R / p.theta_R + p.h_H / p.theta_H;
  c.eta = p.h_T + p.h_H * p.theta_T / p.theta_H;
  c.Delta = c.rho * p.theta_T * p.T / h_shape(c.rho * p.x);
  c.A_bar = max_threshold(p);
  return c;
}

double call_in_prob(double rho, double x, double a) {
  // (1 - e^{-rho x}) / (e^{rho a} - e^{-rho x}), multiplied through by e^{-rho a}
  return one_minus_exp_neg(rho * x) * std::exp(-rho * a) / one_minus_exp_neg(rho * (x + a));
}

double call_in_prob_deriv(double rho, double x, double a) {
  return -rho * call_in_prob(rho, x, a) / one_minus_exp_neg(rho * (x + a));
}

double elos_remote(double rho, double theta_R, double x, double a) {
  const double p = call_in_prob(rho, x, a);
  return ((1.0 - p) * x - p * a) / theta_R;
}

double elos_onsite(const PatientParams& p, double a) { return onsite_start(p, a) / p.theta_H; }

Workloads workloads(const PatientParams& p, double a) {
  const double rho = rho_of(p);
  const double prob = call_in_prob(rho, p.x, a);
  Workloads w;
  w.onsite = p.lambda * prob * onsite_start(p, a) / p.theta_H;
  w.remote = p.lambda * ((1.0 - prob) * p.x - prob * a) / p.theta_R;
  w.total = w.onsite + w.remote;
  return w;
}

Workloads workload_derivs(const PatientParams& p, double a) {
  const double rho = rho_of(p);
  const double dp = call_in_prob_deriv(rho, p.x, a);
  // a + x + p/p' = h(rho (a + x)) / rho
  const double slack = h_shape(rho * (a + p.x)) / rho;
  Workloads d;
  d.onsite = p.lambda / p.theta_H * dp * (slack + p.theta_T * p.T);
  d.remote = -p.lambda / p.theta_R * dp * slack;
  d.total = d.onsite + d.remote;
  return d;
}

double workload_total_deriv(const PatientParams& p, double a) { return workload_derivs(p, a).total; }

double cost_rate(const PatientParams& p, double a) {
  const DerivedCoeffs c = derive_coeffs(p);
  const double prob = call_in_prob(c.rho, p.x, a);
  return p.lambda * (c.alpha + c.beta * prob + c.gamma * prob * a);
}

double cost_rate_direct(const PatientParams& p, double a) {
  const double rho = rho_of(p);
  const double prob = call_in_prob(rho, p.x, a);
  const double remote_los = elos_remote(rho, p.theta_R, p.x, a);
  return p.lambda * (p.h_R * remote_los + prob * (p.h_T * p.T + p.h_H * elos_onsite(p, a)));
}

double cost_rate_deriv(const PatientParams& p, double a) {
  const DerivedCoeffs c = derive_coeffs(p);
  const double u = c.rho * (p.x + a);
  const double abs_dp_over_rho = call_in_prob(c.rho, p.x, a) / one_minus_exp_neg(u);
  const double bracket = c.gamma * one_minus_exp_neg(u) - c.beta * c.rho - c.gamma * c.rho * a;
  return p.lambda * abs_dp_over_rho * bracket;
}

SecondMoments second_moments(const PatientParams& p, double a) {
  const double rho = rho_of(p);
  const double prob = call_in_prob(rho, p.x, a);
  const double start = onsite_start(p, a);
  SecondMoments m;
  m.remote = 2.0 / (p.theta_R * p.theta_R) * (prob - p.theta_R * p.x / (p.sigma_R * p.sigma_R));
  m.onsite = start / (p.theta_H * p.theta_H * p.theta_H) * p.sigma_H * p.sigma_H +
             (start / p.theta_H) * (start / p.theta_H);
  m.remote_negative = m.remote < 0.0;
  return m;
}

QuadraticCoeffs quadratic_coeffs(const PatientParams& p) {
  validate(p);
  const double th2 = p.theta_H * p.theta_H;
  const double th3 = th2 * p.theta_H;
  const double sh2 = p.sigma_H * p.sigma_H;
  const double base = p.x + p.T * p.theta_T;
  QuadraticCoeffs q;
  q.vartheta = -2.0 * p.lambda * p.h_R * p.x / (p.theta_R * p.sigma_R * p.sigma_R);
  q.delta = p.lambda * p.h_H * (sh2 / th3 + 2.0 * base / th2);
  q.phi = p.lambda * p.h_H / th2;
  q.psi = p.lambda * (2.0 * p.h_R / (p.theta_R * p.theta_R) + p.h_T * p.T +
                      p.h_H * (base / th3 * sh2 + (base / p.theta_H) * (base / p.theta_H)));
  return q;
}

QuadraticCost cost_rate_quadratic(const PatientParams& p, double a) {
  const SecondMoments m = second_moments(p, a);
  const double prob = call_in_prob(rho_of(p), p.x, a);
  QuadraticCost out;
  out.value = p.lambda * (p.h_R * m.remote + (p.h_T * p.T + p.h_H * m.onsite) * prob);
  out.remote_moment_negative = m.remote_negative;
  return out;
}

double cost_rate_quadratic_coeffs(const PatientParams& p, double a) {
  const QuadraticCoeffs q = quadratic_coeffs(p);
  const double prob = call_in_prob(rho_of(p), p.x, a);
  return q.vartheta + q.delta * a * prob + q.phi * a * a * prob + q.psi * prob;
}

const char* to_string(WorkloadShape shape) {
  switch (shape) {
    case WorkloadShape::Decreasing:
      return "decreasing";
    case WorkloadShape::Unimodal:
      return "unimodal";
    case WorkloadShape::Increasing:
      return "increasing";
  }
  return "unknown";
}

}  // namespace hybridcare
