#pragma once

#include <optional>
#include <span>
#include <vector>

#include "hybridcare/analytics.hpp"
#include "hybridcare/params.hpp"

namespace hybridcare {

inline constexpr double kRootTolerance = 1e-10;

enum class Regime {
  MaxAllowable,     ///< a* = A_bar
  Interior,         ///< a* solves the first-order condition inside (0, A_bar)
  ImmediateOnsite,  ///< a* = 0
  CapacityBinding,  ///< a* is pinned by W_T(a*) = C
};

const char* to_string(Regime regime);

struct ThresholdSolution {
  double a_star = 0.0;
  Regime regime = Regime::ImmediateOnsite;
  double gamma_shadow = 0.0;  ///< shadow price of capacity, 0 unless the constraint binds
  double cost = 0.0;
  double call_in_prob = 1.0;
  Workloads workloads;
  bool remote_moment_negative = false;  ///< only set by the quadratic-cost solver
};

/// Shape of W_T(a); for the unimodal shape a0 is found by bisection to kRootTolerance.
WorkloadCase classify_workload(const PatientParams& p);

struct FeasibilitySummary {
  WorkloadCase workload_case;
  double a_min = 0.0;  ///< argmin of W_T over [0, A_bar]
  double w_min = 0.0;  ///< W_T(a_min)

  bool feasible_for(double capacity) const { return w_min <= capacity; }
};

FeasibilitySummary feasibility(const PatientParams& p);

/// Interior stationary point of V(a) via the Lambert-W closed form.
/// Only meaningful for gamma < 0; the value may exceed A_bar or be negative.
double interior_threshold(const PatientParams& p);

/// |e^{-rho a} - (1 - beta rho / gamma - rho a) e^{rho x}|, the first-order residual.
double foc_residual(const PatientParams& p, double a);

/// Cost-minimising threshold over [0, A_bar] with unlimited capacity.
ThresholdSolution solve_uncapacitated(const PatientParams& p);

struct TravelSample {
  double T = 0.0;
  double a_star = 0.0;
  double da_dT = 0.0;  ///< closed-form sensitivity of a* to travel time
};

/// Travel-time structure of the uncapacitated optimum at fixed x.
///
/// For gamma >= 0 only T_UB is defined. For gamma < 0, remote care is used
/// exactly on (T_LB, T_UB); the threshold rises until T_hat and falls after.
struct TravelProfile {
  std::optional<double> T_LB;
  double T_UB = 0.0;
  std::optional<double> T_hat;
  bool empty_interval = false;
  std::vector<TravelSample> samples;
};

/// Requires T_grid strictly increasing.
TravelProfile travel_profile(const PatientParams& p, std::span<const double> T_grid);

/// Capacity-constrained optimum. Throws InfeasibleError when W_T(a_min) > C.
ThresholdSolution solve_capacitated(const PatientParams& p, double capacity);

struct GammaEquivalenceReport {
  double capacity = 0.0;
  double gamma_shadow = 0.0;
  double a_capacitated = 0.0;
  double a_surcharged = 0.0;  ///< unconstrained optimum with h_R + Gamma, h_H + Gamma
  double gamma_coefficient = 0.0;           ///< gamma of the original costs
  double gamma_coefficient_surcharged = 0.0;  ///< gamma + Gamma (1/theta_H - 1/theta_R)
  double difference = 0.0;
  bool equivalent = false;
};

/// Checks that the capacitated threshold is the unconstrained optimum under
/// Gamma-surcharged holding costs.
GammaEquivalenceReport verify_gamma_equivalence(const PatientParams& p, double capacity,
                                                double tolerance = 1e-8);

/// Minimiser of the quadratic-cost objective: a 10^4-cell grid scan refined by
/// golden-section search. With a capacity the search is restricted to
/// {a : W_T(a) <= C}, an interval around a_min.
ThresholdSolution solve_quadratic(const PatientParams& p, std::optional<double> capacity = {});

}  // namespace hybridcare
