#include "hybridcare/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hybridcare/errors.hpp"
#include "hybridcare/lambert_w.hpp"
#include "hybridcare/numeric.hpp"

namespace hybridcare {

namespace {

constexpr double kBranchClampWindow = 1e-12;
constexpr double kBranchClampOffset = 1e-15;

double workload_scale(double capacity) { return std::max(1.0, std::abs(capacity)); }

ThresholdSolution make_solution(const PatientParams& p, double a, Regime regime) {
  const DerivedCoeffs c = derive_coeffs(p);
  ThresholdSolution s;
  s.a_star = a;
  s.regime = regime;
  s.cost = cost_rate(p, a);
  s.call_in_prob = call_in_prob(c.rho, p.x, a);
  s.workloads = workloads(p, a);
  return s;
}

double lambert_arg_clamped(double z) {
  if (z < kLambertBranchPoint && z >= kLambertBranchPoint - kBranchClampWindow) {
    return kLambertBranchPoint + kBranchClampOffset;
  }
  if (z < kLambertBranchPoint + kBranchClampOffset && z >= kLambertBranchPoint) {
    return kLambertBranchPoint + kBranchClampOffset;
  }
  return z;
}

// x + a_tilde as a function of travel time alone (beta = gamma x + eta T).
double shifted_interior_threshold(double rho, double gamma, double eta, double T) {
  const double w = lambert_w(lambert_arg_clamped(-std::exp(eta * rho * T / gamma - 1.0)));
  return (1.0 + w) / rho - eta * T / gamma;
}

// Interval {a in [0, A_bar] : W_T(a) <= C}; both ends lie on the feasible side.
std::pair<double, double> feasible_interval(const PatientParams& p, const FeasibilitySummary& fs,
                                            double capacity) {
  const double A = max_threshold(p);
  auto excess = [&](double a) { return workloads(p, a).total - capacity; };
  double lo = 0.0;
  double hi = A;
  if (excess(0.0) > 0.0) {
    const auto r = numeric::bisect(excess, 0.0, fs.a_min, 0.0, 0.0);
    lo = r.x;
    if (excess(lo) > 0.0) lo = std::nextafter(lo, fs.a_min);
  }
  if (excess(A) > 0.0) {
    const auto r = numeric::bisect(excess, fs.a_min, A, 0.0, 0.0);
    hi = r.x;
    if (excess(hi) > 0.0) hi = std::nextafter(hi, fs.a_min);
  }
  return {std::min(lo, hi), std::max(lo, hi)};
}

}  // namespace

const char* to_string(Regime regime) {
  switch (regime) {
    case Regime::MaxAllowable:
      return "max_allowable";
    case Regime::Interior:
      return "interior";
    case Regime::ImmediateOnsite:
      return "immediate_onsite";
    case Regime::CapacityBinding:
      return "capacity_binding";
  }
  return "unknown";
}

WorkloadCase classify_workload(const PatientParams& p) {
  const DerivedCoeffs c = derive_coeffs(p);
  const double ratio = p.theta_H / p.theta_R;
  WorkloadCase wc;
  if (ratio <= 1.0) {
    wc.shape = WorkloadShape::Decreasing;
    return wc;
  }
  if (ratio >= 1.0 + c.Delta) {
    wc.shape = WorkloadShape::Increasing;
    return wc;
  }
  // sign of W_T'(a) is the sign of (ratio - 1) h(rho (a + x)) - rho theta_T T
  auto slope_sign = [&](double a) {
    const double u = c.rho * (a + p.x);
    return (ratio - 1.0) * (u + std::expm1(-u)) - c.rho * p.theta_T * p.T;
  };
  double hi = 1.0;
  while (slope_sign(hi) <= 0.0 && hi < 1e300) hi *= 2.0;
  const auto root = numeric::bisect(slope_sign, 0.0, hi, kRootTolerance);
  wc.shape = WorkloadShape::Unimodal;
  wc.a0 = root.x;
  return wc;
}

FeasibilitySummary feasibility(const PatientParams& p) {
  FeasibilitySummary fs;
  fs.workload_case = classify_workload(p);
  const double A = max_threshold(p);
  switch (fs.workload_case.shape) {
    case WorkloadShape::Decreasing:
      fs.a_min = A;
      break;
    case WorkloadShape::Increasing:
      fs.a_min = 0.0;
      break;
    case WorkloadShape::Unimodal:
      fs.a_min = std::min(*fs.workload_case.a0, A);
      break;
  }
  fs.w_min = workloads(p, fs.a_min).total;
  return fs;
}

double interior_threshold(const PatientParams& p) {
  const DerivedCoeffs c = derive_coeffs(p);
  const double z = -std::exp(-c.rho * p.x + c.beta * c.rho / c.gamma - 1.0);
  const double w = lambert_w(lambert_arg_clamped(z));
  return (1.0 + w) / c.rho - c.beta / c.gamma;
}

double foc_residual(const PatientParams& p, double a) {
  const DerivedCoeffs c = derive_coeffs(p);
  const double lhs = std::exp(-c.rho * a);
  const double rhs = (1.0 - c.beta * c.rho / c.gamma - c.rho * a) * std::exp(c.rho * p.x);
  return std::abs(lhs - rhs);
}

ThresholdSolution solve_uncapacitated(const PatientParams& p) {
  const DerivedCoeffs c = derive_coeffs(p);
  const double A = c.A_bar;
  if (A <= 0.0) return make_solution(p, 0.0, Regime::ImmediateOnsite);
  if (c.gamma >= 0.0) return make_solution(p, A, Regime::MaxAllowable);

  const double dominance = c.gamma * (-std::expm1(-c.rho * p.x)) / c.rho;
  const double tie_slack = 1e-14 * std::max(std::abs(c.beta), std::abs(dominance));
  if (c.beta <= dominance + tie_slack) return make_solution(p, 0.0, Regime::ImmediateOnsite);

  const double a_tilde = std::max(0.0, interior_threshold(p));
  if (a_tilde >= A - 1e-12 * std::max(1.0, A)) return make_solution(p, A, Regime::MaxAllowable);
  return make_solution(p, a_tilde, Regime::Interior);
}

TravelProfile travel_profile(const PatientParams& p, std::span<const double> T_grid) {
  for (std::size_t i = 1; i < T_grid.size(); ++i) {
    if (!(T_grid[i] > T_grid[i - 1])) throw ValidationError("travel grid must be strictly increasing");
  }
  const DerivedCoeffs c = derive_coeffs(p);
  TravelProfile prof;
  prof.T_UB = (p.S_bar - p.x) / p.theta_T;

  if (c.gamma < 0.0) {
    const double t_lb = -(c.gamma / c.eta) * (p.x - (-std::expm1(-c.rho * p.x)) / c.rho);
    prof.T_LB = t_lb;
    if (t_lb >= prof.T_UB) {
      prof.empty_interval = true;
    } else {
      // a_tilde(T) - A_bar(T) written without x, so T_hat is identical across x
      auto gap = [&](double T) {
        return shifted_interior_threshold(c.rho, c.gamma, c.eta, T) - (p.S_bar - p.theta_T * T);
      };
      prof.T_hat = numeric::bisect(gap, t_lb, prof.T_UB, kRootTolerance).x;
    }
  } else {
    prof.empty_interval = prof.T_UB <= 0.0;
  }

  prof.samples.reserve(T_grid.size());
  for (double T : T_grid) {
    PatientParams q = p;
    q.T = T;
    TravelSample s;
    s.T = T;
    s.a_star = solve_uncapacitated(q).a_star;
    if (c.gamma < 0.0) {
      if (prof.T_hat && T > *prof.T_LB && T < *prof.T_hat) {
        const double w = lambert_w(lambert_arg_clamped(-std::exp(c.eta * c.rho * T / c.gamma - 1.0)));
        s.da_dT = -(c.eta / c.gamma) / (1.0 + w);
      } else if (prof.T_hat && T > *prof.T_hat && T < prof.T_UB) {
        s.da_dT = -p.theta_T;
      }
    } else if (T < prof.T_UB) {
      s.da_dT = -p.theta_T;
    }
    prof.samples.push_back(s);
  }
  return prof;
}

ThresholdSolution solve_capacitated(const PatientParams& p, double capacity) {
  const FeasibilitySummary fs = feasibility(p);
  const double tol = 1e-12 * workload_scale(capacity);
  if (fs.w_min > capacity + tol) throw InfeasibleError(fs.w_min, capacity);
  if (std::abs(fs.w_min - capacity) <= tol) {
    return make_solution(p, fs.a_min, Regime::CapacityBinding);
  }

  const ThresholdSolution free_opt = solve_uncapacitated(p);
  if (free_opt.workloads.total <= capacity) return free_opt;

  auto excess = [&](double a) { return workloads(p, a).total - capacity; };
  const double lo = std::min(fs.a_min, free_opt.a_star);
  const double hi = std::max(fs.a_min, free_opt.a_star);
  const auto root = numeric::bisect(excess, lo, hi, 0.0, tol);

  ThresholdSolution s = make_solution(p, root.x, Regime::CapacityBinding);
  s.gamma_shadow = -cost_rate_deriv(p, root.x) / workload_total_deriv(p, root.x);
  return s;
}

GammaEquivalenceReport verify_gamma_equivalence(const PatientParams& p, double capacity,
                                                double tolerance) {
  const FeasibilitySummary fs = feasibility(p);
  if (fs.w_min > capacity) throw InfeasibleError(fs.w_min, capacity);
  if (fs.w_min >= capacity) {
    throw ValidationError("feasible set is a single point; surcharge equivalence is undefined");
  }
  const ThresholdSolution capped = solve_capacitated(p, capacity);
  const ThresholdSolution surcharged =
      solve_uncapacitated(with_cost_surcharge(p, capped.gamma_shadow));

  GammaEquivalenceReport r;
  r.capacity = capacity;
  r.gamma_shadow = capped.gamma_shadow;
  r.a_capacitated = capped.a_star;
  r.a_surcharged = surcharged.a_star;
  r.gamma_coefficient = derive_coeffs(p).gamma;
  r.gamma_coefficient_surcharged =
      r.gamma_coefficient + capped.gamma_shadow * (1.0 / p.theta_H - 1.0 / p.theta_R);
  r.difference = std::abs(r.a_surcharged - r.a_capacitated);
  r.equivalent = r.difference <= tolerance;
  return r;
}

ThresholdSolution solve_quadratic(const PatientParams& p, std::optional<double> capacity) {
  constexpr std::size_t kGridCells = 10000;
  constexpr double kGoldenTolerance = 1e-8;
  const double A = max_threshold(p);

  auto objective = [&](double a) { return cost_rate_quadratic(p, a).value; };

  auto finish = [&](double a, Regime regime) {
    ThresholdSolution s = make_solution(p, a, regime);
    const QuadraticCost q = cost_rate_quadratic(p, a);
    s.cost = q.value;
    s.remote_moment_negative = q.remote_moment_negative;
    return s;
  };

  auto minimise_on = [&](double lo, double hi) {
    if (hi <= lo) return lo;
    const auto grid = numeric::linspace(lo, hi, kGridCells + 1);
    std::size_t best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double v = objective(grid[i]);
      if (v < best_val) {
        best_val = v;
        best = i;
      }
    }
    const double left = grid[best == 0 ? 0 : best - 1];
    const double right = grid[std::min(best + 1, grid.size() - 1)];
    const double refined = numeric::golden_section_minimize(objective, left, right, kGoldenTolerance);
    return objective(refined) <= best_val ? refined : grid[best];
  };

  auto regime_for = [&](double a) {
    const double eps = 1e-9 * std::max(1.0, A);
    if (a <= eps) return Regime::ImmediateOnsite;
    if (a >= A - eps) return Regime::MaxAllowable;
    return Regime::Interior;
  };

  if (A <= 0.0) {
    if (capacity) {
      const double w = workloads(p, 0.0).total;
      if (w > *capacity) throw InfeasibleError(w, *capacity);
    }
    return finish(0.0, Regime::ImmediateOnsite);
  }

  const double a_free = minimise_on(0.0, A);
  if (!capacity || workloads(p, a_free).total <= *capacity) {
    return finish(a_free, regime_for(a_free));
  }

  const FeasibilitySummary fs = feasibility(p);
  if (fs.w_min > *capacity) throw InfeasibleError(fs.w_min, *capacity);
  const auto [lo, hi] = feasible_interval(p, fs, *capacity);
  const double a = minimise_on(lo, hi);
  ThresholdSolution s = finish(a, Regime::CapacityBinding);
  const double h = 1e-6 * std::max(1.0, a);
  const double a_lo = std::max(0.0, a - h);
  const double a_hi = std::min(A, a + h);
  const double dV = (objective(a_hi) - objective(a_lo)) / (a_hi - a_lo);
  s.gamma_shadow = std::max(0.0, -dV / workload_total_deriv(p, a));
  return s;
}

}  // namespace hybridcare
