#include "hybridcare/multitype.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hybridcare/errors.hpp"
#include "hybridcare/numeric.hpp"

namespace hybridcare {

namespace {

constexpr double kCapacityRelTol = 1e-8;
constexpr double kStationarityRelTol = 1e-6;
constexpr double kGammaCeiling = 1152921504606846976.0;  // 2^60
constexpr std::size_t kFallbackGridK2 = 400;
constexpr std::size_t kFallbackGridK3 = 120;

struct TypeBounds {
  double lo = 0.0;
  double hi = 0.0;
};

double endpoint_tol(double scale) { return 1e-9 * std::max(1.0, std::abs(scale)); }

void fill_outcomes(const MultiInstance& inst, MultiSolution& sol) {
  const std::size_t K = inst.types.size();
  sol.workloads.assign(K, Workloads{});
  sol.costs.assign(K, 0.0);
  sol.total_workload = Workloads{};
  sol.total_cost = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    sol.workloads[k] = workloads(inst.types[k], sol.a_star[k]);
    sol.costs[k] = cost_rate(inst.types[k], sol.a_star[k]);
    sol.total_workload.onsite += sol.workloads[k].onsite;
    sol.total_workload.remote += sol.workloads[k].remote;
    sol.total_workload.total += sol.workloads[k].total;
    sol.total_cost += sol.costs[k];
  }
}

std::vector<std::size_t> interior_indices(const std::vector<double>& a,
                                          const std::vector<double>& a_min,
                                          const std::vector<double>& a_inf) {
  std::vector<std::size_t> E;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double tol = endpoint_tol(std::max(a_min[k], a_inf[k]));
    if (std::abs(a[k] - a_min[k]) > tol && std::abs(a[k] - a_inf[k]) > tol) E.push_back(k);
  }
  return E;
}

struct Skeleton {
  MultiFeasibility feas;
  std::vector<double> a_min;
  std::vector<double> a_inf;
  std::vector<TypeBounds> bounds;
  double w_inf_total = 0.0;
};

Skeleton build_skeleton(const MultiInstance& inst) {
  Skeleton s;
  s.feas = multi_feasibility(inst);
  if (!s.feas.feasible) throw InfeasibleError(s.feas.w_min_total, inst.C);
  for (std::size_t k = 0; k < inst.types.size(); ++k) {
    const double amin = s.feas.per_type[k].a_min;
    const ThresholdSolution u = solve_uncapacitated(inst.types[k]);
    s.a_min.push_back(amin);
    s.a_inf.push_back(u.a_star);
    s.bounds.push_back({std::min(amin, u.a_star), std::max(amin, u.a_star)});
    s.w_inf_total += u.workloads.total;
  }
  return s;
}

MultiSolution base_solution(const Skeleton& s) {
  MultiSolution sol;
  sol.a_min = s.a_min;
  sol.a_inf = s.a_inf;
  return sol;
}

}  // namespace

void validate(const MultiInstance& inst) {
  if (inst.types.empty()) throw ValidationError("instance needs at least one patient type");
  if (std::isnan(inst.C) || !(inst.C > 0.0)) throw ValidationError("capacity C must be > 0");
  for (const auto& p : inst.types) validate(p);
}

MultiFeasibility multi_feasibility(const MultiInstance& inst) {
  validate(inst);
  MultiFeasibility f;
  for (const auto& p : inst.types) {
    f.per_type.push_back(feasibility(p));
    f.w_min_total += f.per_type.back().w_min;
  }
  f.feasible = f.w_min_total <= inst.C;
  return f;
}

MultiSolution solve_multitype(const MultiInstance& inst) {
  const Skeleton sk = build_skeleton(inst);
  const std::size_t K = inst.types.size();
  MultiSolution sol = base_solution(sk);
  const double C = inst.C;

  if (sk.w_inf_total <= C) {
    sol.a_star = sk.a_inf;
    sol.method = "unconstrained";
    fill_outcomes(inst, sol);
    return sol;
  }

  sol.constraint_active = true;
  if (sk.feas.w_min_total >= C * (1.0 - 1e-12)) {
    sol.a_star = sk.a_min;
    sol.method = "single_point";
    fill_outcomes(inst, sol);
    return sol;
  }

  auto thresholds_at = [&](double gamma) {
    std::vector<double> a(K);
    for (std::size_t k = 0; k < K; ++k) {
      const double free_opt = solve_uncapacitated(with_cost_surcharge(inst.types[k], gamma)).a_star;
      a[k] = std::clamp(free_opt, sk.bounds[k].lo, sk.bounds[k].hi);
    }
    return a;
  };
  auto excess_at = [&](const std::vector<double>& a) {
    double w = 0.0;
    for (std::size_t k = 0; k < K; ++k) w += workloads(inst.types[k], a[k]).total;
    return w - C;
  };

  double g_lo = 0.0;
  double g_hi = 1.0;
  while (excess_at(thresholds_at(g_hi)) > 0.0 && g_hi < kGammaCeiling) {
    g_lo = g_hi;
    g_hi *= 2.0;
  }

  const double tol = kCapacityRelTol * C;
  std::vector<double> best_a = thresholds_at(g_hi);
  double best_gamma = g_hi;
  double best_excess = excess_at(best_a);
  bool converged = best_excess <= 0.0 && std::abs(best_excess) <= tol;
  if (best_excess <= 0.0) {
    for (int it = 0; it < numeric::kMaxBisectionIterations && !converged; ++it) {
      const double mid = 0.5 * (g_lo + g_hi);
      if (mid == g_lo || mid == g_hi) break;
      const std::vector<double> a = thresholds_at(mid);
      const double e = excess_at(a);
      if (std::abs(e) < std::abs(best_excess)) {
        best_a = a;
        best_gamma = mid;
        best_excess = e;
      }
      if (std::abs(e) <= tol) {
        converged = true;
        break;
      }
      (e > 0.0 ? g_lo : g_hi) = mid;
    }
  }

  if (!converged) {
    if (K <= 3) {
      MultiSolution grid = brute_force_multitype(inst, K == 3 ? kFallbackGridK3 : kFallbackGridK2);
      grid.degraded_precision = true;
      return grid;
    }
    sol.degraded_precision = true;
  }

  sol.a_star = best_a;
  sol.gamma_shadow = best_gamma;
  sol.method = "gamma_bisection";
  sol.interior_set = interior_indices(sol.a_star, sk.a_min, sk.a_inf);
  fill_outcomes(inst, sol);
  return sol;
}

KktReport kkt_check(const MultiInstance& inst, const MultiSolution& sol) {
  validate(inst);
  const std::size_t K = inst.types.size();
  if (sol.a_star.size() != K) throw ValidationError("solution size does not match instance");
  KktReport r;

  std::vector<double> a_min(K), a_inf(K);
  double w_inf_total = 0.0;
  double w_total = 0.0;
  r.between = true;
  for (std::size_t k = 0; k < K; ++k) {
    const PatientParams& p = inst.types[k];
    a_min[k] = feasibility(p).a_min;
    const ThresholdSolution u = solve_uncapacitated(p);
    a_inf[k] = u.a_star;
    w_inf_total += u.workloads.total;
    w_total += workloads(p, sol.a_star[k]).total;
    const double lo = std::min(a_min[k], a_inf[k]);
    const double hi = std::max(a_min[k], a_inf[k]);
    const double violation = std::max({0.0, lo - sol.a_star[k], sol.a_star[k] - hi});
    r.max_between_violation = std::max(r.max_between_violation, violation);
    if (violation > endpoint_tol(hi)) r.between = false;
  }

  r.capacity_residual = w_total - inst.C;
  const double tol = 10.0 * kCapacityRelTol * inst.C;
  if (w_inf_total <= inst.C) {
    r.active = !sol.constraint_active && sol.gamma_shadow == 0.0 && r.capacity_residual <= tol;
  } else {
    r.active = sol.constraint_active && std::abs(r.capacity_residual) <= tol;
  }

  r.interior_set = interior_indices(sol.a_star, a_min, a_inf);
  r.stationary = true;
  for (std::size_t k : r.interior_set) {
    const PatientParams& p = inst.types[k];
    const double ratio = cost_rate_deriv(p, sol.a_star[k]) / workload_total_deriv(p, sol.a_star[k]);
    const double res = std::abs(sol.gamma_shadow + ratio);
    r.stationarity_residuals.push_back(res);
    if (!(res < kStationarityRelTol * sol.gamma_shadow)) r.stationary = false;
  }
  r.passed = r.between && r.active && r.stationary;
  return r;
}

MultiSolution brute_force_multitype(const MultiInstance& inst, std::size_t grid_n) {
  if (inst.types.size() > 3) throw UnsupportedError("grid oracle supports at most 3 types");
  if (grid_n < 2) throw ValidationError("grid oracle needs at least 2 points per axis");
  const Skeleton sk = build_skeleton(inst);
  const std::size_t K = inst.types.size();

  std::vector<std::vector<double>> grid(K), cost(K), load(K);
  double slack = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    grid[k] = numeric::linspace(sk.bounds[k].lo, sk.bounds[k].hi, grid_n);
    double worst_step = 0.0;
    for (std::size_t i = 0; i < grid_n; ++i) {
      cost[k].push_back(cost_rate(inst.types[k], grid[k][i]));
      load[k].push_back(workloads(inst.types[k], grid[k][i]).total);
      if (i > 0) worst_step = std::max(worst_step, std::abs(cost[k][i] - cost[k][i - 1]));
    }
    slack += worst_step;
  }

  std::vector<std::size_t> idx(K, 0), best_idx;
  double best_cost = std::numeric_limits<double>::infinity();
  while (true) {
    double w = 0.0;
    double v = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      w += load[k][idx[k]];
      v += cost[k][idx[k]];
    }
    if (w <= inst.C && v < best_cost) {
      best_cost = v;
      best_idx = idx;
    }
    std::size_t k = 0;
    while (k < K && ++idx[k] == grid_n) idx[k++] = 0;
    if (k == K) break;
  }
  if (best_idx.empty()) throw InfeasibleError(sk.feas.w_min_total, inst.C);

  MultiSolution sol = base_solution(sk);
  for (std::size_t k = 0; k < K; ++k) sol.a_star.push_back(grid[k][best_idx[k]]);
  sol.constraint_active = sk.w_inf_total > inst.C;
  sol.method = "grid";
  sol.cell_cost_slack = slack;
  sol.interior_set = interior_indices(sol.a_star, sk.a_min, sk.a_inf);
  fill_outcomes(inst, sol);
  return sol;
}

}  // namespace hybridcare
