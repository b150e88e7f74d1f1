#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hybridcare/params.hpp"
#include "hybridcare/solver.hpp"

namespace hybridcare {

/// K patient types sharing one pool of total load capacity C.
struct MultiInstance {
  std::vector<PatientParams> types;
  double C = 0.0;  ///< may be +inf for an uncapacitated system
};

void validate(const MultiInstance& inst);

struct MultiFeasibility {
  std::vector<FeasibilitySummary> per_type;
  double w_min_total = 0.0;  ///< sum of per-type minimal workloads
  bool feasible = false;
};

MultiFeasibility multi_feasibility(const MultiInstance& inst);

struct MultiSolution {
  std::vector<double> a_star;
  double gamma_shadow = 0.0;
  std::vector<std::size_t> interior_set;  ///< types strictly between a_min and a_inf
  std::vector<Workloads> workloads;
  std::vector<double> costs;
  Workloads total_workload;
  double total_cost = 0.0;
  bool constraint_active = false;
  bool degraded_precision = false;
  std::string method;  ///< "unconstrained", "gamma_bisection", "single_point" or "grid"

  std::vector<double> a_min;  ///< per-type workload minimiser
  std::vector<double> a_inf;  ///< per-type unconstrained optimum
  double cell_cost_slack = 0.0;  ///< grid solutions only: cost of one cell step per axis
};

/// Shared-multiplier solution. Throws InfeasibleError when sum_k W_T^k(a_min^k) > C.
MultiSolution solve_multitype(const MultiInstance& inst);

struct KktReport {
  bool between = false;
  bool active = false;
  bool stationary = false;
  bool passed = false;
  double max_between_violation = 0.0;
  double capacity_residual = 0.0;  ///< sum_k W_T^k - C
  std::vector<std::size_t> interior_set;
  std::vector<double> stationarity_residuals;  ///< |Gamma + V'_k / W_T^k'| for k in the interior set
};

KktReport kkt_check(const MultiInstance& inst, const MultiSolution& sol);

/// Exhaustive search over grid_n points per type on [min(a_min, a_inf), max(a_min, a_inf)].
/// K <= 3 only.
MultiSolution brute_force_multitype(const MultiInstance& inst, std::size_t grid_n);

}  // namespace hybridcare
