#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"
#include "hybridcare/errors.hpp"
#include "hybridcare/multitype.hpp"
#include "hybridcare/numeric.hpp"
#include "test_support.hpp"

using namespace hybridcare;
using namespace testing_support;

namespace {

void check_between(const MultiSolution& s) {
  for (std::size_t k = 0; k < s.a_star.size(); ++k) {
    const double lo = std::min(s.a_min[k], s.a_inf[k]);
    const double hi = std::max(s.a_min[k], s.a_inf[k]);
    CHECK(s.a_star[k] >= lo - 1e-9 * std::max(1.0, hi));
    CHECK(s.a_star[k] <= hi + 1e-9 * std::max(1.0, hi));
  }
}

}  // namespace

TEST_SUITE("multitype") {
  TEST_CASE("validation") {
    CHECK_THROWS_AS(validate(MultiInstance{{}, 1.0}), ValidationError);
    CHECK_THROWS_AS(validate(MultiInstance{{increasing_params()}, 0.0}), ValidationError);
    CHECK_THROWS_AS(validate(MultiInstance{{increasing_params()}, std::nan("")}), ValidationError);
    CHECK_NOTHROW(validate(MultiInstance{{increasing_params()}, std::numeric_limits<double>::infinity()}));
  }

  TEST_CASE("single type reduces to the capacitated solver") {
    const PatientParams p = increasing_params();
    const MultiFeasibility mf = multi_feasibility(MultiInstance{{p}, 3.0});
    CHECK(mf.w_min_total == feasibility(p).w_min);
    CHECK(mf.feasible);
    for (double C : {2.45, 2.8, 3.3, 3.9, 5.0}) {
      const MultiSolution m = solve_multitype(MultiInstance{{p}, C});
      const ThresholdSolution s = solve_capacitated(p, C);
      CHECK(std::abs(m.a_star[0] - s.a_star) < 1e-7);
      CHECK(rel_err(m.total_cost, s.cost) < 1e-6);
      if (s.gamma_shadow > 0.0) CHECK(rel_err(m.gamma_shadow, s.gamma_shadow) < 1e-5);
    }
  }

  TEST_CASE("distant type: thresholds cross as capacity shrinks") {
    const std::vector<PatientParams> types = crossing_types();
    // both workloads dip before rising, with minimisers well below the thresholds in play
    for (const PatientParams& p : types) {
      CHECK(classify_workload(p).shape == WorkloadShape::Unimodal);
      CHECK(feasibility(p).a_min < 3.0);
    }
    const MultiSolution ample = solve_multitype(MultiInstance{types, 20.0});
    CHECK_FALSE(ample.constraint_active);
    CHECK(ample.gamma_shadow == 0.0);
    CHECK(ample.a_star[0] == doctest::Approx(solve_uncapacitated(types[0]).a_star));
    CHECK(ample.a_star[1] == doctest::Approx(solve_uncapacitated(types[1]).a_star));
    CHECK(ample.a_star[0] < ample.a_star[1]);

    const auto gap = [&](double C) {
      const MultiSolution s = solve_multitype(MultiInstance{types, C});
      return s.a_star[0] - s.a_star[1];
    };
    CHECK(gap(7.5) > 0.0);
    const auto root = numeric::bisect(gap, 7.5, 9.5, 1e-6);
    REQUIRE(root.converged);
    CHECK(std::abs(root.x - 8.8) <= 0.5);

    double prev1 = INFINITY, prev2 = INFINITY;
    for (double C = 10.0; C >= 7.0; C -= 0.25) {
      const MultiSolution s = solve_multitype(MultiInstance{types, C});
      CHECK(s.a_star[0] <= prev1 + 1e-9);
      CHECK(s.a_star[1] <= prev2 + 1e-9);
      prev1 = s.a_star[0];
      prev2 = s.a_star[1];
    }
  }

  TEST_CASE("opposite workload shapes: thresholds move apart") {
    const std::vector<PatientParams> types = opposite_types();
    const MultiFeasibility mf = multi_feasibility(MultiInstance{types, 30.0});
    CHECK(mf.per_type[0].workload_case.shape == WorkloadShape::Increasing);
    CHECK(mf.per_type[0].a_min == 0.0);
    CHECK(mf.per_type[1].workload_case.shape == WorkloadShape::Decreasing);
    CHECK(mf.per_type[1].a_min == doctest::Approx(max_threshold(types[1])));

    const MultiSolution loose = solve_multitype(MultiInstance{types, 24.5});
    const MultiSolution tight = solve_multitype(MultiInstance{types, 21.5});
    CHECK(tight.a_star[0] < loose.a_star[0]);
    CHECK(tight.a_star[1] > loose.a_star[1]);
    CHECK_FALSE(multi_feasibility(MultiInstance{types, 20.0}).feasible);
    CHECK_THROWS_AS(solve_multitype(MultiInstance{types, 20.0}), InfeasibleError);
  }

  TEST_CASE("kkt report") {
    const std::vector<PatientParams> types = crossing_types();
    for (double C : {7.0, 7.5, 8.0, 8.5, 20.0}) {
      const MultiInstance inst{types, C};
      const MultiSolution s = solve_multitype(inst);
      check_between(s);
      const KktReport r = kkt_check(inst, s);
      CHECK(r.passed);
      if (C < 8.9) {
        CHECK(s.constraint_active);
        CHECK(std::abs(r.capacity_residual) <= 1e-7 * C);
      } else {
        CHECK_FALSE(s.constraint_active);
      }
    }

    const MultiInstance inst{types, 8.0};
    MultiSolution s = solve_multitype(inst);
    REQUIRE(s.interior_set.size() == 1);
    s.a_star[s.interior_set[0]] += 0.05;
    const KktReport bad = kkt_check(inst, s);
    CHECK_FALSE(bad.passed);
    CHECK_FALSE(bad.stationary);
    REQUIRE(bad.stationarity_residuals.size() == 1);
    CHECK(bad.stationarity_residuals[0] > 1e-6 * s.gamma_shadow);
  }

  TEST_CASE("brute-force oracle") {
    const PatientParams p = increasing_params();
    const MultiSolution grid = brute_force_multitype(MultiInstance{{p}, 3.0}, 10000);
    const ThresholdSolution exact = solve_capacitated(p, 3.0);
    const double cell = std::abs(exact.a_star - feasibility(p).a_min) / 9999.0 +
                        std::abs(solve_uncapacitated(p).a_star - feasibility(p).a_min) / 9999.0;
    CHECK(std::abs(grid.a_star[0] - exact.a_star) <= cell);

    const std::vector<PatientParams> types = crossing_types();
    const MultiInstance inst{types, 9.0};
    const MultiSolution fine = solve_multitype(inst);
    const MultiSolution coarse = brute_force_multitype(inst, 400);
    CHECK(coarse.method == "grid");
    CHECK(std::abs(fine.total_cost - coarse.total_cost) <= 1e-3 * std::abs(fine.total_cost));

    CHECK_THROWS_AS(brute_force_multitype(MultiInstance{types, 5.0}, 50), InfeasibleError);
    const MultiInstance four{{p, p, p, p}, 20.0};
    CHECK_THROWS_AS(brute_force_multitype(four, 10), UnsupportedError);
  }

  TEST_CASE("solution is never beaten by the grid") {
    std::mt19937_64 rng(31);
    int tested = 0;
    while (tested < 20) {
      const MultiInstance inst = random_binding_pair(rng);
      const MultiSolution s = solve_multitype(inst);
      check_between(s);
      CHECK(kkt_check(inst, s).passed);
      CHECK(s.total_workload.total <= inst.C * (1.0 + 1e-8));
      const MultiSolution g = brute_force_multitype(inst, 200);
      CHECK(s.total_cost <= g.total_cost + g.cell_cost_slack);
      ++tested;
    }
  }

  TEST_CASE("total cost is nonincreasing in capacity") {
    const std::vector<PatientParams> types = opposite_types();
    double prev = INFINITY;
    for (double C = 21.0; C <= 27.0; C += 0.25) {
      const MultiSolution s = solve_multitype(MultiInstance{types, C});
      CHECK(s.total_cost <= prev * (1.0 + 1e-12));
      prev = s.total_cost;
    }
  }

  TEST_CASE("three types at the minimal workload") {
    std::vector<PatientParams> types = crossing_types();
    types.push_back(increasing_params());
    const double w_min = multi_feasibility(MultiInstance{types, 1.0}).w_min_total;
    const MultiSolution s = solve_multitype(MultiInstance{types, w_min});
    CHECK(s.method == "single_point");
    for (std::size_t k = 0; k < 3; ++k) CHECK(s.a_star[k] == s.a_min[k]);
  }
}
