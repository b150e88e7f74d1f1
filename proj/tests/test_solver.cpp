#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "hybridcare/errors.hpp"
#include "hybridcare/lambert_w.hpp"
#include "hybridcare/numeric.hpp"
#include "hybridcare/solver.hpp"
#include "test_support.hpp"

using namespace hybridcare;
using namespace testing_support;

namespace {

double grid_min_cost(const PatientParams& p, int n) {
  const double A = max_threshold(p);
  double best = INFINITY;
  for (int i = 0; i <= n; ++i) best = std::min(best, cost_rate(p, A * i / n));
  return best;
}

}  // namespace

TEST_SUITE("solver") {
  TEST_CASE("numeric helpers") {
    const auto r = numeric::bisect([](double x) { return x * x - 2.0; }, 0.0, 2.0, 1e-14);
    CHECK(r.converged);
    CHECK(r.x == doctest::Approx(std::sqrt(2.0)).epsilon(1e-13));
    const auto none = numeric::bisect([](double x) { return x * x + 1.0; }, -1.0, 2.0, 1e-12);
    CHECK_FALSE(none.converged);
    const double m = numeric::golden_section_minimize([](double x) { return (x - 0.3) * (x - 0.3); }, -1.0, 2.0, 1e-10);
    CHECK(m == doctest::Approx(0.3).epsilon(1e-8));
    const auto g = numeric::linspace(0.0, 1.0, 11);
    CHECK(g.size() == 11);
    CHECK(g.back() == 1.0);
  }

  TEST_CASE("workload classification examples") {
    CHECK(classify_workload(increasing_params()).shape == WorkloadShape::Increasing);
    CHECK(classify_workload(decreasing_params()).shape == WorkloadShape::Decreasing);
    PatientParams p = increasing_params();
    p.theta_H = 0.3;
    CHECK(classify_workload(p).shape == WorkloadShape::Unimodal);
  }

  TEST_CASE("feasibility") {
    const PatientParams c3 = increasing_params();
    const FeasibilitySummary f3 = feasibility(c3);
    CHECK(f3.a_min == 0.0);
    CHECK(f3.w_min == doctest::Approx(c3.lambda * (c3.x + c3.T * c3.theta_T) / c3.theta_H));
    CHECK(std::abs(f3.w_min - 2.5) <= 0.1 + 1e-12);
    CHECK(std::abs(feasibility(increasing_params(8.0)).w_min - 3.3) <= 0.1);
    CHECK(f3.feasible_for(2.5));
    CHECK_FALSE(f3.feasible_for(2.3));

    const FeasibilitySummary f1 = feasibility(decreasing_params());
    CHECK(f1.a_min == doctest::Approx(max_threshold(decreasing_params())));

    PatientParams c2 = increasing_params();
    c2.theta_H = 0.3;
    const FeasibilitySummary f2 = feasibility(c2);
    CHECK(f2.a_min > 0.0);
    CHECK(f2.a_min == doctest::Approx(std::min(*f2.workload_case.a0, max_threshold(c2))));
  }

  TEST_CASE("uncapacitated regimes") {
    PatientParams pos = increasing_params();
    pos.h_H = 10.0;
    const ThresholdSolution s1 = solve_uncapacitated(pos);
    CHECK(s1.regime == Regime::MaxAllowable);
    CHECK(s1.a_star == doctest::Approx(max_threshold(pos)));

    const PatientParams near = travel_params(2.0, 0.5);
    const ThresholdSolution s2 = solve_uncapacitated(near);
    CHECK(s2.regime == Regime::ImmediateOnsite);
    CHECK(s2.a_star == 0.0);
    CHECK(cost_rate_deriv(near, 0.0) >= 0.0);

    PatientParams blocked = increasing_params();
    blocked.S_bar = 1.1;  // A_bar = 0
    const ThresholdSolution s3 = solve_uncapacitated(blocked);
    CHECK(s3.regime == Regime::ImmediateOnsite);
    CHECK(s3.a_star == 0.0);

    const ThresholdSolution s4 = solve_uncapacitated(travel_params(2.0, 10.0));
    CHECK(s4.regime == Regime::Interior);
    CHECK(s4.gamma_shadow == 0.0);
    CHECK(foc_residual(travel_params(2.0, 10.0), s4.a_star) < 1e-10);
  }

  TEST_CASE("dominance tie resolves to immediate transfer") {
    // choose T so that beta equals gamma (1 - e^{-rho x}) / rho
    PatientParams p = travel_params(2.0, 0.0);
    const DerivedCoeffs c = derive_coeffs(p);
    p.T = (c.gamma * (1.0 - std::exp(-c.rho * p.x)) / c.rho - c.gamma * p.x) / c.eta;
    const ThresholdSolution s = solve_uncapacitated(p);
    CHECK(s.a_star == 0.0);
    CHECK(s.regime == Regime::ImmediateOnsite);
  }

  TEST_CASE("uncapacitated optimum beats a grid") {
    std::mt19937_64 rng(21);
    int interior = 0;
    for (int i = 0; i < 60; ++i) {
      const PatientParams p = random_params(rng);
      const ThresholdSolution s = solve_uncapacitated(p);
      CHECK(s.a_star >= 0.0);
      CHECK(s.a_star <= max_threshold(p));
      if (s.regime == Regime::Interior) {
        ++interior;
        CHECK(foc_residual(p, s.a_star) < 1e-10);
      }
      const double v = cost_rate(p, s.a_star);
      CHECK(v <= grid_min_cost(p, 100000) + 1e-8 * std::abs(v));
    }
    CHECK(interior > 5);
  }

  TEST_CASE("travel profile") {
    std::vector<double> grid;
    for (double T = 0.0; T <= 140.0; T += 0.25) grid.push_back(T);
    const TravelProfile prof = travel_profile(travel_params(2.0), grid);
    REQUIRE(prof.T_LB.has_value());
    REQUIRE(prof.T_hat.has_value());
    // T_LB = -(gamma/eta)(x - (1 - e^{-rho x})/rho) by hand
    const double t_lb = (32.0 / 7.3) * (2.0 - (1.0 - std::exp(-0.24)) / 0.12);
    CHECK(*prof.T_LB == doctest::Approx(t_lb).epsilon(1e-12));
    CHECK(*prof.T_LB == doctest::Approx(0.973).epsilon(1e-3));
    CHECK(prof.T_UB == doctest::Approx(130.0));
    CHECK(*prof.T_LB < *prof.T_hat);
    CHECK(*prof.T_hat < prof.T_UB);

    int changes = 0;
    double prev_diff = 0.0;
    for (std::size_t i = 0; i < prof.samples.size(); ++i) {
      const TravelSample& s = prof.samples[i];
      if (s.T <= *prof.T_LB || s.T >= prof.T_UB) CHECK(s.a_star == 0.0);
      if (i > 0) {
        const double diff = s.a_star - prof.samples[i - 1].a_star;
        if (diff != 0.0) {
          if (prev_diff != 0.0 && (diff > 0.0) != (prev_diff > 0.0)) {
            ++changes;
            CHECK(std::abs(s.T - *prof.T_hat) <= 0.5);
          }
          prev_diff = diff;
        }
      }
    }
    CHECK(changes == 1);

    for (double x : {4.0, 6.0}) {
      const TravelProfile other = travel_profile(travel_params(x), std::vector<double>{});
      CHECK(std::abs(*other.T_hat - *prof.T_hat) < 1e-8);
    }
  }

  TEST_CASE("travel sensitivity matches finite differences") {
    const PatientParams base = travel_params(2.0);
    const TravelProfile prof = travel_profile(base, std::vector<double>{2.0, 10.0, 20.0, 40.0, 80.0});
    for (const TravelSample& s : prof.samples) {
      const double fd = central_difference(
          [&](double T) {
            PatientParams q = base;
            q.T = T;
            return solve_uncapacitated(q).a_star;
          },
          s.T);
      CHECK(std::abs(s.da_dT - fd) < 1e-5);
    }
  }

  TEST_CASE("travel profile without interior regime") {
    PatientParams pos = increasing_params();
    pos.h_H = 10.0;
    const TravelProfile prof = travel_profile(pos, std::vector<double>{1.0, 200.0});
    CHECK_FALSE(prof.T_LB.has_value());
    CHECK_FALSE(prof.T_hat.has_value());
    CHECK(prof.samples[0].a_star > 0.0);
    CHECK(prof.samples[1].a_star == 0.0);
    CHECK_THROWS_AS(travel_profile(pos, std::vector<double>{2.0, 1.0}), ValidationError);

    PatientParams tight = travel_params(2.0);
    tight.S_bar = 2.05;  // T_UB = 0.5 < T_LB
    CHECK(travel_profile(tight, std::vector<double>{}).empty_interval);
  }

  TEST_CASE("capacitated solutions") {
    const PatientParams p = increasing_params();
    const ThresholdSolution free_opt = solve_uncapacitated(p);
    CHECK(std::abs(free_opt.a_star - 4.0) <= 0.2);
    const ThresholdSolution ample = solve_capacitated(p, 4.5);
    CHECK(ample.a_star == doctest::Approx(free_opt.a_star));
    CHECK(ample.gamma_shadow == 0.0);

    CHECK_THROWS_AS(solve_capacitated(p, 2.0), InfeasibleError);
    try {
      solve_capacitated(p, 2.0);
    } catch (const InfeasibleError& e) {
      CHECK(e.w_min() == doctest::Approx(2.4));
    }

    const FeasibilitySummary fs = feasibility(p);
    const ThresholdSolution edge = solve_capacitated(p, fs.w_min);
    CHECK(edge.a_star == fs.a_min);

    double prev = INFINITY;
    for (double C = 3.8; C > 2.45; C -= 0.1) {
      const ThresholdSolution s = solve_capacitated(p, C);
      CHECK(s.regime == Regime::CapacityBinding);
      CHECK(std::abs(s.workloads.total - C) < 1e-8 * C);
      CHECK(s.gamma_shadow > 0.0);
      CHECK(s.a_star < prev);
      prev = s.a_star;
    }
  }

  TEST_CASE("gamma equivalence") {
    std::mt19937_64 rng(22);
    int binding = 0;
    for (int i = 0; i < 200 && binding < 50; ++i) {
      const PatientParams p = random_params(rng);
      const FeasibilitySummary fs = feasibility(p);
      const ThresholdSolution u = solve_uncapacitated(p);
      if (u.workloads.total <= fs.w_min * (1.0 + 1e-6)) continue;
      const double C = fs.w_min + uniform(rng, 0.1, 0.9) * (u.workloads.total - fs.w_min);
      const GammaEquivalenceReport r = verify_gamma_equivalence(p, C);
      CHECK(r.equivalent);
      CHECK(r.gamma_shadow > 0.0);
      CHECK(rel_err(r.gamma_coefficient_surcharged,
                    derive_coeffs(with_cost_surcharge(p, r.gamma_shadow)).gamma) < 1e-10);
      ++binding;
    }
    CHECK(binding == 50);
    const PatientParams p = increasing_params();
    CHECK(verify_gamma_equivalence(p, 10.0).difference == 0.0);
  }

  TEST_CASE("surcharge moves the threshold in the direction of the drift gap") {
    // theta_H > theta_R: surcharge lowers the threshold
    PatientParams fast = travel_params(2.0, 10.0);
    fast.theta_H = 0.1;
    fast.theta_R = 0.05;
    fast.h_H = 7.0;
    // theta_H < theta_R: surcharge raises it
    PatientParams slow = travel_params(2.0, 10.0);
    slow.h_H = 1.0;
    double prev_fast = INFINITY, prev_slow = -INFINITY;
    for (double g : {0.0, 1.0, 2.0, 3.0}) {
      const double af = solve_uncapacitated(with_cost_surcharge(fast, g)).a_star;
      const double as = solve_uncapacitated(with_cost_surcharge(slow, g)).a_star;
      CHECK(af <= prev_fast);
      CHECK(as >= prev_slow);
      prev_fast = af;
      prev_slow = as;
    }
  }

  TEST_CASE("quadratic solver agrees with a grid scan") {
    for (double T : {0.0, 5.0, 20.0, 60.0}) {
      PatientParams p = travel_params(2.0, T);
      p.sigma_H = 2.0;
      const ThresholdSolution s = solve_quadratic(p);
      const double A = max_threshold(p);
      double best_a = 0.0, best = INFINITY;
      for (int i = 0; i <= 10000; ++i) {
        const double a = A * i / 10000.0;
        const double v = cost_rate_quadratic(p, a).value;
        if (v < best) {
          best = v;
          best_a = a;
        }
      }
      CHECK(std::abs(s.a_star - best_a) <= A / 10000.0 + 1e-12);
      CHECK(s.cost <= best + 1e-12 * std::abs(best));
    }
    const PatientParams p = increasing_params();
    const ThresholdSolution capped = solve_quadratic(p, 3.0);
    CHECK(capped.workloads.total <= 3.0 + 1e-9);
    CHECK_THROWS_AS(solve_quadratic(p, 2.0), InfeasibleError);
  }
}
