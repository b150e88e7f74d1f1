#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "hybridcare/analytics.hpp"
#include "hybridcare/errors.hpp"
#include "hybridcare/multitype.hpp"
#include "hybridcare/random.hpp"
#include "hybridcare/simulator.hpp"
#include "test_support.hpp"

using namespace hybridcare;
using namespace testing_support;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

PatientState onsite_patient(std::uint64_t id, std::size_t type, double score, double admitted) {
  PatientState ps;
  ps.id = id;
  ps.type = type;
  ps.location = Location::Onsite;
  ps.score = score;
  ps.admitted_at = admitted;
  return ps;
}

SimConfig crowded_ward() {
  SimConfig cfg;
  cfg.instance = MultiInstance{crossing_types(), 7.0};
  cfg.thresholds = solve_multitype(cfg.instance).a_star;
  cfg.horizon = 400.0;
  cfg.dt = 0.02;
  cfg.onsite_slots = 3;
  cfg.replications = 2;
  cfg.threads = 1;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST_SUITE("simulator") {
  TEST_CASE("random streams are reproducible and distinct") {
    RandomStream a(stream_key(1, {2, 3}));
    RandomStream b(stream_key(1, {2, 3}));
    RandomStream c(stream_key(1, {3, 2}));
    const double x = a.gaussian();
    CHECK(x == b.gaussian());
    CHECK(x != c.gaussian());
    CHECK(stream_key(1, {}) != stream_key(2, {}));
  }

  TEST_CASE("config validation") {
    SimConfig cfg = crowded_ward();
    CHECK_NOTHROW(validate(cfg));
    SimConfig bad = cfg;
    bad.thresholds.pop_back();
    CHECK_THROWS_AS(validate(bad), ValidationError);
    bad = cfg;
    bad.thresholds[0] = max_threshold(cfg.instance.types[0]) + 1.0;
    CHECK_THROWS_AS(validate(bad), ValidationError);
    bad = cfg;
    bad.horizon = 0.0;
    CHECK_THROWS_AS(validate(bad), ValidationError);
    bad = cfg;
    bad.warmup_fraction = 1.0;
    CHECK_THROWS_AS(validate(bad), ValidationError);
    bad = cfg;
    bad.onsite_slots = 0;
    CHECK_THROWS_AS(validate(bad), ValidationError);

    SimConfig def = cfg;
    def.onsite_slots.reset();
    double offered = 0.0;
    for (std::size_t k = 0; k < 2; ++k) offered += workloads(def.instance.types[k], def.thresholds[k]).onsite;
    CHECK(effective_onsite_slots(def) == std::max(1L, std::lround(offered)));
    def.unlimited_slots = true;
    CHECK(effective_onsite_slots(def) == 0);
  }

  TEST_CASE("deterministic steps without noise") {
    RandomStream rng(stream_key(9, {}));
    const StepOutcome o = step_path(2.0, 0.5, 0.0, 0.1, 0.0, 5.0, true, rng);
    CHECK(o.score == doctest::Approx(1.95).epsilon(1e-15));
    CHECK_FALSE(o.crossed_lower);
    CHECK_FALSE(o.crossed_upper);
    const StepOutcome down = step_path(0.01, 0.5, 0.0, 0.1, 0.0, 5.0, true, rng);
    CHECK(down.crossed_lower);
    const StepOutcome up = step_path(4.99, -0.5, 0.0, 0.1, 0.0, 5.0, false, rng);
    CHECK(up.crossed_upper);
    const ExitSample e = sample_exit(1.0, 0.5, 0.0, 0.0, kInf, 0.01, true, rng);
    CHECK_FALSE(e.hit_upper);
    CHECK(std::abs(e.time - 2.0) <= 0.01);
  }

  TEST_CASE("bridge correction catches crossings between grid points") {
    // coarse steps from just below the barrier: the endpoint rarely lands above,
    // but the path in between almost always touches it
    RandomStream plain(stream_key(4, {1}));
    RandomStream bridged(stream_key(4, {1}));
    int hits_plain = 0, hits_bridge = 0;
    for (int i = 0; i < 2000; ++i) {
      hits_plain += step_path(0.99, 0.0, 1.0, 1e-4, -kInf, 1.0, false, plain).crossed_upper;
      hits_bridge += step_path(0.99, 0.0, 1.0, 1e-4, -kInf, 1.0, true, bridged).crossed_upper;
    }
    CHECK(hits_bridge > hits_plain);
    // exact probability of touching within the step is 2 P(N > 1) = 0.3173
    CHECK(std::abs(hits_bridge / 2000.0 - 0.3173) < 4.0 * std::sqrt(0.3173 * 0.6827 / 2000.0));
  }

  TEST_CASE("two-barrier exits match the closed forms") {
    const double theta = 0.3, sigma = 1.0, x = 1.0, a = 1.5;
    const double rho = 2.0 * theta / (sigma * sigma);
    RandomStream rng(stream_key(11, {}));
    const int n = 20000;
    double hits = 0.0, sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const ExitSample e = sample_exit(x, theta, sigma, 0.0, x + a, 1e-2, true, rng);
      hits += e.hit_upper;
      sum += e.time;
      sum2 += e.time * e.time;
    }
    const double p = call_in_prob(rho, x, a);
    CHECK(std::abs(hits / n - p) < 4.0 * std::sqrt(p * (1.0 - p) / n));
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / n);
    CHECK(std::abs(mean - elos_remote(rho, theta, x, a)) < 4.0 * se);
  }

  TEST_CASE("swap index") {
    const PatientParams p = increasing_params();
    CHECK(swap_index(p, 0.0, 3.0) == doctest::Approx(p.h_T * p.T));
    double prev = -kInf;
    for (double s = 0.0; s <= 6.0; s += 0.05) {
      const double c = swap_index(p, s, 3.0);
      CHECK(c > prev);
      prev = c;
    }
    PatientParams q = p;
    q.T = 0.0;
    for (double s : {0.5, 1.0, 2.5}) {
      PatientParams at = q;
      at.x = s;
      CHECK(swap_index(q, s, 2.0) == doctest::Approx(cost_rate(at, 2.0) / at.lambda).epsilon(1e-12));
    }
  }

  TEST_CASE("swap selection") {
    const MultiInstance same{{increasing_params(), increasing_params()}, 10.0};
    const std::vector<double> a{3.0, 3.0};
    CHECK_FALSE(select_swap(SwapPolicy::BestScore, {}, same, a).has_value());

    const std::vector<PatientState> one{onsite_patient(7, 0, 2.0, 1.0)};
    CHECK(*select_swap(SwapPolicy::BestScore, one, same, a) == 7);
    CHECK(*select_swap(SwapPolicy::CostIndex, one, same, a) == 7);

    const std::vector<PatientState> two{onsite_patient(1, 0, 2.0, 1.0), onsite_patient(2, 1, 1.5, 2.0)};
    CHECK(*select_swap(SwapPolicy::BestScore, two, same, a) == 2);
    CHECK(*select_swap(SwapPolicy::CostIndex, two, same, a) == 2);

    const std::vector<PatientState> tied{onsite_patient(5, 0, 1.0, 3.0), onsite_patient(4, 0, 1.0, 3.0),
                                         onsite_patient(3, 0, 1.0, 4.0)};
    CHECK(*select_swap(SwapPolicy::BestScore, tied, same, a) == 4);
    CHECK(*select_swap(SwapPolicy::CostIndex, tied, same, a) == 4);

    // the lower score belongs to the distant type; its return trip makes it the costlier swap
    PatientParams near = increasing_params(0.2);
    PatientParams far = increasing_params(8.0);
    const MultiInstance mixed{{near, far}, 10.0};
    const std::vector<PatientState> pair{onsite_patient(1, 0, 1.1, 1.0), onsite_patient(2, 1, 1.0, 1.0)};
    const double c_near = swap_index(near, 1.1 + near.theta_T * near.T, 3.0);
    const double c_far = swap_index(far, 1.0 + far.theta_T * far.T, 3.0);
    REQUIRE(c_near < c_far);
    CHECK(*select_swap(SwapPolicy::BestScore, pair, mixed, a) == 2);
    CHECK(*select_swap(SwapPolicy::CostIndex, pair, mixed, a) == 1);
  }

  TEST_CASE("patients are conserved and swapped at most once") {
    const SimConfig cfg = crowded_ward();
    for (SwapPolicy policy : {SwapPolicy::BestScore, SwapPolicy::CostIndex}) {
      const ReplicationResult r = simulate_replication(cfg, policy, 0);
      long swaps = 0;
      for (const TypeCounts& c : r.per_type) {
        CHECK(c.admissions == c.discharges + c.in_system);
        CHECK(c.admissions > 0);
        swaps += c.swaps;
      }
      CHECK(swaps > 0);
      CHECK(r.max_swaps_per_patient <= 1);
      CHECK(r.min_score_seen >= 0.0);
      CHECK(r.onsite_slots == 3);
      CHECK(r.average_cost > 0.0);
    }
  }

  TEST_CASE("same seed gives identical event logs") {
    SimConfig cfg = crowded_ward();
    cfg.horizon = 100.0;
    cfg.record_events = true;
    const auto log = [&](SwapPolicy policy) {
      std::ostringstream os;
      write_event_log(os, simulate_replication(cfg, policy, 0).events);
      return os.str();
    };
    const std::string first = log(SwapPolicy::CostIndex);
    CHECK(first.rfind("time,patient,type,event,score,location\n", 0) == 0);
    CHECK(first.find("swap") != std::string::npos);
    CHECK(first == log(SwapPolicy::CostIndex));
    cfg.seed = 6;
    CHECK(first != log(SwapPolicy::CostIndex));
  }

  TEST_CASE("results do not depend on the thread count") {
    SimConfig cfg = crowded_ward();
    cfg.horizon = 150.0;
    cfg.replications = 3;
    cfg.threads = 1;
    const SimResult serial = simulate(cfg, SwapPolicy::CostIndex);
    cfg.threads = 3;
    const SimResult parallel = simulate(cfg, SwapPolicy::CostIndex);
    REQUIRE(serial.replications.size() == 3);
    for (int i = 0; i < 3; ++i) {
      CHECK(serial.replications[i].average_cost == parallel.replications[i].average_cost);
    }
    CHECK(serial.mean_cost == parallel.mean_cost);
  }

  TEST_CASE("comparing a policy with itself gives zero difference") {
    SimConfig cfg = crowded_ward();
    cfg.horizon = 150.0;
    cfg.replications = 3;
    const PolicyComparison c = compare_policies(cfg, SwapPolicy::CostIndex, SwapPolicy::CostIndex);
    for (double d : c.differences) CHECK(d == 0.0);
    CHECK(c.mean_difference == 0.0);
    CHECK(c.ci_low == 0.0);
    CHECK(c.ci_high == 0.0);
  }

  TEST_CASE("no arrivals, no cost") {
    SimConfig cfg = crowded_ward();
    for (PatientParams& p : cfg.instance.types) p.lambda = 0.0;
    cfg.horizon = 50.0;
    const SimResult r = simulate(cfg, SwapPolicy::BestScore);
    CHECK(r.mean_cost == 0.0);
    for (const ReplicationResult& rep : r.replications) CHECK(rep.per_type[0].admissions == 0);
  }

  TEST_CASE("uncapacitated ward reproduces the renewal-reward cost") {
    SimConfig cfg;
    const PatientParams p = increasing_params();
    cfg.instance = MultiInstance{{p}, kInf};
    cfg.thresholds = {solve_uncapacitated(p).a_star};
    cfg.unlimited_slots = true;
    cfg.horizon = 2000.0;
    cfg.dt = 0.02;
    cfg.replications = 6;
    cfg.seed = 17;
    const SimResult r = simulate(cfg, SwapPolicy::BestScore);
    const double want = cost_rate(p, cfg.thresholds[0]);
    CHECK(std::abs(r.mean_cost - want) < 3.0 * r.std_error);
    for (const ReplicationResult& rep : r.replications) CHECK(rep.per_type[0].swaps == 0);
  }
}
