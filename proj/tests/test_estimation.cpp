#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <utility>
#include <vector>

#include "doctest.h"
#include "hybridcare/analytics.hpp"
#include "hybridcare/errors.hpp"
#include "hybridcare/estimation.hpp"
#include "hybridcare/random.hpp"
#include "hybridcare/simulator.hpp"
#include "test_support.hpp"

using namespace hybridcare;
using namespace testing_support;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool within(const Estimate& e, double truth, double k = 3.0) {
  return std::abs(e.value - truth) <= k * e.std_error;
}

}  // namespace

TEST_SUITE("estimation") {
  TEST_CASE("travel deterioration") {
    std::vector<std::pair<double, double>> pairs;
    for (double s : {0.5, 1.0, 3.0, 7.25}) pairs.emplace_back(s, s + 0.15 * 4.0);
    const TravelFit exact = fit_travel(pairs, 4.0);
    CHECK(exact.theta_T.value == doctest::Approx(0.15).epsilon(1e-12));
    CHECK(exact.theta_T.std_error < 1e-12);
    CHECK_FALSE(exact.negative_deterioration);
    CHECK(exact.n == 4);

    const std::vector<TravelObservation> mixed{{1.0, 1.2, 2.0}, {2.0, 2.6, 6.0}};
    CHECK(fit_travel(mixed).theta_T.value == doctest::Approx(0.8 / 8.0));

    const std::vector<std::pair<double, double>> improving{{2.0, 1.5}, {3.0, 2.9}};
    const TravelFit neg = fit_travel(improving, 1.0);
    CHECK(neg.negative_deterioration);
    CHECK(neg.theta_T.value < 0.0);

    CHECK_THROWS_AS(fit_travel(std::vector<std::pair<double, double>>{}, 1.0), ValidationError);
    CHECK_THROWS_AS(fit_travel(pairs, 0.0), ValidationError);

    RandomStream rng(stream_key(3, {}));
    std::vector<std::pair<double, double>> noisy;
    for (int i = 0; i < 10000; ++i) {
      const double s = 1.0 + rng.uniform();
      noisy.emplace_back(s, s + 0.2 * 3.0 + 0.4 * rng.gaussian());
    }
    CHECK(within(fit_travel(noisy, 3.0).theta_T, 0.2));
  }

  TEST_CASE("on-site fit boundaries") {
    const std::vector<double> constant(10, 4.0);
    CHECK_THROWS_AS(fit_onsite(constant, 2.0), IdentifiabilityError);
    CHECK_THROWS_AS(fit_onsite(std::vector<double>{1.0}, 2.0), ValidationError);
    CHECK_THROWS_AS(fit_onsite(std::vector<double>{1.0, -1.0}, 2.0), ValidationError);
    CHECK_THROWS_AS(fit_onsite(std::vector<double>{1.0, 2.0}, 0.0), ValidationError);

    const OnsiteFit two = fit_onsite(std::vector<double>{3.0, 5.0}, 2.0);
    CHECK(two.n == 2);
    CHECK(two.theta_H.value == doctest::Approx(0.5));
    CHECK(std::isfinite(two.sigma_H.value));
    CHECK(two.theta_H.ci_low < two.theta_H.value);
    CHECK(two.theta_H.ci_high - two.theta_H.ci_low > 1.0);
    CHECK(two.sigma_H.ci_high / two.sigma_H.ci_low > 10.0);
  }

  TEST_CASE("on-site fit recovers simulated hitting times") {
    const double theta = 0.5, sigma = 1.0, x = 2.0;
    RandomStream rng(stream_key(12, {}));
    std::vector<double> los;
    for (int i = 0; i < 20000; ++i) los.push_back(sample_exit(x, theta, sigma, 0.0, kInf, 1e-2, true, rng).time);
    const OnsiteFit fit = fit_onsite(los, x);
    CHECK(within(fit.theta_H, theta));
    CHECK(within(fit.sigma_H, sigma));
    CHECK(fit.ig_mu.value == doctest::Approx(x / fit.theta_H.value));
    CHECK(fit.theta_H.ci_low < theta);
    CHECK(fit.theta_H.ci_high > theta);
  }

  TEST_CASE("call-in probability inversion") {
    for (double rho : {0.05, 0.4, 1.0, 3.0}) {
      const double p = call_in_prob(rho, 1.0, 2.0);
      CHECK(invert_call_in_prob(p, 1.0, 2.0) == doctest::Approx(rho).epsilon(1e-8));
    }
    CHECK_THROWS_AS(invert_call_in_prob(0.0, 1.0, 2.0), IdentifiabilityError);
    CHECK_THROWS_AS(invert_call_in_prob(1.0 / 3.0, 1.0, 2.0), IdentifiabilityError);
    CHECK_THROWS_AS(invert_call_in_prob(0.9, 1.0, 2.0), IdentifiabilityError);
  }

  TEST_CASE("remote fit") {
    const std::vector<double> los{1.0, 2.0, 3.0};
    const std::vector<std::uint8_t> none{0, 0, 0};
    CHECK_THROWS_AS(fit_remote(los, none, 1.0, 2.0), IdentifiabilityError);
    const std::vector<std::uint8_t> all{1, 1, 1};
    CHECK_THROWS_AS(fit_remote(los, all, 1.0, 2.0), IdentifiabilityError);
    CHECK_THROWS_AS(fit_remote(los, std::vector<std::uint8_t>{1, 0}, 1.0, 2.0), ValidationError);

    const double theta = 0.2, sigma = 1.0, x = 1.0, a = 2.0;
    RandomStream rng(stream_key(13, {}));
    std::vector<double> times;
    std::vector<std::uint8_t> flags;
    for (int i = 0; i < 20000; ++i) {
      const ExitSample e = sample_exit(x, theta, sigma, 0.0, x + a, 1e-2, true, rng);
      times.push_back(e.time);
      flags.push_back(e.hit_upper ? 1 : 0);
    }
    const RemoteFit fit = fit_remote(times, flags, x, a);
    CHECK(within(fit.theta_R, theta));
    CHECK(within(fit.sigma_R, sigma));
    CHECK(fit.residual_prob < 1e-9);
    CHECK(fit.residual_mean < 1e-9 * fit.mean_los);
    CHECK(fit.rho.value == doctest::Approx(2.0 * fit.theta_R.value / (fit.sigma_R.value * fit.sigma_R.value)));
  }

  TEST_CASE("episode csv") {
    const std::string text =
        "type,station,los,called_in,score_before_travel,score_after_travel,T\n"
        "1,onsite,3.5,,,,\n"
        "1,remote,2.25,1,,,\n"
        "2,travel,,,1.5,1.9,2\n";
    std::istringstream is(text);
    const std::vector<EpisodeRecord> rows = read_episodes_csv(is);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].los == 3.5);
    CHECK(rows[1].called_in);
    CHECK(rows[2].type == 2);
    CHECK(std::isnan(rows[2].los));
    CHECK(rows[2].score_after_travel == 1.9);

    std::ostringstream os;
    write_episodes_csv(os, rows);
    CHECK(os.str() == text);

    std::istringstream reordered("station,type,los,called_in,score_before_travel,score_after_travel,T\nonsite,1,2,,,,\n");
    CHECK(read_episodes_csv(reordered)[0].los == 2.0);

    std::istringstream empty("");
    CHECK_THROWS_AS(read_episodes_csv(empty), ValidationError);
    std::istringstream header_only("type,station,los,called_in,score_before_travel,score_after_travel,T\n");
    CHECK_THROWS_AS(read_episodes_csv(header_only), ValidationError);
    std::istringstream extra("type,station,los,called_in,score_before_travel,score_after_travel,T,note\n");
    CHECK_THROWS_AS(read_episodes_csv(extra), ValidationError);
    std::istringstream bad_station("type,station,los,called_in,score_before_travel,score_after_travel,T\n1,home,1,,,,\n");
    CHECK_THROWS_AS(read_episodes_csv(bad_station), ValidationError);
    std::istringstream bad_number("type,station,los,called_in,score_before_travel,score_after_travel,T\n1,onsite,1x,,,,\n");
    CHECK_THROWS_AS(read_episodes_csv(bad_number), ValidationError);
    std::istringstream bad_flag("type,station,los,called_in,score_before_travel,score_after_travel,T\n1,remote,1,2,,,\n");
    CHECK_THROWS_AS(read_episodes_csv(bad_flag), ValidationError);
  }
}
