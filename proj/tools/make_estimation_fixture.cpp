// Writes a synthetic episode file with known generator parameters, used by the
// estimation round-trip test and the sample estimate config.

#include <fstream>
#include <limits>
#include <iostream>
#include <vector>

#include "hybridcare/estimation.hpp"
#include "hybridcare/random.hpp"
#include "hybridcare/simulator.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_estimation_fixture OUT.csv\n";
    return 1;
  }
  using namespace hybridcare;

  constexpr int kPerStation = 4000;
  constexpr double kDt = 1e-3;
  struct Truth {
    int type;
    double x, a, theta_R, sigma_R, onsite_start, theta_H, sigma_H, T, theta_T, travel_sd;
  };
  const Truth truths[] = {
      {1, 1.0, 2.0, 0.5, 1.0, 2.0, 0.8, 1.0, 2.0, 0.1, 0.3},
      {2, 1.5, 1.0, 0.4, 0.8, 3.0, 1.0, 1.2, 5.0, 0.2, 0.5},
  };

  std::vector<EpisodeRecord> rows;
  for (const Truth& t : truths) {
    RandomStream rng(stream_key(777, {static_cast<std::uint64_t>(t.type)}));
    for (int i = 0; i < kPerStation; ++i) {
      const ExitSample r = sample_exit(t.x, t.theta_R, t.sigma_R, 0.0, t.x + t.a, kDt, true, rng);
      EpisodeRecord rec;
      rec.type = t.type;
      rec.station = "remote";
      rec.los = r.time;
      rec.called_in = r.hit_upper;
      rec.score_before_travel = rec.score_after_travel = rec.T = std::numeric_limits<double>::quiet_NaN();
      rows.push_back(rec);
    }
    for (int i = 0; i < kPerStation; ++i) {
      const ExitSample h = sample_exit(t.onsite_start, t.theta_H, t.sigma_H, 0.0,
                                       std::numeric_limits<double>::infinity(), kDt, true, rng);
      EpisodeRecord rec;
      rec.type = t.type;
      rec.station = "onsite";
      rec.los = h.time;
      rec.score_before_travel = rec.score_after_travel = rec.T = std::numeric_limits<double>::quiet_NaN();
      rows.push_back(rec);
    }
    for (int i = 0; i < kPerStation; ++i) {
      EpisodeRecord rec;
      rec.type = t.type;
      rec.station = "travel";
      rec.los = std::numeric_limits<double>::quiet_NaN();
      rec.T = t.T;
      rec.score_before_travel = t.x + t.a;
      rec.score_after_travel = rec.score_before_travel + t.theta_T * t.T + t.travel_sd * rng.gaussian();
      rows.push_back(rec);
    }
  }

  std::ofstream out(argv[1], std::ios::binary);
  if (!out) {
    std::cerr << "cannot open " << argv[1] << "\n";
    return 1;
  }
  write_episodes_csv(out, rows);
  return 0;
}
