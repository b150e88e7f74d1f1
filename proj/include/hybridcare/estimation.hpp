#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <span>
#include <utility>
#include <vector>

namespace hybridcare {

struct BootstrapOptions {
  int resamples = 200;
  std::uint64_t seed = 20240601;
  double level = 0.95;  ///< coverage of the percentile interval
};

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// On-site length of stay as the inverse-Gaussian hitting time of 0 from x.
struct OnsiteFit {
  Estimate theta_H;
  Estimate sigma_H;
  Estimate ig_mu;
  Estimate ig_shape;
  std::size_t n = 0;
};

/// Inverse-Gaussian maximum likelihood mapped to (theta_H, sigma_H). Intervals
/// are exact at level opts.level; standard errors are asymptotic.
/// Throws ValidationError for fewer than 2 or non-positive samples and
/// IdentifiabilityError when the samples have no spread.
OnsiteFit fit_onsite(std::span<const double> los, double x, const BootstrapOptions& opts = {});

struct TravelObservation {
  double before = 0.0;
  double after = 0.0;
  double T = 0.0;
};

struct TravelFit {
  Estimate theta_T;
  std::size_t n = 0;
  bool negative_deterioration = false;  ///< the model assumes theta_T > 0
};

/// Deterioration rate: total score change over total travel time.
TravelFit fit_travel(std::span<const TravelObservation> obs, const BootstrapOptions& opts = {});
/// Same with a common travel time T for all (before, after) pairs.
TravelFit fit_travel(std::span<const std::pair<double, double>> pairs, double T,
                     const BootstrapOptions& opts = {});

struct RemoteFit {
  Estimate theta_R;
  Estimate sigma_R;
  Estimate rho;
  double call_in_fraction = 0.0;
  double mean_los = 0.0;
  double residual_prob = 0.0;  ///< |p_x(a; rho) - call-in fraction|
  double residual_mean = 0.0;  ///< |fitted expected LOS - sample mean|
  std::size_t n = 0;
  int resamples_used = 0;
};

/// Moment matching of remote episodes with known start score x and threshold a:
/// rho from the call-in fraction, then theta_R from the mean length of stay.
/// Throws IdentifiabilityError when the call-in fraction is 0, 1 or not below x/(x+a).
RemoteFit fit_remote(std::span<const double> los, std::span<const std::uint8_t> called_in, double x,
                     double a, const BootstrapOptions& opts = {});

/// rho with p_x(a; rho) = fraction; p is strictly decreasing in rho with
/// supremum x/(x+a).
double invert_call_in_prob(double fraction, double x, double a);

/// One row of episode data. Fields that do not apply to the station are NaN.
struct EpisodeRecord {
  int type = 1;
  std::string station;  ///< "onsite", "remote" or "travel"
  double los = 0.0;
  bool called_in = false;
  double score_before_travel = 0.0;
  double score_after_travel = 0.0;
  double T = 0.0;
};

std::vector<EpisodeRecord> read_episodes_csv(std::istream& is);
void write_episodes_csv(std::ostream& os, std::span<const EpisodeRecord> rows);

}  // namespace hybridcare
