#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hybridcare/multitype.hpp"
#include "hybridcare/params.hpp"
#include "hybridcare/random.hpp"

namespace hybridcare {

enum class Location { Remote, TravelIn, Waiting, Onsite, TravelOut, Discharged };
inline constexpr std::size_t kTrackedLocations = 5;  ///< all but Discharged

const char* to_string(Location loc);

/// Which on-site patient to send home when a call-in finds every slot busy.
enum class SwapPolicy {
  BestScore = 1,  ///< lowest current health score
  CostIndex = 2,  ///< lowest expected cost to complete the stay from home
};

const char* to_string(SwapPolicy policy);

struct SimConfig {
  MultiInstance instance;
  std::vector<double> thresholds;
  double horizon = 1e4;
  double warmup_fraction = 0.1;
  double dt = 0.01;
  std::uint64_t seed = 1;
  /// On-site slot count; when unset, max(1, round(sum_k W_H^k(a_k))).
  std::optional<long> onsite_slots;
  bool unlimited_slots = false;
  bool bridge_correction = true;
  double travel_noise_sigma = 0.0;
  int replications = 10;
  unsigned threads = 0;  ///< 0 = hardware concurrency
  bool record_events = false;  ///< keep the event log of replication 0
};

void validate(const SimConfig& cfg);

/// Slot count the simulation will use for `cfg` (0 when unlimited).
long effective_onsite_slots(const SimConfig& cfg);

struct PatientState {
  std::uint64_t id = 0;
  std::size_t type = 0;
  Location location = Location::Remote;
  double score = 0.0;
  double barrier = 0.0;  ///< call-in level of the current remote episode
  bool swapped_before = false;
  double accrued_cost = 0.0;
  double admitted_at = 0.0;
};

struct StepOutcome {
  double score = 0.0;
  bool crossed_lower = false;
  bool crossed_upper = false;
};

/// One Euler step of dS = -drift dt + sigma dB, absorbed at `lower` and `upper`.
/// With `bridge` on, a crossing between grid points is also sampled from the
/// Brownian-bridge hit probability. sigma = 0 gives a deterministic step.
StepOutcome step_path(double score, double drift, double sigma, double dt, double lower,
                      double upper, bool bridge, RandomStream& rng);

struct ExitSample {
  bool hit_upper = false;
  double time = 0.0;  ///< crossing placed at the midpoint of the step where it occurred
};

/// Runs step_path from `start` until it leaves (lower, upper).
ExitSample sample_exit(double start, double drift, double sigma, double lower, double upper,
                       double dt, bool bridge, RandomStream& rng);

/// Expected cost of completing the stay of a patient sent home with expected
/// post-travel score s and call-in threshold a.
double swap_index(const PatientParams& p, double s, double a);

/// Patient to swap out, or none when `eligible` is empty. Ties go to the
/// earliest admission, then the lowest id.
std::optional<std::uint64_t> select_swap(SwapPolicy policy, std::span<const PatientState> eligible,
                                         const MultiInstance& inst,
                                         std::span<const double> thresholds);

struct SimEvent {
  double time = 0.0;
  std::uint64_t patient = 0;
  std::size_t type = 0;
  std::string event;
  double score = 0.0;
  Location location = Location::Remote;
};

void write_event_log(std::ostream& os, std::span<const SimEvent> events);

struct TypeCounts {
  long admissions = 0;
  long discharges = 0;
  long call_ins = 0;
  long swaps = 0;
  long in_system = 0;        ///< still tracked at the horizon
  long sbar_violations = 0;  ///< swaps with s + a + theta_T T above S_bar
  long buffered = 0;         ///< call-ins that had to wait for a slot
};

struct ReplicationResult {
  double average_cost = 0.0;  ///< post-warmup cost per unit time
  std::vector<TypeCounts> per_type;
  std::array<double, kTrackedLocations> mean_occupancy{};
  long onsite_slots = 0;
  long max_swaps_per_patient = 0;
  double min_score_seen = std::numeric_limits<double>::infinity();
  std::vector<SimEvent> events;
};

ReplicationResult simulate_replication(const SimConfig& cfg, SwapPolicy policy, int replication);

struct SimResult {
  SwapPolicy policy = SwapPolicy::BestScore;
  std::vector<ReplicationResult> replications;
  double mean_cost = 0.0;
  double std_error = 0.0;
};

SimResult simulate(const SimConfig& cfg, SwapPolicy policy);

struct PolicyComparison {
  SimResult first;
  SimResult second;
  std::vector<double> differences;  ///< first - second, per replication
  double mean_difference = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;   ///< 95% paired t interval
  double ci_high = 0.0;
  double relative_improvement = 0.0;  ///< mean_difference / first.mean_cost
};

/// Runs both policies on common random numbers and pairs the replications.
PolicyComparison compare_policies(const SimConfig& cfg, SwapPolicy first = SwapPolicy::BestScore,
                                  SwapPolicy second = SwapPolicy::CostIndex);

}  // namespace hybridcare
