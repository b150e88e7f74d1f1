#include "hybridcare/simulator.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <deque>
#include <ostream>

#include "hybridcare/analytics.hpp"
#include "hybridcare/errors.hpp"
#include "hybridcare/parallel.hpp"

namespace hybridcare {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Bridge hit probabilities below e^{-37} are skipped without drawing.
constexpr double kBridgeExponentCutoff = 37.0;
constexpr std::uint64_t kArrivalStreamTag = 0xA11;
constexpr std::uint64_t kPatientStreamTag = 0xB0D;

bool bridge_hit(double gap0, double gap1, double sigma, double dt, RandomStream& rng) {
  if (sigma <= 0.0) return false;
  const double exponent = 2.0 * gap0 * gap1 / (sigma * sigma * dt);
  if (exponent > kBridgeExponentCutoff) return false;
  return rng.uniform() < std::exp(-exponent);
}

struct SimPatient {
  PatientState state;
  RandomStream rng;
  long travel_left = 0;
  long swaps = 0;
};

struct TypeRuntime {
  PatientParams params;
  double threshold = 0.0;
  long travel_steps = 0;
};

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_error_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

class Ward {
 public:
  Ward(const SimConfig& cfg, SwapPolicy policy, int replication)
      : cfg_(cfg), policy_(policy), replication_(replication) {
    for (std::size_t k = 0; k < cfg.instance.types.size(); ++k) {
      const PatientParams& p = cfg.instance.types[k];
      types_.push_back({p, cfg.thresholds[k], std::lround(p.T / cfg.dt)});
      arrival_rng_.emplace_back(stream_key(cfg.seed, {kArrivalStreamTag, static_cast<std::uint64_t>(replication), k}));
      next_arrival_.push_back(p.lambda > 0.0 ? arrival_rng_.back().exponential(p.lambda) : kInf);
    }
    slots_ = effective_onsite_slots(cfg);
    result_.per_type.assign(types_.size(), TypeCounts{});
    result_.onsite_slots = slots_;
  }

  ReplicationResult run() {
    const long steps = std::max(1L, std::lround(cfg_.horizon / cfg_.dt));
    const long warm = std::lround(cfg_.warmup_fraction * static_cast<double>(steps));
    for (long n = 0; n < steps; ++n) {
      t_ = static_cast<double>(n) * cfg_.dt;
      measuring_ = n >= warm;
      admit_arrivals();
      advance();
      settle();
      if (measuring_) record_occupancy();
      std::erase_if(patients_, [](const SimPatient& sp) { return sp.state.location == Location::Discharged; });
    }
    const double measured = static_cast<double>(steps - warm) * cfg_.dt;
    result_.average_cost = measured > 0.0 ? measured_cost_ / measured : 0.0;
    for (double& occ : result_.mean_occupancy) occ = measured > 0.0 ? occ * cfg_.dt / measured : 0.0;
    for (const SimPatient& sp : patients_) ++result_.per_type[sp.state.type].in_system;
    return std::move(result_);
  }

 private:
  double hold_rate(const SimPatient& sp) const {
    const PatientParams& p = types_[sp.state.type].params;
    switch (sp.state.location) {
      case Location::Remote:
        return p.h_R;
      case Location::TravelIn:
      case Location::TravelOut:
        return p.h_T;
      case Location::Waiting:
      case Location::Onsite:
        return p.h_H;
      case Location::Discharged:
        break;
    }
    return 0.0;
  }

  void accrue(SimPatient& sp, double rate, double fraction) {
    const double c = rate * fraction * cfg_.dt;
    sp.state.accrued_cost += c;
    if (measuring_) measured_cost_ += c;
  }

  void log(const SimPatient& sp, const char* what) {
    if (!cfg_.record_events || replication_ != 0) return;
    result_.events.push_back({t_, sp.state.id, sp.state.type, what, sp.state.score, sp.state.location});
  }

  double travel_deterioration(SimPatient& sp) {
    const PatientParams& p = types_[sp.state.type].params;
    const double mean = p.theta_T * p.T;
    if (cfg_.travel_noise_sigma <= 0.0 || p.T <= 0.0) return mean;
    const double sd = cfg_.travel_noise_sigma * std::sqrt(p.T);
    const double floor = -sp.state.score + 1e-9;
    for (int attempt = 0; attempt < 64; ++attempt) {
      const double z = mean + sd * sp.rng.gaussian();
      if (z >= floor) return z;
    }
    return std::max(mean, floor);
  }

  void admit_arrivals() {
    for (std::size_t k = 0; k < types_.size(); ++k) {
      while (next_arrival_[k] < t_ + cfg_.dt) {
        const std::uint64_t id = next_id_++;
        SimPatient sp{PatientState{}, RandomStream(stream_key(cfg_.seed, {kPatientStreamTag, static_cast<std::uint64_t>(replication_), id})), 0, 0};
        sp.state.id = id;
        sp.state.type = k;
        sp.state.score = types_[k].params.x;
        sp.state.admitted_at = t_;
        ++result_.per_type[k].admissions;
        if (types_[k].threshold > 0.0) {
          sp.state.location = Location::Remote;
          sp.state.barrier = sp.state.score + types_[k].threshold;
          log(sp, "arrival");
        } else {
          log(sp, "arrival");
          start_travel_in(sp);
        }
        patients_.push_back(std::move(sp));
        next_arrival_[k] += arrival_rng_[k].exponential(types_[k].params.lambda);
      }
    }
  }

  void start_travel_in(SimPatient& sp) {
    ++result_.per_type[sp.state.type].call_ins;
    sp.state.location = Location::TravelIn;
    sp.travel_left = types_[sp.state.type].travel_steps;
    log(sp, "call_in");
    if (sp.travel_left <= 0) hospital_queue_.push_back(sp.state.id);
  }

  void discharge(SimPatient& sp) {
    if (sp.state.location == Location::Onsite) --slots_used_;
    sp.state.location = Location::Discharged;
    sp.state.score = 0.0;
    ++result_.per_type[sp.state.type].discharges;
    log(sp, "discharge");
  }

  void arrive_home(SimPatient& sp) {
    sp.state.score += travel_deterioration(sp);
    sp.state.location = Location::Remote;
    sp.state.barrier = sp.state.score + types_[sp.state.type].threshold;
    log(sp, "home");
  }

  void advance() {
    for (SimPatient& sp : patients_) {
      const PatientParams& p = types_[sp.state.type].params;
      const double rate = hold_rate(sp);
      switch (sp.state.location) {
        case Location::Remote: {
          const StepOutcome o = step_path(sp.state.score, p.theta_R, p.sigma_R, cfg_.dt, 0.0,
                                          sp.state.barrier, cfg_.bridge_correction, sp.rng);
          sp.state.score = o.score;
          if (o.crossed_lower) {
            accrue(sp, rate, 0.5);
            discharge(sp);
          } else if (o.crossed_upper) {
            accrue(sp, rate, 0.5);
            start_travel_in(sp);
          } else {
            accrue(sp, rate, 1.0);
          }
          break;
        }
        case Location::Waiting:
        case Location::Onsite: {
          const bool onsite = sp.state.location == Location::Onsite;
          const StepOutcome o =
              step_path(sp.state.score, onsite ? p.theta_H : p.theta_R, onsite ? p.sigma_H : p.sigma_R,
                        cfg_.dt, 0.0, kInf, cfg_.bridge_correction, sp.rng);
          sp.state.score = o.score;
          if (o.crossed_lower) {
            accrue(sp, rate, 0.5);
            if (!onsite) std::erase(buffer_, sp.state.id);
            discharge(sp);
          } else {
            accrue(sp, rate, 1.0);
          }
          break;
        }
        case Location::TravelIn:
          if (sp.travel_left <= 0) break;  // zero travel time, already queued
          accrue(sp, rate, 1.0);
          if (--sp.travel_left == 0) hospital_queue_.push_back(sp.state.id);
          break;
        case Location::TravelOut:
          accrue(sp, rate, 1.0);
          if (--sp.travel_left == 0) arrive_home(sp);
          break;
        case Location::Discharged:
          break;
      }
    }
  }

  SimPatient& find(std::uint64_t id) {
    return *std::find_if(patients_.begin(), patients_.end(),
                         [id](const SimPatient& sp) { return sp.state.id == id; });
  }

  bool slot_free() const { return slots_ == 0 || slots_used_ < slots_; }

  void take_slot(SimPatient& sp) {
    sp.state.location = Location::Onsite;
    ++slots_used_;
    log(sp, "onsite");
  }

  void settle() {
    while (!buffer_.empty() && slot_free()) {
      SimPatient& sp = find(buffer_.front());
      buffer_.pop_front();
      take_slot(sp);
    }
    for (std::size_t i = 0; i < hospital_queue_.size(); ++i) {
      SimPatient& sp = find(hospital_queue_[i]);
      sp.state.score += travel_deterioration(sp);
      if (slot_free()) {
        take_slot(sp);
        continue;
      }
      if (auto victim = choose_swap()) {
        SimPatient& out = find(*victim);
        send_home(out);
        --slots_used_;
        take_slot(sp);
        continue;
      }
      sp.state.location = Location::Waiting;
      ++result_.per_type[sp.state.type].buffered;
      buffer_.push_back(sp.state.id);
      log(sp, "buffer");
    }
    hospital_queue_.clear();
  }

  std::optional<std::uint64_t> choose_swap() {
    eligible_.clear();
    for (const SimPatient& sp : patients_) {
      if (sp.state.location == Location::Onsite && !sp.state.swapped_before) eligible_.push_back(sp.state);
    }
    return select_swap(policy_, eligible_, cfg_.instance, cfg_.thresholds);
  }

  void send_home(SimPatient& sp) {
    const TypeRuntime& tr = types_[sp.state.type];
    const PatientParams& p = tr.params;
    TypeCounts& counts = result_.per_type[sp.state.type];
    ++counts.swaps;
    const double s_home = sp.state.score + p.theta_T * p.T;
    if (s_home + tr.threshold + p.theta_T * p.T > p.S_bar) ++counts.sbar_violations;
    sp.state.swapped_before = true;
    result_.max_swaps_per_patient = std::max(result_.max_swaps_per_patient, ++sp.swaps);
    sp.state.location = Location::TravelOut;
    sp.travel_left = tr.travel_steps;
    log(sp, "swap_out");
    if (sp.travel_left <= 0) arrive_home(sp);
  }

  void record_occupancy() {
    for (const SimPatient& sp : patients_) {
      if (sp.state.location == Location::Discharged) continue;
      result_.mean_occupancy[static_cast<std::size_t>(sp.state.location)] += 1.0;
      result_.min_score_seen = std::min(result_.min_score_seen, sp.state.score);
    }
  }

  const SimConfig& cfg_;
  SwapPolicy policy_;
  int replication_;
  std::vector<TypeRuntime> types_;
  std::vector<RandomStream> arrival_rng_;
  std::vector<double> next_arrival_;
  std::vector<SimPatient> patients_;
  std::vector<std::uint64_t> hospital_queue_;
  std::deque<std::uint64_t> buffer_;
  std::vector<PatientState> eligible_;
  long slots_ = 0;
  long slots_used_ = 0;
  std::uint64_t next_id_ = 0;
  double t_ = 0.0;
  bool measuring_ = false;
  double measured_cost_ = 0.0;
  ReplicationResult result_;
};

}  // namespace

const char* to_string(Location loc) {
  switch (loc) {
    case Location::Remote:
      return "remote";
    case Location::TravelIn:
      return "travel_in";
    case Location::Waiting:
      return "waiting";
    case Location::Onsite:
      return "onsite";
    case Location::TravelOut:
      return "travel_out";
    case Location::Discharged:
      return "discharged";
  }
  return "unknown";
}

const char* to_string(SwapPolicy policy) {
  return policy == SwapPolicy::BestScore ? "policy1_best_score" : "policy2_cost_index";
}

void validate(const SimConfig& cfg) {
  validate(cfg.instance);
  if (cfg.thresholds.size() != cfg.instance.types.size()) {
    throw ValidationError("need one threshold per patient type");
  }
  for (std::size_t k = 0; k < cfg.thresholds.size(); ++k) {
    const double a = cfg.thresholds[k];
    const double A = max_threshold(cfg.instance.types[k]);
    if (!std::isfinite(a) || a < 0.0 || a > A + 1e-9 * std::max(1.0, A)) {
      throw ValidationError("threshold of type " + std::to_string(k + 1) + " outside [0, A_bar]");
    }
  }
  if (!std::isfinite(cfg.horizon) || !(cfg.horizon > 0.0)) throw ValidationError("horizon must be > 0");
  if (!(cfg.warmup_fraction >= 0.0 && cfg.warmup_fraction < 1.0)) {
    throw ValidationError("warmup_fraction must lie in [0, 1)");
  }
  if (!std::isfinite(cfg.dt) || !(cfg.dt > 0.0)) throw ValidationError("dt must be > 0");
  if (cfg.onsite_slots && *cfg.onsite_slots < 1) throw ValidationError("onsite_slots must be >= 1");
  if (!(cfg.travel_noise_sigma >= 0.0)) throw ValidationError("travel_noise_sigma must be >= 0");
  if (cfg.replications < 1) throw ValidationError("replications must be >= 1");
}

long effective_onsite_slots(const SimConfig& cfg) {
  if (cfg.unlimited_slots) return 0;
  if (cfg.onsite_slots) return *cfg.onsite_slots;
  double offered = 0.0;
  for (std::size_t k = 0; k < cfg.instance.types.size(); ++k) {
    offered += workloads(cfg.instance.types[k], cfg.thresholds[k]).onsite;
  }
  return std::max(1L, std::lround(offered));
}

StepOutcome step_path(double score, double drift, double sigma, double dt, double lower,
                      double upper, bool bridge, RandomStream& rng) {
  StepOutcome o;
  const double noise = sigma > 0.0 ? sigma * std::sqrt(dt) * rng.gaussian() : 0.0;
  const double next = score - drift * dt + noise;
  if (next <= lower) {
    o.score = lower;
    o.crossed_lower = true;
    return o;
  }
  if (next >= upper) {
    o.score = upper;
    o.crossed_upper = true;
    return o;
  }
  o.score = next;
  if (bridge) {
    if (bridge_hit(score - lower, next - lower, sigma, dt, rng)) {
      o.score = lower;
      o.crossed_lower = true;
    } else if (upper < kInf && bridge_hit(upper - score, upper - next, sigma, dt, rng)) {
      o.score = upper;
      o.crossed_upper = true;
    }
  }
  return o;
}

ExitSample sample_exit(double start, double drift, double sigma, double lower, double upper,
                       double dt, bool bridge, RandomStream& rng) {
  double s = start;
  for (long n = 1;; ++n) {
    const StepOutcome o = step_path(s, drift, sigma, dt, lower, upper, bridge, rng);
    if (o.crossed_lower || o.crossed_upper) {
      return {o.crossed_upper, (static_cast<double>(n) - 0.5) * dt};
    }
    s = o.score;
  }
}

double swap_index(const PatientParams& p, double s, double a) {
  const double rho = 2.0 * p.theta_R / (p.sigma_R * p.sigma_R);
  const double prob = s > 0.0 ? call_in_prob(rho, s, a) : 0.0;
  const double travel = p.h_T * p.T;
  return (p.h_R / p.theta_R) * ((1.0 - prob) * s - prob * a) + travel +
         (travel + (p.h_H / p.theta_H) * (a + s + p.theta_T * p.T)) * prob;
}

std::optional<std::uint64_t> select_swap(SwapPolicy policy, std::span<const PatientState> eligible,
                                         const MultiInstance& inst,
                                         std::span<const double> thresholds) {
  if (eligible.empty()) return std::nullopt;
  auto key = [&](const PatientState& ps) {
    if (policy == SwapPolicy::BestScore) return ps.score;
    const PatientParams& p = inst.types.at(ps.type);
    return swap_index(p, ps.score + p.theta_T * p.T, thresholds[ps.type]);
  };
  const PatientState* best = &eligible.front();
  double best_key = key(*best);
  for (const PatientState& ps : eligible.subspan(1)) {
    const double k = key(ps);
    const bool better = k < best_key ||
                        (k == best_key && (ps.admitted_at < best->admitted_at ||
                                           (ps.admitted_at == best->admitted_at && ps.id < best->id)));
    if (better) {
      best = &ps;
      best_key = k;
    }
  }
  return best->id;
}

void write_event_log(std::ostream& os, std::span<const SimEvent> events) {
  os << "time,patient,type,event,score,location\n";
  const auto old_precision = os.precision(10);
  for (const SimEvent& e : events) {
    os << e.time << ',' << e.patient << ',' << e.type + 1 << ',' << e.event << ',' << e.score << ','
       << to_string(e.location) << '\n';
  }
  os.precision(old_precision);
}

ReplicationResult simulate_replication(const SimConfig& cfg, SwapPolicy policy, int replication) {
  validate(cfg);
  return Ward(cfg, policy, replication).run();
}

SimResult simulate(const SimConfig& cfg, SwapPolicy policy) {
  validate(cfg);
  SimResult r;
  r.policy = policy;
  r.replications.resize(static_cast<std::size_t>(cfg.replications));
  parallel_for(r.replications.size(), cfg.threads, [&](std::size_t i) {
    r.replications[i] = Ward(cfg, policy, static_cast<int>(i)).run();
  });
  std::vector<double> costs;
  for (const auto& rep : r.replications) costs.push_back(rep.average_cost);
  r.mean_cost = mean_of(costs);
  r.std_error = std_error_of(costs);
  return r;
}

PolicyComparison compare_policies(const SimConfig& cfg, SwapPolicy first, SwapPolicy second) {
  PolicyComparison c;
  c.first = simulate(cfg, first);
  c.second = simulate(cfg, second);
  for (std::size_t i = 0; i < c.first.replications.size(); ++i) {
    c.differences.push_back(c.first.replications[i].average_cost - c.second.replications[i].average_cost);
  }
  c.mean_difference = mean_of(c.differences);
  c.std_error = std_error_of(c.differences);
  const std::size_t n = c.differences.size();
  const double t_crit =
      n > 1 ? boost::math::quantile(boost::math::students_t(static_cast<double>(n - 1)), 0.975) : 0.0;
  c.ci_low = c.mean_difference - t_crit * c.std_error;
  c.ci_high = c.mean_difference + t_crit * c.std_error;
  c.relative_improvement = c.first.mean_cost != 0.0 ? c.mean_difference / c.first.mean_cost : 0.0;
  return c;
}

}  // namespace hybridcare
