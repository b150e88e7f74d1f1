#include "hybridcare/commands.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <locale>
#include <map>
#include <sstream>

#include "hybridcare/errors.hpp"
#include "hybridcare/estimation.hpp"
#include "hybridcare/parallel.hpp"
#include "hybridcare/simulator.hpp"
#include "hybridcare/solver.hpp"

namespace hybridcare {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

json workloads_json(const Workloads& w) { return {{"W_H", w.onsite}, {"W_R", w.remote}, {"W_T", w.total}}; }

json estimate_json(const Estimate& e) {
  return {{"value", e.value}, {"std_error", e.std_error}, {"ci_low", e.ci_low}, {"ci_high", e.ci_high}};
}

json single_solution_json(const PatientParams& p, const ThresholdSolution& s) {
  const DerivedCoeffs c = derive_coeffs(p);
  const FeasibilitySummary fs = feasibility(p);
  json feas = {{"workload_case", to_string(fs.workload_case.shape)}, {"a_min", fs.a_min}, {"w_min", fs.w_min}};
  if (fs.workload_case.a0) feas["a0"] = *fs.workload_case.a0;
  return {{"status", "ok"},
          {"a_star", s.a_star},
          {"regime", to_string(s.regime)},
          {"gamma_shadow", s.gamma_shadow},
          {"cost", s.cost},
          {"call_in_prob", s.call_in_prob},
          {"workloads", workloads_json(s.workloads)},
          {"remote_moment_negative", s.remote_moment_negative},
          {"coefficients",
           {{"rho", c.rho},
            {"alpha", c.alpha},
            {"beta", c.beta},
            {"gamma", c.gamma},
            {"eta", c.eta},
            {"Delta", c.Delta},
            {"A_bar", c.A_bar}}},
          {"feasibility", feas}};
}

json multi_solution_json(const RunConfig& cfg, const MultiInstance& inst, const MultiSolution& s) {
  json types = json::array();
  for (std::size_t k = 0; k < s.a_star.size(); ++k) {
    const PatientParams& p = inst.types[k];
    types.push_back({{"name", cfg.names[k]},
                     {"a_star", s.a_star[k]},
                     {"a_min", s.a_min[k]},
                     {"a_inf", s.a_inf[k]},
                     {"call_in_prob", call_in_prob(derive_coeffs(p).rho, p.x, s.a_star[k])},
                     {"cost", s.costs[k]},
                     {"workloads", workloads_json(s.workloads[k])}});
  }
  json interior = json::array();
  for (std::size_t k : s.interior_set) interior.push_back(k + 1);
  json out = {{"status", "ok"},
              {"method", s.method},
              {"gamma_shadow", s.gamma_shadow},
              {"constraint_active", s.constraint_active},
              {"degraded_precision", s.degraded_precision},
              {"total_cost", s.total_cost},
              {"workloads", workloads_json(s.total_workload)},
              {"interior_set", interior},
              {"types", types}};
  if (std::isfinite(inst.C)) {
    const KktReport r = kkt_check(inst, s);
    out["capacity"] = inst.C;
    out["kkt"] = {{"passed", r.passed},
                  {"between", r.between},
                  {"active", r.active},
                  {"stationary", r.stationary},
                  {"capacity_residual", r.capacity_residual},
                  {"stationarity_residuals", r.stationarity_residuals}};
  }
  return out;
}

MultiInstance instance_of(const RunConfig& cfg) {
  if (cfg.types.empty()) throw ValidationError("config has no patient types");
  return {cfg.types, cfg.capacity.value_or(std::numeric_limits<double>::infinity())};
}

// Single type with the chosen cost model, or the multi-type allocation.
struct PointSolution {
  std::vector<double> a;
  double gamma = 0.0;
};

PointSolution solve_point(const std::vector<PatientParams>& types, std::optional<double> capacity, bool quadratic) {
  if (quadratic) {
    if (types.size() != 1) throw ValidationError("quadratic costs are supported for a single type only");
    const ThresholdSolution s = solve_quadratic(types[0], capacity);
    return {{s.a_star}, s.gamma_shadow};
  }
  if (types.size() == 1) {
    const ThresholdSolution s = capacity ? solve_capacitated(types[0], *capacity) : solve_uncapacitated(types[0]);
    return {{s.a_star}, s.gamma_shadow};
  }
  const MultiSolution s =
      solve_multitype({types, capacity.value_or(std::numeric_limits<double>::infinity())});
  return {s.a_star, s.gamma_shadow};
}

void write_output(const CommandOptions& opts, std::ostream& out, const std::string& text) {
  if (opts.out) {
    std::ofstream f(*opts.out, std::ios::binary);
    if (!f) throw ValidationError("cannot open output file '" + opts.out->string() + "'");
    f << text;
    if (!f) throw ValidationError("failed writing output file '" + opts.out->string() + "'");
  } else {
    out << text;
  }
}

std::string format_of(const CommandOptions& opts, const char* fallback) {
  const std::string f = opts.format.value_or(fallback);
  if (f != "csv" && f != "json") throw ValidationError("format must be csv or json");
  return f;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string csv_line(const std::vector<std::string>& cells) {
  std::string s;
  for (std::size_t i = 0; i < cells.size(); ++i) s += (i ? "," : "") + cells[i];
  return s + "\n";
}

int cmd_solve(const RunConfig& cfg, const CommandOptions& opts, std::ostream& out) {
  const std::string fmt = format_of(opts, "json");
  const MultiInstance inst = instance_of(cfg);
  json result;
  if (inst.types.size() == 1) {
    const PatientParams& p = inst.types[0];
    ThresholdSolution s;
    if (cfg.quadratic_costs) {
      s = solve_quadratic(p, cfg.capacity);
    } else {
      s = cfg.capacity ? solve_capacitated(p, *cfg.capacity) : solve_uncapacitated(p);
    }
    result = single_solution_json(p, s);
    result["cost_model"] = cfg.quadratic_costs ? "quadratic" : "linear";
    if (cfg.capacity) result["capacity"] = *cfg.capacity;
  } else {
    if (cfg.quadratic_costs) throw ValidationError("quadratic costs are supported for a single type only");
    result = multi_solution_json(cfg, inst, solve_multitype(inst));
  }
  if (fmt == "json") {
    write_output(opts, out, dump(result));
    return kExitOk;
  }
  // CSV: one row in sweep layout without the sweep column
  const std::size_t K = inst.types.size();
  SweepRow row;
  const PointSolution ps = solve_point(inst.types, cfg.capacity, cfg.quadratic_costs);
  row.a_star = ps.a;
  row.gamma = ps.gamma;
  for (std::size_t k = 0; k < K; ++k) {
    const PatientParams& p = inst.types[k];
    row.call_in_prob.push_back(call_in_prob(derive_coeffs(p).rho, p.x, ps.a[k]));
    const Workloads w = workloads(p, ps.a[k]);
    row.workloads.onsite += w.onsite;
    row.workloads.remote += w.remote;
    row.workloads.total += w.total;
    row.cost += cfg.quadratic_costs ? cost_rate_quadratic(p, ps.a[k]).value : cost_rate(p, ps.a[k]);
  }
  std::ostringstream os;
  write_sweep_csv(os, "", K, {row});
  write_output(opts, out, os.str());
  return kExitOk;
}

int cmd_sweep(const RunConfig& cfg, const CommandOptions& opts, std::ostream& out) {
  if (!cfg.sweep) throw ValidationError("config has no 'sweep' block");
  const std::string fmt = format_of(opts, "csv");
  const std::vector<SweepRow> rows = run_sweep(cfg, opts.threads);
  const std::size_t K = cfg.types.size();
  if (fmt == "csv") {
    std::ostringstream os;
    write_sweep_csv(os, cfg.sweep->variable, K, rows);
    write_output(opts, out, os.str());
    return kExitOk;
  }
  json arr = json::array();
  for (const SweepRow& r : rows) {
    json row = {{cfg.sweep->variable, r.value},       {"a_star", r.a_star}, {"p_call_in", r.call_in_prob},
                {"workloads", workloads_json(r.workloads)}, {"cost", r.cost},     {"Gamma", r.gamma},
                {"feasible", r.feasible}};
    arr.push_back(row);
  }
  write_output(opts, out, dump({{"variable", cfg.sweep->variable}, {"rows", arr}}));
  return kExitOk;
}

json policy_json(const SimResult& r, std::size_t K) {
  json costs = json::array();
  std::vector<TypeCounts> totals(K);
  std::array<double, kTrackedLocations> occ{};
  for (const auto& rep : r.replications) {
    costs.push_back(rep.average_cost);
    for (std::size_t k = 0; k < K; ++k) {
      totals[k].admissions += rep.per_type[k].admissions;
      totals[k].discharges += rep.per_type[k].discharges;
      totals[k].call_ins += rep.per_type[k].call_ins;
      totals[k].swaps += rep.per_type[k].swaps;
      totals[k].in_system += rep.per_type[k].in_system;
      totals[k].sbar_violations += rep.per_type[k].sbar_violations;
      totals[k].buffered += rep.per_type[k].buffered;
    }
    for (std::size_t l = 0; l < kTrackedLocations; ++l) occ[l] += rep.mean_occupancy[l] / static_cast<double>(r.replications.size());
  }
  json per_type = json::array();
  for (const TypeCounts& t : totals) {
    per_type.push_back({{"admissions", t.admissions},
                        {"discharges", t.discharges},
                        {"call_ins", t.call_ins},
                        {"swaps", t.swaps},
                        {"in_system", t.in_system},
                        {"buffered", t.buffered},
                        {"sbar_violations", t.sbar_violations}});
  }
  json occupancy = json::object();
  for (std::size_t l = 0; l < kTrackedLocations; ++l) occupancy[to_string(static_cast<Location>(l))] = occ[l];
  return {{"policy", to_string(r.policy)},
          {"mean_cost", r.mean_cost},
          {"std_error", r.std_error},
          {"replication_costs", costs},
          {"counts_per_type", per_type},
          {"mean_occupancy", occupancy}};
}

int cmd_simulate(const RunConfig& cfg, const CommandOptions& opts, std::ostream& out) {
  if (!cfg.simulation) throw ValidationError("config has no 'simulation' block");
  const std::string fmt = format_of(opts, "json");
  SimConfig sim = cfg.simulation->settings;
  sim.instance = instance_of(cfg);
  sim.seed = opts.seed.value_or(cfg.seed.value_or(sim.seed));
  sim.threads = opts.threads;
  sim.record_events = cfg.simulation->event_log.has_value();
  sim.thresholds = cfg.simulation->thresholds ? *cfg.simulation->thresholds
                                              : solve_point(sim.instance.types, cfg.capacity, false).a;
  validate(sim);

  const PolicyComparison cmp = compare_policies(sim);
  const std::size_t K = sim.instance.types.size();

  if (cfg.simulation->event_log) {
    const auto& base = *cfg.simulation->event_log;
    for (const SimResult* r : {&cmp.first, &cmp.second}) {
      auto path = base;
      path.replace_extension(std::string(r == &cmp.first ? ".policy1" : ".policy2") + base.extension().string());
      std::ofstream f(path, std::ios::binary);
      if (!f) throw ValidationError("cannot open event log '" + path.string() + "'");
      write_event_log(f, r->replications.front().events);
    }
  }

  json summary = {{"description", cfg.description},
                  {"seed", sim.seed},
                  {"horizon", sim.horizon},
                  {"warmup_fraction", sim.warmup_fraction},
                  {"dt", sim.dt},
                  {"replications", sim.replications},
                  {"onsite_slots", sim.unlimited_slots ? json("unlimited") : json(effective_onsite_slots(sim))},
                  {"thresholds", sim.thresholds},
                  {"policy1", policy_json(cmp.first, K)},
                  {"policy2", policy_json(cmp.second, K)},
                  {"paired",
                   {{"mean_difference", cmp.mean_difference},
                    {"std_error", cmp.std_error},
                    {"ci_low", cmp.ci_low},
                    {"ci_high", cmp.ci_high},
                    {"relative_improvement", cmp.relative_improvement},
                    {"differences", cmp.differences}}}};
  if (fmt == "json") {
    write_output(opts, out, dump(summary));
    return kExitOk;
  }
  std::string csv = csv_line({"replication", "policy1_cost", "policy2_cost", "difference"});
  for (std::size_t i = 0; i < cmp.differences.size(); ++i) {
    csv += csv_line({std::to_string(i), format_number(cmp.first.replications[i].average_cost),
                     format_number(cmp.second.replications[i].average_cost), format_number(cmp.differences[i])});
  }
  write_output(opts, out, csv);
  if (opts.out) {
    auto path = *opts.out;
    path += ".summary.json";
    std::ofstream f(path, std::ios::binary);
    f << dump(summary);
  }
  return kExitOk;
}

int cmd_estimate(const RunConfig& cfg, const CommandOptions& opts, std::ostream& out) {
  if (!cfg.estimation) throw ValidationError("config has no 'estimation' block");
  format_of(opts, "json");
  const EstimationSpec& spec = cfg.estimation.value();
  std::ifstream in(spec.data);
  if (!in) throw ValidationError("cannot open data file '" + spec.data.string() + "'");
  const std::vector<EpisodeRecord> rows = read_episodes_csv(in);

  BootstrapOptions boot = spec.bootstrap;
  boot.seed = opts.seed.value_or(cfg.seed.value_or(boot.seed));

  std::map<int, std::vector<const EpisodeRecord*>> by_type;
  for (const auto& r : rows) by_type[r.type].push_back(&r);

  json types = json::array();
  for (const auto& [type, recs] : by_type) {
    const auto spec_it = std::find_if(spec.types.begin(), spec.types.end(),
                                      [t = type](const EstimationTypeSpec& s) { return s.type == t; });
    std::vector<double> onsite_los, remote_los;
    std::vector<std::uint8_t> flags;
    std::vector<TravelObservation> travel;
    for (const EpisodeRecord* r : recs) {
      if (r->station == "onsite") {
        onsite_los.push_back(r->los);
      } else if (r->station == "remote") {
        remote_los.push_back(r->los);
        flags.push_back(r->called_in ? 1 : 0);
      } else {
        travel.push_back({r->score_before_travel, r->score_after_travel, r->T});
      }
    }
    json entry = {{"type", type}};
    auto need = [&](const std::optional<double> EstimationTypeSpec::*field, const char* name) {
      if (spec_it == spec.types.end() || !((*spec_it).*field)) {
        throw ValidationError("estimation: type " + std::to_string(type) + " needs '" + name + "'");
      }
      return *((*spec_it).*field);
    };
    if (!onsite_los.empty()) {
      const OnsiteFit f = fit_onsite(onsite_los, need(&EstimationTypeSpec::onsite_start, "onsite_start"), boot);
      entry["onsite"] = {{"n", f.n},
                         {"theta_H", estimate_json(f.theta_H)},
                         {"sigma_H", estimate_json(f.sigma_H)},
                         {"ig_mu", estimate_json(f.ig_mu)},
                         {"ig_shape", estimate_json(f.ig_shape)}};
    }
    if (!remote_los.empty()) {
      const RemoteFit f = fit_remote(remote_los, flags, need(&EstimationTypeSpec::x, "x"),
                                     need(&EstimationTypeSpec::a, "a"), boot);
      entry["remote"] = {{"n", f.n},
                         {"theta_R", estimate_json(f.theta_R)},
                         {"sigma_R", estimate_json(f.sigma_R)},
                         {"rho", estimate_json(f.rho)},
                         {"call_in_fraction", f.call_in_fraction},
                         {"mean_los", f.mean_los},
                         {"residual_prob", f.residual_prob},
                         {"residual_mean", f.residual_mean}};
    }
    if (!travel.empty()) {
      const TravelFit f = fit_travel(travel, boot);
      entry["travel"] = {{"n", f.n},
                         {"theta_T", estimate_json(f.theta_T)},
                         {"negative_deterioration", f.negative_deterioration}};
    }
    types.push_back(entry);
  }
  write_output(opts, out, dump({{"status", "ok"}, {"bootstrap_resamples", boot.resamples},
                                {"confidence_level", boot.level}, {"types", types}}));
  return kExitOk;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(10);
  os << v;
  return os.str();
}

std::string sweep_csv_header(const std::string& variable, std::size_t types) {
  std::vector<std::string> cols;
  if (!variable.empty()) cols.push_back(variable);
  for (std::size_t k = 1; k <= types; ++k) cols.push_back("a_star_" + std::to_string(k));
  for (std::size_t k = 1; k <= types; ++k) cols.push_back("p_call_in_" + std::to_string(k));
  for (const char* c : {"W_H", "W_R", "W_T", "cost", "Gamma", "feasible"}) cols.emplace_back(c);
  return csv_line(cols);
}

void write_sweep_csv(std::ostream& os, const std::string& variable, std::size_t types,
                     const std::vector<SweepRow>& rows) {
  os << sweep_csv_header(variable, types);
  for (const SweepRow& r : rows) {
    std::vector<std::string> cells;
    if (!variable.empty()) cells.push_back(format_number(r.value));
    for (std::size_t k = 0; k < types; ++k) cells.push_back(format_number(r.a_star.at(k)));
    for (std::size_t k = 0; k < types; ++k) cells.push_back(format_number(r.call_in_prob.at(k)));
    for (double v : {r.workloads.onsite, r.workloads.remote, r.workloads.total, r.cost, r.gamma}) {
      cells.push_back(format_number(v));
    }
    cells.emplace_back(r.feasible ? "1" : "0");
    os << csv_line(cells);
  }
}

std::vector<SweepRow> run_sweep(const RunConfig& cfg, unsigned threads) {
  if (!cfg.sweep) throw ValidationError("config has no 'sweep' block");
  if (cfg.types.empty()) throw ValidationError("config has no patient types");
  const SweepSpec& sw = *cfg.sweep;
  const std::size_t K = cfg.types.size();
  std::vector<SweepRow> rows(sw.values.size());

  parallel_for(rows.size(), threads, [&](std::size_t i) {
    const double v = sw.values[i];
    std::vector<PatientParams> types = cfg.types;
    std::optional<double> capacity = cfg.capacity;
    double surcharge = 0.0;
    if (sw.variable == "T") {
      for (auto& p : types) p.T = v;
    } else if (sw.variable == "x") {
      for (auto& p : types) p.x = v;
    } else if (sw.variable == "C") {
      capacity = v;
    } else {
      surcharge = v;
    }
    SweepRow& row = rows[i];
    row.value = v;
    try {
      PointSolution ps;
      if (sw.variable == "Gamma") {
        std::vector<PatientParams> charged;
        for (const auto& p : types) charged.push_back(with_cost_surcharge(p, surcharge));
        ps = solve_point(charged, std::nullopt, cfg.quadratic_costs);
        ps.gamma = surcharge;
      } else {
        ps = solve_point(types, capacity, cfg.quadratic_costs);
      }
      row.a_star = ps.a;
      row.gamma = ps.gamma;
      for (std::size_t k = 0; k < K; ++k) {
        const PatientParams& p = types[k];
        row.call_in_prob.push_back(call_in_prob(derive_coeffs(p).rho, p.x, ps.a[k]));
        const Workloads w = workloads(p, ps.a[k]);
        row.workloads.onsite += w.onsite;
        row.workloads.remote += w.remote;
        row.workloads.total += w.total;
        row.cost += cfg.quadratic_costs ? cost_rate_quadratic(p, ps.a[k]).value : cost_rate(p, ps.a[k]);
      }
    } catch (const InfeasibleError&) {
      row.feasible = false;
      row.a_star.assign(K, kNaN);
      row.call_in_prob.assign(K, kNaN);
      row.workloads = {kNaN, kNaN, kNaN};
      row.cost = kNaN;
      row.gamma = kNaN;
    }
  });
  return rows;
}

int run_command(const std::string& command, const CommandOptions& opts, std::ostream& out,
                std::ostream& err) {
  try {
    const RunConfig cfg = load_config(opts.config);
    if (command == "solve") return cmd_solve(cfg, opts, out);
    if (command == "sweep") return cmd_sweep(cfg, opts, out);
    if (command == "simulate") return cmd_simulate(cfg, opts, out);
    if (command == "estimate") return cmd_estimate(cfg, opts, out);
    err << "error: unknown command '" << command << "'\n";
    return kExitInvalidInput;
  } catch (const InfeasibleError& e) {
    err << "error: " << e.what() << "\n";
    try {
      write_output(opts, out,
                   dump({{"status", "infeasible"}, {"w_min", e.w_min()}, {"capacity", e.capacity()}}));
    } catch (const std::exception&) {
    }
    return kExitInfeasible;
  } catch (const IdentifiabilityError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUnidentifiable;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalidInput;
  }
}

}  // namespace hybridcare
