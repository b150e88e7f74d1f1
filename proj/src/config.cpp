#include "hybridcare/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>

#include "hybridcare/errors.hpp"

namespace hybridcare {

using nlohmann::json;

namespace {

struct ParamField {
  const char* key;
  double PatientParams::*member;
};

constexpr ParamField kParamFields[] = {
    {"lambda", &PatientParams::lambda},   {"x", &PatientParams::x},
    {"T", &PatientParams::T},             {"theta_R", &PatientParams::theta_R},
    {"theta_H", &PatientParams::theta_H}, {"theta_T", &PatientParams::theta_T},
    {"sigma_R", &PatientParams::sigma_R}, {"sigma_H", &PatientParams::sigma_H},
    {"h_R", &PatientParams::h_R},         {"h_H", &PatientParams::h_H},
    {"h_T", &PatientParams::h_T},         {"S_bar", &PatientParams::S_bar},
};

void require_object(const json& j, const std::string& context) {
  if (!j.is_object()) throw ValidationError(context + ": expected a JSON object");
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& context) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ValidationError(context + ": unknown key '" + key + "'");
    }
  }
}

double number(const json& j, const std::string& context) {
  if (!j.is_number()) throw ValidationError(context + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ValidationError(context + ": must be finite");
  return v;
}

std::optional<double> optional_number(const json& j, const char* key, const std::string& context) {
  if (!j.contains(key)) return std::nullopt;
  return number(j.at(key), context + "." + key);
}

long integer(const json& j, const std::string& context) {
  if (!j.is_number_integer()) throw ValidationError(context + ": expected an integer");
  return j.get<long>();
}

bool boolean(const json& j, const std::string& context) {
  if (!j.is_boolean()) throw ValidationError(context + ": expected true or false");
  return j.get<bool>();
}

std::string string(const json& j, const std::string& context) {
  if (!j.is_string()) throw ValidationError(context + ": expected a string");
  return j.get<std::string>();
}

std::vector<double> number_array(const json& j, const std::string& context) {
  if (!j.is_array()) throw ValidationError(context + ": expected an array of numbers");
  std::vector<double> v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(number(j[i], context + "[" + std::to_string(i) + "]"));
  return v;
}

void check_param_keys(const json& j, const std::string& context, bool allow_name) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    const bool known = std::any_of(std::begin(kParamFields), std::end(kParamFields),
                                   [&](const ParamField& f) { return key == f.key; });
    if (!known && !(allow_name && key == "name")) throw ValidationError(context + ": unknown key '" + key + "'");
  }
}

SweepSpec parse_sweep(const json& j) {
  const std::string ctx = "sweep";
  require_object(j, ctx);
  check_keys(j, {"variable", "start", "stop", "step", "values"}, ctx);
  if (!j.contains("variable")) throw ValidationError("sweep: missing 'variable'");
  SweepSpec s;
  s.variable = string(j.at("variable"), ctx + ".variable");
  if (s.variable != "T" && s.variable != "C" && s.variable != "Gamma" && s.variable != "x") {
    throw ValidationError("sweep.variable must be one of T, C, Gamma, x");
  }
  const bool has_range = j.contains("start") || j.contains("stop") || j.contains("step");
  if (j.contains("values") == has_range) {
    throw ValidationError("sweep: give either 'values' or 'start'/'stop'/'step'");
  }
  if (j.contains("values")) {
    s.values = number_array(j.at("values"), ctx + ".values");
  } else {
    if (!j.contains("start") || !j.contains("stop") || !j.contains("step")) {
      throw ValidationError("sweep: 'start', 'stop' and 'step' are all required");
    }
    const double start = number(j.at("start"), ctx + ".start");
    const double stop = number(j.at("stop"), ctx + ".stop");
    const double step = number(j.at("step"), ctx + ".step");
    if (!(step > 0.0)) throw ValidationError("sweep.step must be > 0");
    if (!(stop >= start)) throw ValidationError("sweep range must be nonempty and increasing");
    const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
    if (count > 10'000'000) throw ValidationError("sweep grid is too large");
    for (long i = 0; i < count; ++i) s.values.push_back(start + static_cast<double>(i) * step);
  }
  if (s.values.empty()) throw ValidationError("sweep range must be nonempty");
  for (std::size_t i = 1; i < s.values.size(); ++i) {
    if (!(s.values[i] > s.values[i - 1])) throw ValidationError("sweep values must be strictly increasing");
  }
  return s;
}

SimulationSpec parse_simulation(const json& j, const std::filesystem::path& base_dir) {
  const std::string ctx = "simulation";
  require_object(j, ctx);
  check_keys(j,
             {"horizon", "warmup_fraction", "dt", "replications", "onsite_slots", "bridge_correction",
              "travel_noise_sigma", "thresholds", "event_log"},
             ctx);
  SimulationSpec s;
  SimConfig& c = s.settings;
  if (auto v = optional_number(j, "horizon", ctx)) c.horizon = *v;
  if (auto v = optional_number(j, "warmup_fraction", ctx)) c.warmup_fraction = *v;
  if (auto v = optional_number(j, "dt", ctx)) c.dt = *v;
  if (auto v = optional_number(j, "travel_noise_sigma", ctx)) c.travel_noise_sigma = *v;
  if (j.contains("replications")) c.replications = static_cast<int>(integer(j.at("replications"), ctx + ".replications"));
  if (j.contains("bridge_correction")) c.bridge_correction = boolean(j.at("bridge_correction"), ctx + ".bridge_correction");
  if (j.contains("onsite_slots")) {
    const json& slots = j.at("onsite_slots");
    if (slots.is_string()) {
      if (slots.get<std::string>() != "unlimited") throw ValidationError("simulation.onsite_slots: expected an integer or \"unlimited\"");
      c.unlimited_slots = true;
    } else {
      c.onsite_slots = integer(slots, ctx + ".onsite_slots");
    }
  }
  if (j.contains("thresholds")) s.thresholds = number_array(j.at("thresholds"), ctx + ".thresholds");
  if (j.contains("event_log")) s.event_log = base_dir / string(j.at("event_log"), ctx + ".event_log");
  return s;
}

EstimationSpec parse_estimation(const json& j, const std::filesystem::path& base_dir) {
  const std::string ctx = "estimation";
  require_object(j, ctx);
  check_keys(j, {"data", "bootstrap_resamples", "confidence_level", "types"}, ctx);
  if (!j.contains("data")) throw ValidationError("estimation: missing 'data'");
  EstimationSpec s;
  s.data = base_dir / string(j.at("data"), ctx + ".data");
  if (j.contains("bootstrap_resamples")) {
    s.bootstrap.resamples = static_cast<int>(integer(j.at("bootstrap_resamples"), ctx + ".bootstrap_resamples"));
  }
  if (auto v = optional_number(j, "confidence_level", ctx)) s.bootstrap.level = *v;
  if (j.contains("types")) {
    const json& arr = j.at("types");
    if (!arr.is_array()) throw ValidationError("estimation.types: expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string tctx = ctx + ".types[" + std::to_string(i) + "]";
      require_object(arr[i], tctx);
      check_keys(arr[i], {"type", "x", "a", "onsite_start"}, tctx);
      if (!arr[i].contains("type")) throw ValidationError(tctx + ": missing 'type'");
      EstimationTypeSpec t;
      t.type = static_cast<int>(integer(arr[i].at("type"), tctx + ".type"));
      t.x = optional_number(arr[i], "x", tctx);
      t.a = optional_number(arr[i], "a", tctx);
      t.onsite_start = optional_number(arr[i], "onsite_start", tctx);
      s.types.push_back(t);
    }
  }
  return s;
}

}  // namespace

PatientParams parse_patient(const json& j, const std::string& context) {
  require_object(j, context);
  check_param_keys(j, context, true);
  PatientParams p;
  for (const ParamField& f : kParamFields) {
    if (!j.contains(f.key)) throw ValidationError(context + ": missing '" + f.key + "'");
    p.*f.member = number(j.at(f.key), context + "." + f.key);
  }
  try {
    validate(p);
  } catch (const ValidationError& e) {
    throw ValidationError(context + ": " + e.what());
  }
  return p;
}

json to_json(const PatientParams& p) {
  json j = json::object();
  for (const ParamField& f : kParamFields) j[f.key] = p.*f.member;
  return j;
}

RunConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  require_object(j, "config");
  check_keys(j,
             {"description", "defaults", "types", "capacity", "cost_model", "sweep", "simulation", "estimation",
              "seed"},
             "config");
  RunConfig cfg;
  if (j.contains("description")) cfg.description = string(j.at("description"), "description");

  json defaults = json::object();
  if (j.contains("defaults")) {
    defaults = j.at("defaults");
    require_object(defaults, "defaults");
    check_param_keys(defaults, "defaults", false);
  }
  if (j.contains("types")) {
    const json& arr = j.at("types");
    if (!arr.is_array() || arr.empty()) throw ValidationError("types: expected a nonempty array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string ctx = "types[" + std::to_string(i) + "]";
      require_object(arr[i], ctx);
      json merged = defaults;
      merged.update(arr[i]);
      cfg.types.push_back(parse_patient(merged, ctx));
      cfg.names.push_back(arr[i].contains("name") ? string(arr[i].at("name"), ctx + ".name")
                                                  : "type" + std::to_string(i + 1));
    }
  }
  if (auto c = optional_number(j, "capacity", "config")) {
    if (!(*c > 0.0)) throw ValidationError("capacity must be > 0");
    cfg.capacity = *c;
  }
  if (j.contains("cost_model")) {
    const std::string m = string(j.at("cost_model"), "cost_model");
    if (m != "linear" && m != "quadratic") throw ValidationError("cost_model must be 'linear' or 'quadratic'");
    cfg.quadratic_costs = m == "quadratic";
  }
  if (j.contains("sweep")) cfg.sweep = parse_sweep(j.at("sweep"));
  if (j.contains("simulation")) cfg.simulation = parse_simulation(j.at("simulation"), base_dir);
  if (j.contains("estimation")) cfg.estimation = parse_estimation(j.at("estimation"), base_dir);
  if (j.contains("seed")) {
    const long s = integer(j.at("seed"), "seed");
    if (s < 0) throw ValidationError("seed must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(s);
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config parse error: " + std::string(e.what()));
  }
  return parse_config(j, path.parent_path());
}

}  // namespace hybridcare
