#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hybridcare/estimation.hpp"
#include "hybridcare/params.hpp"
#include "hybridcare/simulator.hpp"
#include "json.hpp"

namespace hybridcare {

struct SweepSpec {
  std::string variable;  ///< "T", "C", "Gamma" or "x"
  std::vector<double> values;
};

struct SimulationSpec {
  SimConfig settings;  ///< instance and thresholds are filled in by the command
  std::optional<std::vector<double>> thresholds;
  std::optional<std::filesystem::path> event_log;
};

struct EstimationTypeSpec {
  int type = 1;
  std::optional<double> x;             ///< remote start score
  std::optional<double> a;             ///< remote call-in threshold
  std::optional<double> onsite_start;  ///< on-site start score
};

struct EstimationSpec {
  std::filesystem::path data;
  BootstrapOptions bootstrap;
  std::vector<EstimationTypeSpec> types;
};

/// Parsed run configuration. Unknown keys anywhere are rejected.
struct RunConfig {
  std::string description;
  std::vector<std::string> names;
  std::vector<PatientParams> types;
  std::optional<double> capacity;
  bool quadratic_costs = false;
  std::optional<SweepSpec> sweep;
  std::optional<SimulationSpec> simulation;
  std::optional<EstimationSpec> estimation;
  std::optional<std::uint64_t> seed;
};

/// Relative paths inside the config resolve against `base_dir`.
RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

PatientParams parse_patient(const nlohmann::json& j, const std::string& context);
nlohmann::json to_json(const PatientParams& p);

}  // namespace hybridcare
