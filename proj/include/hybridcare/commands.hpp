#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hybridcare/config.hpp"
#include "hybridcare/multitype.hpp"

namespace hybridcare {

enum ExitCode : int {
  kExitOk = 0,
  kExitInvalidInput = 1,
  kExitInfeasible = 2,
  kExitUnidentifiable = 3,
};

struct CommandOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;  ///< defaults to the `out` stream
  std::optional<std::string> format;         ///< "csv" or "json"; per-command default
  std::optional<std::uint64_t> seed;         ///< overrides the config seed
  unsigned threads = 0;
};

/// Runs `solve`, `sweep`, `simulate` or `estimate`. Diagnostics go to `err`;
/// the return value is one of ExitCode.
int run_command(const std::string& command, const CommandOptions& opts, std::ostream& out,
                std::ostream& err);

/// One evaluated point of a sweep. Fields are NaN when the point is infeasible.
struct SweepRow {
  double value = 0.0;
  std::vector<double> a_star;
  std::vector<double> call_in_prob;
  Workloads workloads;
  double cost = 0.0;
  double gamma = 0.0;
  bool feasible = true;
};

std::vector<SweepRow> run_sweep(const RunConfig& cfg, unsigned threads = 0);
std::string sweep_csv_header(const std::string& variable, std::size_t types);
void write_sweep_csv(std::ostream& os, const std::string& variable, std::size_t types,
                     const std::vector<SweepRow>& rows);

/// v with 10 significant digits in the classic locale; "nan" and "inf" spelled out.
std::string format_number(double v);

}  // namespace hybridcare
