#include <iostream>
#include <string>
#include <utility>

#include "CLI11.hpp"
#include "hybridcare/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Call-in thresholds and capacity allocation for hybrid hospital care"};
  app.require_subcommand(1);

  hybridcare::CommandOptions opts;
  std::string config;
  std::string out;
  std::string format;
  std::uint64_t seed = 0;
  unsigned threads = 0;

  const std::pair<const char*, const char*> commands[] = {
      {"solve", "optimal call-in thresholds for the configured types and capacity"},
      {"sweep", "re-solve across a grid of T, C, Gamma or x"},
      {"simulate", "ward simulation comparing the two swap policies"},
      {"estimate", "fit model primitives from an episode CSV"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output file (default: stdout)");
    sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--seed", seed, "random seed, overrides the config");
    sub->add_option("--threads", threads, "worker threads (0 = all cores)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : hybridcare::kExitInvalidInput;
  }

  CLI::App* sub = app.get_subcommands().front();
  opts.config = config;
  if (!out.empty()) opts.out = out;
  if (!format.empty()) opts.format = format;
  if (sub->count("--seed") > 0) opts.seed = seed;
  opts.threads = threads;
  return hybridcare::run_command(sub->get_name(), opts, std::cout, std::cerr);
}
