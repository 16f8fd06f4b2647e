#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "capres/config.hpp"
#include "capres/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"capres: resonances by absorbing potentials, complex scaling and an exact oracle"};
  app.require_subcommand(1, 1);

  std::string configPath;
  std::string outDir;
  std::string format;
  std::uint64_t seed = 42;
  int threads = 1;

  const std::pair<const char*, const char*> commands[] = {
      {"spectrum", "Spectrum of one operator per h"},
      {"oracle", "Transfer-matrix resonance search in every window"},
      {"compare", "Matching boxes and counting sandwich against the oracle"},
      {"sweep", "Spectra and oracle roots over the h sweep"},
      {"report", "Merge the JSON outputs of a run directory"},
      {"run", "Execute the configured checks; exit 0 iff every hard check passes"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", configPath, "Configuration file (JSON)")->required();
    sub->add_option("--out", outDir, "Output directory (overrides output.directory)");
    sub->add_option("--format", format, "csv or json (overrides output.formats)")
        ->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--seed", seed, "Seed for sampled points")->capture_default_str();
    sub->add_option("--threads", threads, "Worker threads across the h sweep")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return capres::kExitUsage;
  }

  capres::RunConfig cfg;
  try {
    cfg = capres::load_config(configPath);
  } catch (const capres::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return capres::kExitUsage;
  }

  capres::RunOptions opts;
  if (!outDir.empty()) opts.out = outDir;
  if (!format.empty()) opts.format = format;
  opts.seed = seed;
  opts.threads = threads;
  return capres::run_subcommand(app.get_subcommands().front()->get_name(), cfg, opts, std::cout, std::cerr);
}
