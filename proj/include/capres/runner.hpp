#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "capres/config.hpp"

namespace capres {

enum ExitCode : int {
  kExitOk = 0,
  kExitChecksFailed = 1,
  kExitUsage = 2,
  kExitNumerical = 3,
};

struct RunOptions {
  std::optional<std::filesystem::path> out;  // overrides output.directory
  std::optional<std::string> format;         // csv or json; overrides output.formats
  std::uint64_t seed = 42;
  int threads = 1;
};

const std::vector<std::string>& subcommands();

/// Executes one subcommand against a validated configuration. Progress goes
/// to `log`, failures to `err`.
int run_subcommand(const std::string& name, const RunConfig& cfg, const RunOptions& opts, std::ostream& log,
                   std::ostream& err);

}  // namespace capres
