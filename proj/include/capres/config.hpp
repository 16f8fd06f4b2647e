#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "capres/errors.hpp"
#include "capres/model.hpp"
#include "capres/operators.hpp"
#include "capres/spectra.hpp"

namespace capres {

inline constexpr int kConfigSchema = 1;

/// Window with either a fixed depth c or c = h^cPower (resolved per h).
struct WindowSpec {
  double a = 0.0;
  double b = 0.0;
  std::optional<double> c;
  std::optional<double> cPower;

  SpectralBox at(double h) const;
};

struct AnalysisSettings {
  double C = 1.0;           // eligibility box constant for matching
  double B = 2.0;           // exponential term in the CAP -> resonance width
  double Mexp = 4.0;
  double epsilon0 = 0.1;
  double caseBPower = 10.0;
  double thetaC = 10.0;
  double thetaEps = 0.1;
  int resolventSamples = 20;
  int nodesPerEdge = 64;
};

struct RunConfig {
  int schema = kConfigSchema;
  SemiclassicalModel model;
  CapProfile cap;
  ScalingProfile scaling;
  double gridR = 6.0;
  int gridN = 599;
  std::vector<double> sweep;
  std::vector<WindowSpec> windows;
  std::vector<std::string> checks;
  std::filesystem::path outputDirectory = "out";
  std::vector<std::string> formats{"csv", "json"};
  /// Operator used by the spectrum subcommand: dirichlet, cap or scaled.
  std::string spectrumOperator = "cap";
  AnalysisSettings analysis;
  /// FNV-1a of the canonical (sorted-key) JSON of the document.
  std::string hash;
  std::vector<std::string> warnings;

  /// The sweep, or {model.h} when no sweep is given.
  std::vector<double> h_values() const;
  SemiclassicalModel model_at(double h) const;
  bool wants(std::string_view format) const;
};

struct ConfigDiagnostic {
  int line = 0;  // 1-based, 0 when unknown
  std::string path;
  std::string message;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string source, std::vector<ConfigDiagnostic> diags);
  const std::vector<ConfigDiagnostic>& diagnostics() const noexcept { return diags_; }

 private:
  std::vector<ConfigDiagnostic> diags_;
};

/// Names accepted in "checks".
const std::vector<std::string>& known_checks();
bool is_hard_check(std::string_view name);

RunConfig parse_config(std::string_view text, std::string_view sourceName = "config");
RunConfig load_config(const std::filesystem::path& path);

}  // namespace capres
