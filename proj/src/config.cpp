#include "capres/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "capres/io.hpp"

namespace capres {
namespace {

std::string render(const std::string& source, const std::vector<ConfigDiagnostic>& diags) {
  std::ostringstream os;
  for (std::size_t i = 0; i < diags.size(); ++i) {
    if (i) os << '\n';
    os << source << ':';
    if (diags[i].line > 0) os << diags[i].line << ':';
    os << ' ';
    if (!diags[i].path.empty()) os << diags[i].path << ": ";
    os << diags[i].message;
  }
  return os.str();
}

int line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

// Line of the last component of a dotted path such as "model.a0" or
// "windows[1].c", found by scanning for each quoted key in order.
int locate(std::string_view text, const std::string& path) {
  std::size_t pos = 0;
  std::size_t found = std::string_view::npos;
  std::string part;
  std::istringstream is(path);
  while (std::getline(is, part, '.')) {
    const auto bracket = part.find('[');
    const std::string key = part.substr(0, bracket);
    if (key.empty()) continue;
    const auto at = text.find('"' + key + '"', pos);
    if (at == std::string_view::npos) break;
    found = at;
    pos = at + key.size() + 2;
    if (bracket != std::string::npos) {
      // Skip to the indexed element by counting opening braces in the array.
      const int index = std::stoi(part.substr(bracket + 1));
      for (int k = 0; k <= index; ++k) {
        const auto brace = text.find('{', pos);
        if (brace == std::string_view::npos) break;
        pos = brace + 1;
        found = brace;
      }
    }
  }
  return found == std::string_view::npos ? 0 : line_of_offset(text, found);
}

struct Collector {
  std::string_view text;
  std::vector<ConfigDiagnostic> diags;

  void add(const std::string& path, const std::string& message) {
    diags.push_back({locate(text, path), path, message});
  }
};

const Json& require(const Json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw FieldError(key, "missing required key");
  return *it;
}

}  // namespace

ConfigError::ConfigError(std::string source, std::vector<ConfigDiagnostic> diags)
    : Error(ErrorKind::invalidConfiguration, render(source, diags)), diags_(std::move(diags)) {}

SpectralBox WindowSpec::at(double h) const {
  return {a, b, c ? *c : std::pow(h, cPower.value_or(1.0))};
}

std::vector<double> RunConfig::h_values() const { return sweep.empty() ? std::vector<double>{model.h} : sweep; }

SemiclassicalModel RunConfig::model_at(double h) const {
  SemiclassicalModel m = model;
  m.h = h;
  return m;
}

bool RunConfig::wants(std::string_view format) const {
  return std::find(formats.begin(), formats.end(), format) != formats.end();
}

const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> names{
      "absorption_identity", "resolvent_bound", "oracle_consistency", "theta_inequality",
      "theorem1",            "theorem2",        "quasimode",
  };
  return names;
}

bool is_hard_check(std::string_view name) {
  return name == "absorption_identity" || name == "resolvent_bound" || name == "oracle_consistency" ||
         name == "theta_inequality" || name == "theorem2";
}

RunConfig parse_config(std::string_view text, std::string_view sourceName) {
  const std::string source(sourceName);
  Json doc;
  try {
    doc = Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw ConfigError(source, {{line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0), "", e.what()}});
  }

  Collector col{text, {}};
  RunConfig cfg;
  try {
    if (!doc.is_object()) throw FieldError("", "configuration must be a JSON object");
    static const std::set<std::string> topKeys{"schema", "model",  "cap",    "scaling", "grid",
                                               "sweep",  "windows", "checks", "output",  "spectrumOperator",
                                               "analysis"};
    for (const auto& [k, v] : doc.items()) {
      if (!topKeys.count(k)) col.add(k, "unknown key");
    }
    if (!col.diags.empty()) throw ConfigError(source, col.diags);

    const Json& schema = require(doc, "schema");
    if (!schema.is_number_integer() || schema.get<int>() != kConfigSchema) {
      throw FieldError("schema", "unsupported schema version (expected " + std::to_string(kConfigSchema) + ")");
    }
    cfg.model = model_from_json(require(doc, "model"));
    cfg.cap = cap_from_json(require(doc, "cap"));
    cfg.scaling = scaling_from_json(require(doc, "scaling"));

    const Json& grid = require(doc, "grid");
    if (!grid.is_object()) throw FieldError("grid", "expected an object");
    for (const auto& [k, v] : grid.items()) {
      if (k != "R" && k != "N") throw FieldError("grid." + k, "unknown key");
    }
    if (!grid.contains("R") || !grid["R"].is_number()) throw FieldError("grid.R", "expected a number");
    if (!grid.contains("N") || !grid["N"].is_number_integer()) throw FieldError("grid.N", "expected an integer");
    cfg.gridR = grid["R"].get<double>();
    cfg.gridN = grid["N"].get<int>();

    if (doc.contains("sweep")) {
      const Json& sw = doc["sweep"];
      if (!sw.is_array()) throw FieldError("sweep", "expected an array of h values");
      for (const auto& v : sw) {
        if (!v.is_number()) throw FieldError("sweep", "expected an array of h values");
        cfg.sweep.push_back(v.get<double>());
      }
    }

    const Json& windows = require(doc, "windows");
    if (!windows.is_array()) throw FieldError("windows", "expected an array");
    for (std::size_t i = 0; i < windows.size(); ++i) {
      const std::string p = "windows[" + std::to_string(i) + "]";
      const Json& w = windows[i];
      if (!w.is_object()) throw FieldError(p, "expected an object");
      WindowSpec ws;
      for (const auto& [k, v] : w.items()) {
        if (k != "a" && k != "b" && k != "c" && k != "cPower") throw FieldError(p + "." + k, "unknown key");
        if (!v.is_number()) throw FieldError(p + "." + k, "expected a number");
      }
      if (!w.contains("a") || !w.contains("b")) throw FieldError(p, "window needs a and b");
      ws.a = w["a"].get<double>();
      ws.b = w["b"].get<double>();
      if (w.contains("c")) ws.c = w["c"].get<double>();
      if (w.contains("cPower")) ws.cPower = w["cPower"].get<double>();
      if (ws.c.has_value() == ws.cPower.has_value()) throw FieldError(p, "give exactly one of c and cPower");
      cfg.windows.push_back(ws);
    }

    if (doc.contains("checks")) {
      const Json& checks = doc["checks"];
      if (!checks.is_array()) throw FieldError("checks", "expected an array of names");
      for (const auto& v : checks) {
        if (!v.is_string()) throw FieldError("checks", "expected an array of names");
        cfg.checks.push_back(v.get<std::string>());
      }
    }

    if (doc.contains("output")) {
      const Json& out = doc["output"];
      if (!out.is_object()) throw FieldError("output", "expected an object");
      for (const auto& [k, v] : out.items()) {
        if (k != "directory" && k != "formats") throw FieldError("output." + k, "unknown key");
      }
      if (out.contains("directory")) {
        if (!out["directory"].is_string()) throw FieldError("output.directory", "expected a string");
        cfg.outputDirectory = out["directory"].get<std::string>();
      }
      if (out.contains("formats")) {
        if (!out["formats"].is_array()) throw FieldError("output.formats", "expected an array");
        cfg.formats.clear();
        for (const auto& v : out["formats"]) {
          if (!v.is_string()) throw FieldError("output.formats", "expected strings");
          cfg.formats.push_back(v.get<std::string>());
        }
      }
    }

    if (doc.contains("spectrumOperator")) {
      if (!doc["spectrumOperator"].is_string()) throw FieldError("spectrumOperator", "expected a string");
      cfg.spectrumOperator = doc["spectrumOperator"].get<std::string>();
    }

    if (doc.contains("analysis")) {
      const Json& an = doc["analysis"];
      if (!an.is_object()) throw FieldError("analysis", "expected an object");
      AnalysisSettings& s = cfg.analysis;
      const std::pair<const char*, double*> reals[] = {
          {"C", &s.C},           {"B", &s.B},         {"Mexp", &s.Mexp},         {"epsilon0", &s.epsilon0},
          {"caseBPower", &s.caseBPower}, {"thetaC", &s.thetaC}, {"thetaEps", &s.thetaEps}};
      const std::pair<const char*, int*> ints[] = {{"resolventSamples", &s.resolventSamples},
                                                   {"nodesPerEdge", &s.nodesPerEdge}};
      for (const auto& [k, v] : an.items()) {
        bool matched = false;
        for (const auto& [name, ptr] : reals) {
          if (k == name) {
            if (!v.is_number()) throw FieldError("analysis." + k, "expected a number");
            *ptr = v.get<double>();
            matched = true;
          }
        }
        for (const auto& [name, ptr] : ints) {
          if (k == name) {
            if (!v.is_number_integer()) throw FieldError("analysis." + k, "expected an integer");
            *ptr = v.get<int>();
            matched = true;
          }
        }
        if (!matched) throw FieldError("analysis." + k, "unknown key");
      }
    }
  } catch (const FieldError& e) {
    col.add(e.path(), e.message());
    throw ConfigError(source, col.diags);
  }

  // Semantic validation; collects everything before failing.
  for (const auto& v : validate_model(cfg.model).violations) {
    static const std::pair<const char*, const char*> anchors[] = {
        {"0 < a0", "a0"},     {"a0 < b0", "b0"},    {"h > 0", "h"},           {"R0 must", "R0"},
        {"R0 <= R0'", "R0prime"}, {"nsharp", "nsharp"}, {"support", "breakpoints"}};
    std::string path = "model";
    for (const auto& [needle, key] : anchors) {
      if (v.find(needle) != std::string::npos) {
        path += std::string(".") + key;
        break;
      }
    }
    col.add(path, v);
  }
  if (!(cfg.gridR > cfg.model.R0prime)) col.add("grid.R", "grid half-width must exceed R0prime");
  if (cfg.gridN < 3) col.add("grid.N", "grid needs at least 3 interior nodes");
  if (!(cfg.gridR > cfg.cap.R2)) col.add("grid.R", "grid half-width must exceed the absorber radius R2");
  if (cfg.spectrumOperator == "scaled" && cfg.scaling.shape != ScalingShape::uniform) {
    if (!(cfg.scaling.B > cfg.model.R0prime)) col.add("scaling.B", "scaling must start in the free region (B > R0prime)");
    if (!(cfg.gridR > cfg.scaling.B + cfg.scaling.delta)) col.add("grid.R", "grid must contain the scaling ramp (R > B + delta)");
  }
  {
    std::set<double> seen;
    for (double h : cfg.sweep) {
      if (!(h > 0.0 && h < 1.0)) col.add("sweep", "sweep values must lie in (0, 1)");
      if (!seen.insert(h).second) col.add("sweep", "sweep values must be distinct");
    }
  }
  for (std::size_t i = 0; i < cfg.windows.size(); ++i) {
    const auto& w = cfg.windows[i];
    const std::string p = "windows[" + std::to_string(i) + "]";
    if (!(w.a < w.b)) col.add(p + ".a", "window must satisfy a < b");
    if (w.c && !(*w.c > 0.0)) col.add(p + ".c", "window depth must be positive");
    if (w.cPower && !(*w.cPower > 0.0)) col.add(p + ".cPower", "window depth exponent must be positive");
  }
  for (const auto& name : cfg.checks) {
    if (std::find(known_checks().begin(), known_checks().end(), name) == known_checks().end()) {
      col.add("checks", "unknown check '" + name + "'");
    }
  }
  for (const auto& f : cfg.formats) {
    if (f != "csv" && f != "json") col.add("output.formats", "format must be csv or json, got '" + f + "'");
  }
  if (cfg.spectrumOperator != "dirichlet" && cfg.spectrumOperator != "cap" && cfg.spectrumOperator != "scaled") {
    col.add("spectrumOperator", "must be dirichlet, cap or scaled");
  }
  if (cfg.analysis.resolventSamples < 1) col.add("analysis.resolventSamples", "must be positive");
  if (cfg.analysis.nodesPerEdge < 1) col.add("analysis.nodesPerEdge", "must be positive");
  if (!col.diags.empty()) throw ConfigError(source, col.diags);

  // An inadmissible absorber is still computable; the checks report on it.
  const auto capVerdict = validate_cap(cfg.cap, cfg.model);
  for (const auto& v : capVerdict.violations) cfg.warnings.push_back("cap: " + v);

  cfg.hash = fnv1a_hex(doc.dump());
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError(path.string(), {{0, "", "cannot read configuration file"}});
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path.string());
}

}  // namespace capres
