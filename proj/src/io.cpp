#include "capres/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <ostream>
#include <set>

namespace capres {
namespace {

void reject_unknown(const Json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw FieldError(path, "expected an object");
  std::set<std::string> known(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw FieldError(path + "." + k, "unknown key");
  }
}

double get_number(const Json& j, const std::string& path, const char* key, double fallback, bool required) {
  const auto it = j.find(key);
  if (it == j.end()) {
    if (required) throw FieldError(path + "." + key, "missing required key");
    return fallback;
  }
  if (!it->is_number()) throw FieldError(path + "." + key, "expected a number");
  return it->get<double>();
}

int get_int(const Json& j, const std::string& path, const char* key, int fallback) {
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number_integer()) throw FieldError(path + "." + key, "expected an integer");
  return it->get<int>();
}

std::vector<double> get_numbers(const Json& j, const std::string& path, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw FieldError(path + "." + key, "missing required key");
  if (!it->is_array()) throw FieldError(path + "." + key, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& v : *it) {
    if (!v.is_number()) throw FieldError(path + "." + key, "expected an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::string_view shape_name(ScalingShape s) {
  switch (s) {
    case ScalingShape::smoothStep: return "smoothStep";
    case ScalingShape::exponentialK: return "exponentialK";
    case ScalingShape::uniform: return "uniform";
  }
  return "smoothStep";
}

}  // namespace

Json to_json(const SemiclassicalModel& m) {
  const auto bp = m.potential.breakpoints();
  const auto vals = m.potential.values();
  return Json{{"h", m.h},
              {"breakpoints", std::vector<double>(bp.begin(), bp.end())},
              {"values", std::vector<double>(vals.begin(), vals.end())},
              {"R0", m.R0},
              {"R0prime", m.R0prime},
              {"a0", m.a0},
              {"b0", m.b0},
              {"nsharp", m.nsharp}};
}

SemiclassicalModel model_from_json(const Json& j, const std::string& path) {
  reject_unknown(j, path, {"h", "breakpoints", "values", "R0", "R0prime", "a0", "b0", "nsharp"});
  SemiclassicalModel m;
  m.h = get_number(j, path, "h", 0.0, true);
  try {
    m.potential = PiecewisePotential(get_numbers(j, path, "breakpoints"), get_numbers(j, path, "values"));
  } catch (const FieldError&) {
    throw;
  } catch (const Error& e) {
    throw FieldError(path + ".breakpoints", e.what());
  }
  m.R0 = get_number(j, path, "R0", 0.0, true);
  m.R0prime = get_number(j, path, "R0prime", 0.0, true);
  m.a0 = get_number(j, path, "a0", 0.0, true);
  m.b0 = get_number(j, path, "b0", 0.0, true);
  m.nsharp = get_int(j, path, "nsharp", 1);
  return m;
}

Json to_json(const CapProfile& c) {
  return Json{{"R1", c.R1},         {"R2", c.R2},
              {"delta0", c.delta0}, {"power", c.power},
              {"strength", c.strength}, {"imagScale", c.imagScale},
              {"imagConstC", c.imagConstC}};
}

CapProfile cap_from_json(const Json& j, const std::string& path) {
  reject_unknown(j, path, {"R1", "R2", "delta0", "power", "strength", "imagScale", "imagConstC"});
  CapProfile c;
  c.R1 = get_number(j, path, "R1", c.R1, true);
  c.R2 = get_number(j, path, "R2", c.R2, true);
  c.delta0 = get_number(j, path, "delta0", c.delta0, false);
  c.power = get_int(j, path, "power", c.power);
  c.strength = get_number(j, path, "strength", c.strength, false);
  c.imagScale = get_number(j, path, "imagScale", c.imagScale, false);
  c.imagConstC = get_number(j, path, "imagConstC", c.imagConstC, false);
  return c;
}

Json to_json(const ScalingProfile& s) {
  return Json{{"B", s.B},
              {"delta", s.delta},
              {"theta0", s.theta0},
              {"k", s.k},
              {"shape", std::string(shape_name(s.shape))}};
}

ScalingProfile scaling_from_json(const Json& j, const std::string& path) {
  reject_unknown(j, path, {"B", "delta", "theta0", "k", "shape"});
  ScalingProfile s;
  s.B = get_number(j, path, "B", s.B, true);
  s.delta = get_number(j, path, "delta", s.delta, false);
  s.theta0 = get_number(j, path, "theta0", s.theta0, true);
  s.k = get_number(j, path, "k", s.k, false);
  if (const auto it = j.find("shape"); it != j.end()) {
    if (!it->is_string()) throw FieldError(path + ".shape", "expected a string");
    const auto name = it->get<std::string>();
    if (name == "smoothStep") {
      s.shape = ScalingShape::smoothStep;
    } else if (name == "exponentialK") {
      s.shape = ScalingShape::exponentialK;
    } else if (name == "uniform") {
      s.shape = ScalingShape::uniform;
    } else {
      throw FieldError(path + ".shape", "unknown shape '" + name + "'");
    }
  }
  return s;
}

Json to_json(const SpectralBox& b) { return Json{{"a", b.a}, {"b", b.b}, {"c", b.c}}; }

// ---------------------------------------------------------------------------

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

void write_spectrum_csv(std::ostream& os, const Spectrum& s, std::string_view configHash) {
  os << "# config " << configHash << '\n';
  os << "re,im,residual,method,h\n";
  const std::string method(to_string(s.method));
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double r = i < s.residuals.size() ? s.residuals[i] : 0.0;
    os << format_double(s.eigenvalues[i].real()) << ',' << format_double(s.eigenvalues[i].imag()) << ','
       << format_double(r) << ',' << method << ',' << format_double(s.h) << '\n';
  }
}

Json spectrum_to_json(const Spectrum& s, std::string_view configHash) {
  Json pts = Json::array();
  for (std::size_t i = 0; i < s.size(); ++i) {
    Json p{{"re", s.eigenvalues[i].real()}, {"im", s.eigenvalues[i].imag()}};
    if (i < s.residuals.size()) p["residual"] = s.residuals[i];
    if (i < s.multiplicity.size()) p["multiplicity"] = s.multiplicity[i];
    if (i < s.defective.size() && s.defective[i]) p["defective"] = true;
    pts.push_back(std::move(p));
  }
  return Json{{"configHash", configHash},
              {"method", std::string(to_string(s.method))},
              {"h", s.h},
              {"valid", s.valid},
              {"eigenvalues", std::move(pts)}};
}

void write_oracle_csv(std::ostream& os, const std::vector<OracleResonance>& roots, double h,
                      std::string_view configHash) {
  os << "# config " << configHash << '\n';
  os << "re,im,residual,method,h,determinantResidual,multiplicity\n";
  for (const auto& r : roots) {
    const double rel = r.localScale > 0.0 ? r.determinantResidual / r.localScale : r.determinantResidual;
    os << format_double(r.z.real()) << ',' << format_double(r.z.imag()) << ',' << format_double(rel)
       << ",oracle," << format_double(h) << ',' << format_double(r.determinantResidual) << ','
       << r.multiplicity << '\n';
  }
}

Json oracle_to_json(const std::vector<OracleResonance>& roots) {
  Json out = Json::array();
  for (const auto& r : roots) {
    out.push_back(Json{{"re", r.z.real()},
                       {"im", r.z.imag()},
                       {"determinantResidual", r.determinantResidual},
                       {"localScale", r.localScale},
                       {"windingVerified", r.windingVerified},
                       {"multiplicity", r.multiplicity},
                       {"degenerate", r.degenerate},
                       {"iterations", r.iterations}});
  }
  return out;
}

Json report_to_json(const ComparisonReport& r) {
  Json pairs = Json::array();
  for (const auto& p : r.pairs) {
    pairs.push_back(Json{{"source", {p.source.real(), p.source.imag()}},
                         {"target", {p.target.real(), p.target.imag()}},
                         {"distance", p.distance},
                         {"width", p.width},
                         {"boxSatisfied", p.boxSatisfied}});
  }
  Json params = Json::object();
  for (const auto& [k, v] : r.parameters) params[k] = v;
  return Json{{"direction", std::string(to_string(r.direction))},
              {"fittedC1", r.fittedC1},
              {"fittedC2", r.fittedC2},
              {"parameters", std::move(params)},
              {"flags", r.flags},
              {"skipped", r.skipped},
              {"pairs", std::move(pairs)}};
}

void write_report_csv(std::ostream& os, const std::vector<ComparisonReport>& reports,
                      std::string_view configHash) {
  os << "# config " << configHash << '\n';
  os << "direction,h,source_re,source_im,target_re,target_im,distance,width,box_satisfied\n";
  for (const auto& r : reports) {
    const auto it = r.parameters.find("h");
    const double h = it == r.parameters.end() ? 0.0 : it->second;
    for (const auto& p : r.pairs) {
      os << to_string(r.direction) << ',' << format_double(h) << ',' << format_double(p.source.real()) << ','
         << format_double(p.source.imag()) << ',' << format_double(p.target.real()) << ','
         << format_double(p.target.imag()) << ',' << format_double(p.distance) << ','
         << format_double(p.width) << ',' << (p.boxSatisfied ? 1 : 0) << '\n';
    }
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorKind::invalidArgument, "cannot open " + tmp.string() + " for writing");
    f << contents;
    f.flush();
    if (!f) throw Error(ErrorKind::invalidArgument, "write to " + tmp.string() + " failed");
  }
  fs::rename(tmp, path);
}

}  // namespace capres
