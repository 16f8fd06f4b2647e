#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "capres/analysis.hpp"
#include "capres/errors.hpp"
#include "capres/model.hpp"
#include "capres/operators.hpp"
#include "capres/oracle.hpp"
#include "capres/spectra.hpp"

namespace capres {

using Json = nlohmann::json;

/// Error tied to a location in a JSON document, e.g. "model.a0".
class FieldError : public Error {
 public:
  FieldError(std::string path, const std::string& message)
      : Error(ErrorKind::invalidConfiguration, path + ": " + message), path_(std::move(path)), message_(message) {}

  const std::string& path() const noexcept { return path_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::string path_;
  std::string message_;
};

// Documents. Readers reject unknown keys and wrongly typed values.
Json to_json(const SemiclassicalModel& m);
SemiclassicalModel model_from_json(const Json& j, const std::string& path = "model");
Json to_json(const CapProfile& c);
CapProfile cap_from_json(const Json& j, const std::string& path = "cap");
Json to_json(const ScalingProfile& s);
ScalingProfile scaling_from_json(const Json& j, const std::string& path = "scaling");
Json to_json(const SpectralBox& b);

/// %.17g
std::string format_double(double x);

/// FNV-1a 64-bit, 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

/// Columns re,im,residual,method,h after a "# config <hash>" line.
void write_spectrum_csv(std::ostream& os, const Spectrum& s, std::string_view configHash);
Json spectrum_to_json(const Spectrum& s, std::string_view configHash);

/// Spectrum columns plus determinantResidual,multiplicity; residual is the
/// determinant residual relative to the local scale.
void write_oracle_csv(std::ostream& os, const std::vector<OracleResonance>& roots, double h,
                      std::string_view configHash);
Json oracle_to_json(const std::vector<OracleResonance>& roots);

Json report_to_json(const ComparisonReport& r);
/// One row per matched pair: direction,h,source_re,source_im,target_re,target_im,distance,width,box_satisfied.
void write_report_csv(std::ostream& os, const std::vector<ComparisonReport>& reports, std::string_view configHash);

/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace capres
