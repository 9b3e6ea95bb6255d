#ifndef QCAL_PROTOCOLS_H_
#define QCAL_PROTOCOLS_H_

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "qcal/array_set.h"
#include "qcal/device.h"
#include "qcal/json_io.h"
#include "qcal/platform.h"
#include "qcal/plot.h"

namespace qcal {

enum class FitQuality { kGood, kPoor, kFailed };
std::string to_string(FitQuality quality);
FitQuality fit_quality_from_string(const std::string& text);

enum class TargetKind { kQubit, kPair };

struct FitDiagnostics {
  bool converged = false;
  double cost = 0.0;
  int iterations = 0;
  std::string diagnostic;
};

// Shallow per-target outcome of a fit.
struct TargetResult {
  FitQuality quality = FitQuality::kFailed;
  std::map<std::string, double> values;
  std::map<std::string, std::vector<double>> vectors;
  std::vector<std::string> flags;
  std::string message;
  FitDiagnostics fit;
  // Proposed config values keyed by field path relative to the target ("drive_frequency_hz",
  // "virtual_phase_rad.q0"). Empty when the protocol declines to update.
  json updates = json::object();

  bool has_flag(const std::string& flag) const;
  json to_json() const;
  static TargetResult from_json(const json& doc);
};

struct Results {
  std::string protocol;
  std::map<std::string, TargetResult> targets;

  json to_json() const;
  static Results from_json(const json& doc);
};

// Raw acquisition output. Each target's ArraySet carries the config values the acquisition
// used in its metadata, so fitting never needs the platform.
struct Data {
  std::string protocol;
  json parameters = json::object();  // resolved parameters (defaults filled in)
  std::map<std::string, ArraySet> targets;
  std::string timestamp;  // kept out of data.json so re-acquisition is byte-stable

  json to_json() const;
  static Data from_json(const json& doc);
};

// Parameter map with defaults filled in and typed accessors.
class Params {
 public:
  Params() = default;
  explicit Params(json values) : values_(std::move(values)) {}

  double number(const std::string& key) const;
  int integer(const std::string& key) const;
  std::string text(const std::string& key) const;
  std::vector<double> numbers(const std::string& key) const;
  bool has(const std::string& key) const { return values_.contains(key) && !values_.at(key).is_null(); }
  const json& values() const { return values_; }

 private:
  json values_ = json::object();
};

// A calibration protocol: acquisition, fit, update and report pieces.
struct Routine {
  std::string name;
  std::string title;
  TargetKind target_kind = TargetKind::kQubit;
  json defaults = json::object();
  // Fields this protocol may update, relative to the target. A trailing ".*" matches any key.
  std::vector<std::string> owned_fields;

  std::function<ArraySet(const PlatformConfig&, const std::string& target, const Params&, Device&)> acquire_target;
  std::function<TargetResult(const ArraySet&, const Params&)> fit_target;
  std::function<std::vector<Figure>(const std::string& target, const ArraySet&, const TargetResult*)> figures;
  // Optional raw XHTML appended to the report section.
  std::function<std::string(const std::string& target, const ArraySet&, const TargetResult&)> custom_html;

  // Defaults overlaid with `overrides`; unknown keys raise ValidationError("parameters.<key>").
  Params resolve(const json& overrides) const;

  Data acquire(const PlatformConfig& config, const std::vector<std::string>& targets, const json& params,
               Device& device) const;
  // Pure function of the Data. Exceptions and non-finite data become fit_quality=failed.
  Results fit(const Data& data) const;
  // Absolute field updates for every target whose fit did not fail.
  std::vector<FieldUpdate> update(const Results& results, const PlatformConfig& config) const;
  bool owns(const std::string& relative_field) const;
  std::string field_prefix(const std::string& target) const;
};

const std::vector<Routine>& routines();
// Throws ValidationError listing the nearest registered names when unknown.
const Routine& find_routine(const std::string& name);
std::vector<std::string> routine_names();

// Checks that targets exist in the config for the routine's target kind.
void check_targets(const Routine& routine, const PlatformConfig& config, const std::vector<std::string>& targets);
// All qubits or all pairs of the config, depending on the routine.
std::vector<std::string> default_targets(const Routine& routine, const PlatformConfig& config);

}  // namespace qcal

#endif  // QCAL_PROTOCOLS_H_
