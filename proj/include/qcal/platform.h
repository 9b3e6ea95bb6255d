#ifndef QCAL_PLATFORM_H_
#define QCAL_PLATFORM_H_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qcal/json_io.h"

namespace qcal {

using QubitId = std::string;

// Significant digits used for platform.json / truth.json numbers.
inline constexpr int kPlatformDigits = 12;

struct ClassifierParams {
  double angle_rad = 0.0;  // rotation applied to the IQ plane, (-pi, pi]
  double threshold = 0.0;  // decision boundary on the rotated I axis
  double assignment_fidelity = 0.5;
};

struct QubitCalibration {
  double readout_frequency_hz = 0.0;
  double readout_amplitude = 0.0;
  double drive_frequency_hz = 0.0;
  double pi_pulse_amplitude = 0.0;
  double pi_pulse_duration_ns = 40.0;
  double drag_beta = 0.0;
  double sweetspot_v = 0.0;
  double flux_bias_v = 0.0;
  std::optional<double> t1_ns;
  std::optional<double> t2_ramsey_ns;
  std::optional<double> t2_echo_ns;
  std::optional<double> readout_fidelity;
  std::optional<ClassifierParams> classifier;
};

struct PairCalibration {
  QubitId qubit_a;
  QubitId qubit_b;
  double coupling_hz = 0.0;
  double cz_flux_amplitude = 0.0;
  double cz_duration_ns = 1.0;
  double conditional_phase_rad = 0.0;
  std::map<QubitId, double> virtual_phase_rad;
};

struct PlatformConfig {
  std::string name;
  std::map<QubitId, QubitCalibration> qubits;
  std::map<std::string, PairCalibration> pairs;

  const QubitCalibration& qubit(const QubitId& id) const;
  const PairCalibration& pair(const std::string& key) const;
};

// "qA-qB" with the lexicographically smaller label first.
std::string pair_key(const QubitId& a, const QubitId& b);

json to_json(const PlatformConfig& config);
// Parses and validates; throws ValidationError naming the offending field.
PlatformConfig platform_from_json(const json& doc);
void validate(const PlatformConfig& config);

PlatformConfig load_platform(const std::filesystem::path& dir);
void save_platform(const PlatformConfig& config, const std::filesystem::path& dir);
std::string serialize_platform(const PlatformConfig& config);

struct FieldChange {
  std::string path;
  json old_value;
  json new_value;
};

struct FieldUpdate {
  std::string path;
  json value;
};

// Leaf-level differences, compared at serialized precision.
std::vector<FieldChange> diff_platforms(const PlatformConfig& a, const PlatformConfig& b);

// All-or-nothing: throws ValidationError on unknown paths or if the result violates an invariant.
PlatformConfig apply_update(const PlatformConfig& config, const std::vector<FieldUpdate>& updates);

// Root directory named by QCAL_PLATFORMS; throws Error naming the variable when unset.
std::filesystem::path platforms_root();
std::filesystem::path resolve_platform(const std::string& name);

}  // namespace qcal

#endif  // QCAL_PLATFORM_H_
