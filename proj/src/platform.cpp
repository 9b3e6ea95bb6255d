#include "qcal/platform.h"

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <set>

#include "qcal/error.h"

namespace qcal {
namespace {

constexpr double kAngleSlack = 1e-9;

const std::set<std::string> kQubitKeys = {
    "readout_frequency_hz", "readout_amplitude", "drive_frequency_hz", "pi_pulse_amplitude",
    "pi_pulse_duration_ns", "drag_beta", "sweetspot_v", "flux_bias_v", "t1_ns", "t2_ramsey_ns",
    "t2_echo_ns", "readout_fidelity", "classifier"};
const std::set<std::string> kClassifierKeys = {"angle_rad", "threshold", "assignment_fidelity"};
const std::set<std::string> kPairKeys = {"qubit_a", "qubit_b", "coupling_hz", "cz_flux_amplitude",
                                         "cz_duration_ns", "conditional_phase_rad", "virtual_phase_rad"};

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ValidationError(where, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) throw ValidationError(where + "." + it.key(), "unknown key");
  }
  for (const auto& key : allowed) {
    if (!obj.contains(key)) throw ValidationError(where + "." + key, "missing required key");
  }
}

double number_at(const json& obj, const std::string& key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ValidationError(where + "." + key, "expected a number");
  return v.get<double>();
}

std::optional<double> nullable_at(const json& obj, const std::string& key, const std::string& where) {
  const auto& v = obj.at(key);
  if (v.is_null()) return std::nullopt;
  if (!v.is_number()) throw ValidationError(where + "." + key, "expected a number or null");
  return v.get<double>();
}

json nullable(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

void check_label(const std::string& label, const std::string& where) {
  if (label.empty()) throw ValidationError(where, "empty qubit label");
  if (label.find_first_of(".-") != std::string::npos)
    throw ValidationError(where, "qubit label '" + label + "' may not contain '.' or '-'");
}

void require(bool ok, const std::string& field, const std::string& message) {
  if (!ok) throw ValidationError(field, message);
}

bool in_angle_range(double a) { return a > -std::numbers::pi - kAngleSlack && a <= std::numbers::pi + kAngleSlack; }

// Splits "a.b.c" into components.
std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    auto pos = path.find('.', start);
    parts.push_back(path.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return parts;
}

// Recursive leaf diff. A nullable object that is null on one side is reported once, at its own path.
void diff_nodes(const json& a, const json& b, const std::string& path, std::vector<FieldChange>& out) {
  if (a.is_object() && b.is_object()) {
    std::set<std::string> keys;
    for (auto it = a.begin(); it != a.end(); ++it) keys.insert(it.key());
    for (auto it = b.begin(); it != b.end(); ++it) keys.insert(it.key());
    for (const auto& key : keys) {
      const std::string child = path.empty() ? key : path + "." + key;
      const json& va = a.contains(key) ? a.at(key) : json(nullptr);
      const json& vb = b.contains(key) ? b.at(key) : json(nullptr);
      diff_nodes(va, vb, child, out);
    }
  } else if (a != b) {
    out.push_back({path, a, b});
  }
}

}  // namespace

const QubitCalibration& PlatformConfig::qubit(const QubitId& id) const {
  auto it = qubits.find(id);
  if (it == qubits.end()) throw ValidationError("qubits." + id, "unknown qubit");
  return it->second;
}

const PairCalibration& PlatformConfig::pair(const std::string& key) const {
  auto it = pairs.find(key);
  if (it == pairs.end()) throw ValidationError("pairs." + key, "unknown pair");
  return it->second;
}

std::string pair_key(const QubitId& a, const QubitId& b) { return a < b ? a + "-" + b : b + "-" + a; }

json to_json(const PlatformConfig& config) {
  json doc;
  doc["name"] = config.name;
  doc["qubits"] = json::object();
  for (const auto& [id, q] : config.qubits) {
    json j;
    j["readout_frequency_hz"] = q.readout_frequency_hz;
    j["readout_amplitude"] = q.readout_amplitude;
    j["drive_frequency_hz"] = q.drive_frequency_hz;
    j["pi_pulse_amplitude"] = q.pi_pulse_amplitude;
    j["pi_pulse_duration_ns"] = q.pi_pulse_duration_ns;
    j["drag_beta"] = q.drag_beta;
    j["sweetspot_v"] = q.sweetspot_v;
    j["flux_bias_v"] = q.flux_bias_v;
    j["t1_ns"] = nullable(q.t1_ns);
    j["t2_ramsey_ns"] = nullable(q.t2_ramsey_ns);
    j["t2_echo_ns"] = nullable(q.t2_echo_ns);
    j["readout_fidelity"] = nullable(q.readout_fidelity);
    if (q.classifier) {
      j["classifier"] = {{"angle_rad", q.classifier->angle_rad},
                         {"threshold", q.classifier->threshold},
                         {"assignment_fidelity", q.classifier->assignment_fidelity}};
    } else {
      j["classifier"] = nullptr;
    }
    doc["qubits"][id] = std::move(j);
  }
  doc["pairs"] = json::object();
  for (const auto& [key, p] : config.pairs) {
    json j;
    j["qubit_a"] = p.qubit_a;
    j["qubit_b"] = p.qubit_b;
    j["coupling_hz"] = p.coupling_hz;
    j["cz_flux_amplitude"] = p.cz_flux_amplitude;
    j["cz_duration_ns"] = p.cz_duration_ns;
    j["conditional_phase_rad"] = p.conditional_phase_rad;
    j["virtual_phase_rad"] = json::object();
    for (const auto& [q, phase] : p.virtual_phase_rad) j["virtual_phase_rad"][q] = phase;
    doc["pairs"][key] = std::move(j);
  }
  return doc;
}

PlatformConfig platform_from_json(const json& doc) {
  check_keys(doc, {"name", "qubits", "pairs"}, "");
  PlatformConfig config;
  if (!doc["name"].is_string()) throw ValidationError("name", "expected a string");
  config.name = doc["name"].get<std::string>();
  if (!doc["qubits"].is_object()) throw ValidationError("qubits", "expected an object");
  for (auto it = doc["qubits"].begin(); it != doc["qubits"].end(); ++it) {
    const std::string where = "qubits." + it.key();
    check_label(it.key(), where);
    const json& j = it.value();
    check_keys(j, kQubitKeys, where);
    QubitCalibration q;
    q.readout_frequency_hz = number_at(j, "readout_frequency_hz", where);
    q.readout_amplitude = number_at(j, "readout_amplitude", where);
    q.drive_frequency_hz = number_at(j, "drive_frequency_hz", where);
    q.pi_pulse_amplitude = number_at(j, "pi_pulse_amplitude", where);
    q.pi_pulse_duration_ns = number_at(j, "pi_pulse_duration_ns", where);
    q.drag_beta = number_at(j, "drag_beta", where);
    q.sweetspot_v = number_at(j, "sweetspot_v", where);
    q.flux_bias_v = number_at(j, "flux_bias_v", where);
    q.t1_ns = nullable_at(j, "t1_ns", where);
    q.t2_ramsey_ns = nullable_at(j, "t2_ramsey_ns", where);
    q.t2_echo_ns = nullable_at(j, "t2_echo_ns", where);
    q.readout_fidelity = nullable_at(j, "readout_fidelity", where);
    if (!j["classifier"].is_null()) {
      const std::string cw = where + ".classifier";
      check_keys(j["classifier"], kClassifierKeys, cw);
      ClassifierParams c;
      c.angle_rad = number_at(j["classifier"], "angle_rad", cw);
      c.threshold = number_at(j["classifier"], "threshold", cw);
      c.assignment_fidelity = number_at(j["classifier"], "assignment_fidelity", cw);
      q.classifier = c;
    }
    config.qubits[it.key()] = q;
  }
  if (!doc["pairs"].is_object()) throw ValidationError("pairs", "expected an object");
  for (auto it = doc["pairs"].begin(); it != doc["pairs"].end(); ++it) {
    const std::string where = "pairs." + it.key();
    const json& j = it.value();
    check_keys(j, kPairKeys, where);
    PairCalibration p;
    if (!j["qubit_a"].is_string() || !j["qubit_b"].is_string())
      throw ValidationError(where, "qubit_a/qubit_b must be strings");
    p.qubit_a = j["qubit_a"].get<std::string>();
    p.qubit_b = j["qubit_b"].get<std::string>();
    p.coupling_hz = number_at(j, "coupling_hz", where);
    p.cz_flux_amplitude = number_at(j, "cz_flux_amplitude", where);
    p.cz_duration_ns = number_at(j, "cz_duration_ns", where);
    p.conditional_phase_rad = number_at(j, "conditional_phase_rad", where);
    if (!j["virtual_phase_rad"].is_object()) throw ValidationError(where + ".virtual_phase_rad", "expected an object");
    for (auto v = j["virtual_phase_rad"].begin(); v != j["virtual_phase_rad"].end(); ++v)
      p.virtual_phase_rad[v.key()] = number_at(j["virtual_phase_rad"], v.key(), where + ".virtual_phase_rad");
    config.pairs[it.key()] = p;
  }
  validate(config);
  return config;
}

void validate(const PlatformConfig& config) {
  for (const auto& [id, q] : config.qubits) {
    const std::string w = "qubits." + id + ".";
    check_label(id, "qubits." + id);
    require(q.readout_frequency_hz > 0, w + "readout_frequency_hz", "must be > 0");
    require(q.drive_frequency_hz > 0, w + "drive_frequency_hz", "must be > 0");
    require(q.readout_amplitude >= 0 && q.readout_amplitude <= 1, w + "readout_amplitude", "must lie in [0, 1]");
    require(q.pi_pulse_amplitude >= 0 && q.pi_pulse_amplitude <= 1, w + "pi_pulse_amplitude", "must lie in [0, 1]");
    require(q.pi_pulse_duration_ns > 0, w + "pi_pulse_duration_ns", "must be > 0");
    require(std::isfinite(q.drag_beta), w + "drag_beta", "must be finite");
    require(std::isfinite(q.sweetspot_v), w + "sweetspot_v", "must be finite");
    require(std::isfinite(q.flux_bias_v), w + "flux_bias_v", "must be finite");
    if (q.t1_ns) require(*q.t1_ns > 0, w + "t1_ns", "must be > 0");
    if (q.t2_ramsey_ns) require(*q.t2_ramsey_ns > 0, w + "t2_ramsey_ns", "must be > 0");
    if (q.t2_echo_ns) require(*q.t2_echo_ns > 0, w + "t2_echo_ns", "must be > 0");
    if (q.t1_ns && q.t2_ramsey_ns && q.t2_echo_ns) {
      const double limit = 2.0 * *q.t1_ns * (1 + 1e-12);
      require(*q.t2_ramsey_ns <= limit, w + "t2_ramsey_ns", "must not exceed 2*t1_ns");
      require(*q.t2_echo_ns <= limit, w + "t2_echo_ns", "must not exceed 2*t1_ns");
    } else if (q.t1_ns && q.t2_ramsey_ns) {
      require(*q.t2_ramsey_ns <= 2.0 * *q.t1_ns * (1 + 1e-12), w + "t2_ramsey_ns", "must not exceed 2*t1_ns");
    }
    if (q.readout_fidelity)
      require(*q.readout_fidelity >= 0 && *q.readout_fidelity <= 1, w + "readout_fidelity", "must lie in [0, 1]");
    if (q.classifier) {
      require(in_angle_range(q.classifier->angle_rad), w + "classifier.angle_rad", "must lie in (-pi, pi]");
      require(std::isfinite(q.classifier->threshold), w + "classifier.threshold", "must be finite");
      require(q.classifier->assignment_fidelity >= 0 && q.classifier->assignment_fidelity <= 1,
              w + "classifier.assignment_fidelity", "must lie in [0, 1]");
    }
  }
  for (const auto& [key, p] : config.pairs) {
    const std::string w = "pairs." + key + ".";
    require(config.qubits.count(p.qubit_a), w + "qubit_a", "references unknown qubit '" + p.qubit_a + "'");
    require(config.qubits.count(p.qubit_b), w + "qubit_b", "references unknown qubit '" + p.qubit_b + "'");
    require(p.qubit_a != p.qubit_b, w + "qubit_b", "pair needs two distinct qubits");
    require(key == pair_key(p.qubit_a, p.qubit_b), "pairs." + key, "key must be '" + pair_key(p.qubit_a, p.qubit_b) + "'");
    require(p.qubit_a < p.qubit_b, w + "qubit_a", "qubit_a must be the lexicographically smaller label");
    require(p.coupling_hz >= 0, w + "coupling_hz", "must be >= 0");
    require(p.cz_duration_ns > 0, w + "cz_duration_ns", "must be > 0");
    require(std::isfinite(p.cz_flux_amplitude), w + "cz_flux_amplitude", "must be finite");
    require(in_angle_range(p.conditional_phase_rad), w + "conditional_phase_rad", "must lie in (-pi, pi]");
    for (const auto& [q, phase] : p.virtual_phase_rad) {
      require(q == p.qubit_a || q == p.qubit_b, w + "virtual_phase_rad." + q, "not a member of the pair");
      require(std::isfinite(phase), w + "virtual_phase_rad." + q, "must be finite");
    }
  }
}

std::string serialize_platform(const PlatformConfig& config) {
  return dump_canonical(round_numbers(to_json(config), kPlatformDigits));
}

PlatformConfig load_platform(const std::filesystem::path& dir) {
  const auto file = dir / "platform.json";
  if (!std::filesystem::exists(file)) throw IoError("missing " + file.string());
  return platform_from_json(read_json_file(file));
}

void save_platform(const PlatformConfig& config, const std::filesystem::path& dir) {
  validate(config);
  write_text_file(dir / "platform.json", serialize_platform(config));
}

std::vector<FieldChange> diff_platforms(const PlatformConfig& a, const PlatformConfig& b) {
  std::vector<FieldChange> out;
  diff_nodes(round_numbers(to_json(a), kPlatformDigits), round_numbers(to_json(b), kPlatformDigits), "", out);
  return out;
}

PlatformConfig apply_update(const PlatformConfig& config, const std::vector<FieldUpdate>& updates) {
  json doc = to_json(config);
  for (const auto& u : updates) {
    const auto parts = split_path(u.path);
    json* node = &doc;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (!node->is_object() || !node->contains(parts[i])) throw ValidationError(u.path, "unknown field path");
      node = &(*node)[parts[i]];
    }
    if (node->is_object() && !u.value.is_object() && !u.value.is_null())
      throw ValidationError(u.path, "cannot replace an object with a scalar");
    if ((node->is_number() || node->is_null()) && !(u.value.is_number() || u.value.is_null() || u.value.is_object()))
      throw ValidationError(u.path, "expected a number");
    *node = u.value;
  }
  return platform_from_json(doc);
}

std::filesystem::path platforms_root() {
  const char* env = std::getenv("QCAL_PLATFORMS");
  if (env == nullptr || *env == '\0') throw Error("environment variable QCAL_PLATFORMS is not set");
  return std::filesystem::path(env);
}

std::filesystem::path resolve_platform(const std::string& name) {
  auto dir = platforms_root() / name;
  if (!std::filesystem::exists(dir / "platform.json"))
    throw Error("platform '" + name + "' not found under QCAL_PLATFORMS (" + platforms_root().string() + ")");
  return dir;
}

}  // namespace qcal
