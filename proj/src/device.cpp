#include "qcal/device.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qcal/clifford.h"
#include "qcal/error.h"
#include "qcal/numerics/models.h"

namespace qcal {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDragCurvature = 2.0;     // P1 per unit beta^2 in the DRAG sweep
constexpr double kDragDepolarizing = 0.01;  // RB depolarizing factor per unit beta^2

double lorentz(double x, double center, double fwhm) {
  const double u = 2.0 * (x - center) / fwhm;
  return 1.0 / (1.0 + u * u);
}

void require_sweep(const std::vector<double>& v, const std::string& name, bool ordered = true) {
  if (v.empty()) throw PreconditionError(name + " sweep is empty");
  for (double x : v)
    if (!std::isfinite(x)) throw PreconditionError(name + " sweep contains a non-finite value");
  if (!ordered || v.size() < 2) return;
  const bool up = v[1] > v[0];
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (up ? !(v[i] > v[i - 1]) : !(v[i] < v[i - 1]))
      throw PreconditionError(name + " sweep must be strictly monotone");
  }
}

void require_shots(int nshots) {
  if (nshots < 1) throw PreconditionError("nshots must be >= 1");
}

void positive(double v, const std::string& field) {
  if (!(v > 0) || !std::isfinite(v)) throw ValidationError(field, "must be positive");
}

Matrix2c conjugate(const Matrix2c& u, const Matrix2c& rho) { return u * rho * u.adjoint(); }

}  // namespace

namespace model {

double qubit_frequency(const QubitTruth& q, double bias_v) {
  return q.f_q_max_hz * std::sqrt(std::abs(std::cos(kPi * (bias_v - q.v_sweetspot) / q.v_period)));
}

double qubit_frequency_slope(const QubitTruth& q, double bias_v) {
  const double u = kPi * (bias_v - q.v_sweetspot) / q.v_period;
  const double c = std::cos(u);
  if (c == 0.0) return INFINITY;
  const double sign = c > 0 ? 1.0 : -1.0;
  return -q.f_q_max_hz * sign * std::sin(u) * kPi / (q.v_period * 2.0 * std::sqrt(std::abs(c)));
}

double t1_at(const QubitTruth& q, double bias_v) {
  const double detuning = q.f_q_max_hz - qubit_frequency(q, bias_v);
  const double frac = std::min(1.0, std::abs(detuning) / q.t1_detuning_ref_hz);
  return q.t1_ns + (q.t1_detuned_ns - q.t1_ns) * frac;
}

double t2_at(const QubitTruth& q, double bias_v) {
  const double rate = 1.0 / q.t2_ns + 2.0 * kPi * std::abs(qubit_frequency_slope(q, bias_v)) * q.flux_noise_v * 1e-9;
  return std::min(1.0 / rate, 2.0 * t1_at(q, bias_v));
}

double t2_echo_at(const QubitTruth& q, double bias_v) {
  return std::min(2.0 * t1_at(q, bias_v), 1.5 * t2_at(q, bias_v));
}

double resonator_frequency(const QubitTruth& q, int state, double readout_amplitude) {
  if (readout_amplitude > q.punchout_amplitude) return q.f_r_bare_hz;
  return state == 0 ? q.f_r_dressed_hz + q.chi_hz : q.f_r_dressed_hz - q.chi_hz;
}

std::complex<double> s21(const QubitTruth& q, double frequency_hz, int state, double readout_amplitude) {
  const double half = q.resonator_linewidth_hz / 2.0;
  const double f0 = resonator_frequency(q, state, readout_amplitude);
  return 1.0 - half / std::complex<double>(half, frequency_hz - f0);
}

std::complex<double> state_iq(const QubitTruth& q, int state, const ReadoutSettings& readout) {
  return q.readout_gain * readout.amplitude * s21(q, readout.frequency_hz, state, readout.amplitude);
}

double drive_contrast(const QubitTruth& q, double drive_frequency_hz, double qubit_frequency_hz) {
  const double u = (drive_frequency_hz - qubit_frequency_hz) / q.drive_linewidth_hz;
  return 1.0 / (1.0 + u * u);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double optimal_readout_fidelity(const QubitTruth& q, const ReadoutSettings& readout) {
  const double d = std::abs(state_iq(q, 1, readout) - state_iq(q, 0, readout));
  if (q.iq_sigma == 0.0) return d > 0 ? 1.0 : 0.5;
  return normal_cdf(d / (2.0 * q.iq_sigma));
}

}  // namespace model

void validate(const DeviceTruth& truth) {
  for (const auto& [id, q] : truth.qubits) {
    const std::string w = "qubits." + id + ".";
    positive(q.f_r_bare_hz, w + "f_r_bare_hz");
    positive(q.f_r_dressed_hz, w + "f_r_dressed_hz");
    positive(q.chi_hz, w + "chi_hz");
    positive(q.resonator_linewidth_hz, w + "resonator_linewidth_hz");
    positive(q.punchout_amplitude, w + "punchout_amplitude");
    positive(q.f_q_max_hz, w + "f_q_max_hz");
    positive(q.v_period, w + "v_period");
    positive(q.a_pi_true, w + "a_pi_true");
    positive(q.drive_linewidth_hz, w + "drive_linewidth_hz");
    positive(q.t1_ns, w + "t1_ns");
    positive(q.t2_ns, w + "t2_ns");
    positive(q.readout_gain, w + "readout_gain");
    positive(q.pi_duration_ref_ns, w + "pi_duration_ref_ns");
    positive(q.t1_detuned_ns, w + "t1_detuned_ns");
    positive(q.t1_detuning_ref_hz, w + "t1_detuning_ref_hz");
    if (!(q.iq_sigma >= 0)) throw ValidationError(w + "iq_sigma", "must be >= 0");
    if (!(q.flux_noise_v >= 0)) throw ValidationError(w + "flux_noise_v", "must be >= 0");
    if (!std::isfinite(q.v_sweetspot)) throw ValidationError(w + "v_sweetspot", "must be finite");
    if (!std::isfinite(q.drag_beta_opt)) throw ValidationError(w + "drag_beta_opt", "must be finite");
    if (q.t2_ns > 2.0 * q.t1_ns) throw ValidationError(w + "t2_ns", "must not exceed 2*t1_ns");
    if (!(q.chi_hz < 10.0 * q.resonator_linewidth_hz)) throw ValidationError(w + "chi_hz", "must be < 10*linewidth");
  }
  for (const auto& [key, p] : truth.pairs) {
    const std::string w = "pairs." + key + ".";
    const auto dash = key.find('-');
    if (dash == std::string::npos || !truth.qubits.count(key.substr(0, dash)) ||
        !truth.qubits.count(key.substr(dash + 1)))
      throw ValidationError("pairs." + key, "pair key must be 'qA-qB' of known qubits");
    positive(p.g_hz, w + "g_hz");
    if (p.detuning_slope_hz_per_unit == 0.0 || !std::isfinite(p.detuning_slope_hz_per_unit))
      throw ValidationError(w + "detuning_slope_hz_per_unit", "must be non-zero");
  }
}

json to_json(const DeviceTruth& truth) {
  json doc;
  doc["qubits"] = json::object();
  for (const auto& [id, q] : truth.qubits) {
    doc["qubits"][id] = {{"f_r_bare_hz", q.f_r_bare_hz},
                         {"f_r_dressed_hz", q.f_r_dressed_hz},
                         {"chi_hz", q.chi_hz},
                         {"resonator_linewidth_hz", q.resonator_linewidth_hz},
                         {"punchout_amplitude", q.punchout_amplitude},
                         {"f_q_max_hz", q.f_q_max_hz},
                         {"v_sweetspot", q.v_sweetspot},
                         {"v_period", q.v_period},
                         {"a_pi_true", q.a_pi_true},
                         {"drag_beta_opt", q.drag_beta_opt},
                         {"drive_linewidth_hz", q.drive_linewidth_hz},
                         {"t1_ns", q.t1_ns},
                         {"t2_ns", q.t2_ns},
                         {"iq_sigma", q.iq_sigma},
                         {"readout_gain", q.readout_gain},
                         {"pi_duration_ref_ns", q.pi_duration_ref_ns},
                         {"t1_detuned_ns", q.t1_detuned_ns},
                         {"t1_detuning_ref_hz", q.t1_detuning_ref_hz},
                         {"flux_noise_v", q.flux_noise_v}};
  }
  doc["pairs"] = json::object();
  for (const auto& [key, p] : truth.pairs) {
    doc["pairs"][key] = {{"g_hz", p.g_hz},
                         {"a_resonance", p.a_resonance},
                         {"detuning_slope_hz_per_unit", p.detuning_slope_hz_per_unit},
                         {"phi_a_rad", p.phi_a_rad},
                         {"phi_b_rad", p.phi_b_rad},
                         {"phi_cond_rad", p.phi_cond_rad}};
  }
  doc["noise"] = {{"seed", truth.noise.seed}, {"shot_sampling", truth.noise.shot_sampling}};
  return doc;
}

namespace {

template <typename T>
void read_field(const json& obj, const char* key, T& out, const std::string& where, bool optional = false) {
  if (!obj.contains(key)) {
    if (optional) return;
    throw ValidationError(where + "." + key, "missing required key");
  }
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(where + "." + key, "wrong type");
  }
}

}  // namespace

DeviceTruth truth_from_json(const json& doc) {
  DeviceTruth truth;
  if (!doc.is_object() || !doc.contains("qubits")) throw ValidationError("qubits", "missing required key");
  for (auto it = doc["qubits"].begin(); it != doc["qubits"].end(); ++it) {
    const std::string w = "qubits." + it.key();
    const json& j = it.value();
    QubitTruth q;
    read_field(j, "f_r_bare_hz", q.f_r_bare_hz, w);
    read_field(j, "f_r_dressed_hz", q.f_r_dressed_hz, w);
    read_field(j, "chi_hz", q.chi_hz, w);
    read_field(j, "resonator_linewidth_hz", q.resonator_linewidth_hz, w);
    read_field(j, "punchout_amplitude", q.punchout_amplitude, w);
    read_field(j, "f_q_max_hz", q.f_q_max_hz, w);
    read_field(j, "v_sweetspot", q.v_sweetspot, w);
    read_field(j, "v_period", q.v_period, w);
    read_field(j, "a_pi_true", q.a_pi_true, w);
    read_field(j, "drag_beta_opt", q.drag_beta_opt, w);
    read_field(j, "drive_linewidth_hz", q.drive_linewidth_hz, w);
    read_field(j, "t1_ns", q.t1_ns, w);
    read_field(j, "t2_ns", q.t2_ns, w);
    read_field(j, "iq_sigma", q.iq_sigma, w);
    read_field(j, "readout_gain", q.readout_gain, w);
    q.pi_duration_ref_ns = 40.0;
    q.t1_detuned_ns = q.t1_ns;
    read_field(j, "pi_duration_ref_ns", q.pi_duration_ref_ns, w, true);
    read_field(j, "t1_detuned_ns", q.t1_detuned_ns, w, true);
    read_field(j, "t1_detuning_ref_hz", q.t1_detuning_ref_hz, w, true);
    read_field(j, "flux_noise_v", q.flux_noise_v, w, true);
    truth.qubits[it.key()] = q;
  }
  if (doc.contains("pairs")) {
    for (auto it = doc["pairs"].begin(); it != doc["pairs"].end(); ++it) {
      const std::string w = "pairs." + it.key();
      const json& j = it.value();
      PairTruth p;
      read_field(j, "g_hz", p.g_hz, w);
      read_field(j, "a_resonance", p.a_resonance, w);
      read_field(j, "detuning_slope_hz_per_unit", p.detuning_slope_hz_per_unit, w);
      read_field(j, "phi_a_rad", p.phi_a_rad, w);
      read_field(j, "phi_b_rad", p.phi_b_rad, w);
      read_field(j, "phi_cond_rad", p.phi_cond_rad, w);
      truth.pairs[it.key()] = p;
    }
  }
  if (doc.contains("noise")) {
    read_field(doc["noise"], "seed", truth.noise.seed, "noise");
    read_field(doc["noise"], "shot_sampling", truth.noise.shot_sampling, "noise");
  }
  validate(truth);
  return truth;
}

DeviceTruth load_truth(const std::filesystem::path& dir) {
  const auto file = dir / "truth.json";
  if (!std::filesystem::exists(file)) throw IoError("missing " + file.string() + " (required by the virtual backend)");
  return truth_from_json(read_json_file(file));
}

void save_truth(const DeviceTruth& truth, const std::filesystem::path& dir) {
  validate(truth);
  write_text_file(dir / "truth.json", dump_canonical(round_numbers(to_json(truth), kPlatformDigits)));
}

DeviceTruth default_truth() {
  DeviceTruth truth;
  QubitTruth q0;
  q0.v_sweetspot = 0.02;
  q0.drag_beta_opt = 0.12;
  truth.qubits["q0"] = q0;

  QubitTruth q1;
  q1.f_r_bare_hz = 7.3e9;
  q1.f_r_dressed_hz = 7.302e9;
  q1.chi_hz = 0.35e6;
  q1.resonator_linewidth_hz = 0.9e6;
  q1.punchout_amplitude = 0.45;
  q1.f_q_max_hz = 4.8e9;
  q1.v_sweetspot = -0.03;
  q1.v_period = 0.9;
  q1.a_pi_true = 0.45;
  q1.drag_beta_opt = 0.05;
  q1.t1_ns = 12000.0;
  q1.t1_detuned_ns = 12000.0;
  q1.t2_ns = 9000.0;
  truth.qubits["q1"] = q1;

  PairTruth pair;
  pair.g_hz = 8.0e6;
  pair.a_resonance = 0.3;
  pair.detuning_slope_hz_per_unit = 1.0e9;
  pair.phi_a_rad = 0.4;
  pair.phi_b_rad = -0.2;
  pair.phi_cond_rad = kPi;
  truth.pairs["q0-q1"] = pair;
  truth.noise = {1234, true};
  return truth;
}

PlatformConfig calibrated_platform(const DeviceTruth& truth, const std::string& name) {
  PlatformConfig config;
  config.name = name;
  for (const auto& [id, q] : truth.qubits) {
    QubitCalibration c;
    c.readout_frequency_hz = q.f_r_dressed_hz;
    c.readout_amplitude = std::min(0.2, q.punchout_amplitude / 2.0);
    c.drive_frequency_hz = model::qubit_frequency(q, q.v_sweetspot);
    c.pi_pulse_amplitude = q.a_pi_true;
    c.pi_pulse_duration_ns = q.pi_duration_ref_ns;
    c.drag_beta = q.drag_beta_opt;
    c.sweetspot_v = q.v_sweetspot;
    c.flux_bias_v = q.v_sweetspot;
    c.t1_ns = q.t1_ns;
    c.t2_ramsey_ns = q.t2_ns;
    c.t2_echo_ns = model::t2_echo_at(q, q.v_sweetspot);
    const ReadoutSettings ro{c.readout_frequency_hz, c.readout_amplitude};
    const auto iq0 = model::state_iq(q, 0, ro), iq1 = model::state_iq(q, 1, ro);
    const auto delta = iq1 - iq0;
    ClassifierParams cls;
    cls.angle_rad = numerics::wrap_angle(-std::atan2(delta.imag(), delta.real()));
    const auto mid = 0.5 * (iq0 + iq1);
    cls.threshold = mid.real() * std::cos(cls.angle_rad) - mid.imag() * std::sin(cls.angle_rad);
    cls.assignment_fidelity = model::optimal_readout_fidelity(q, ro);
    c.classifier = cls;
    c.readout_fidelity = cls.assignment_fidelity;
    config.qubits[id] = c;
  }
  for (const auto& [key, p] : truth.pairs) {
    const auto dash = key.find('-');
    PairCalibration c;
    c.qubit_a = key.substr(0, dash);
    c.qubit_b = key.substr(dash + 1);
    c.coupling_hz = p.g_hz;
    c.cz_flux_amplitude = p.a_resonance;
    c.cz_duration_ns = 1e9 / (4.0 * p.g_hz);
    c.conditional_phase_rad = numerics::wrap_angle(p.phi_cond_rad);
    c.virtual_phase_rad[c.qubit_a] = numerics::wrap_angle(-p.phi_a_rad);
    c.virtual_phase_rad[c.qubit_b] = numerics::wrap_angle(-p.phi_b_rad);
    config.pairs[key] = c;
  }
  validate(config);
  return config;
}

Device::Device(DeviceTruth truth) : truth_(std::move(truth)), rng_(truth_.noise.seed) { validate(truth_); }

const QubitTruth& Device::qubit(const QubitId& id) const {
  auto it = truth_.qubits.find(id);
  if (it == truth_.qubits.end()) throw ValidationError(id, "unknown qubit");
  return it->second;
}

const PairTruth& Device::pair(const std::string& key) const {
  auto it = truth_.pairs.find(key);
  if (it == truth_.pairs.end()) throw ValidationError(key, "unknown pair");
  return it->second;
}

void Device::set_flux_offset(const QubitId& id, double delta_v) {
  qubit(id);
  offsets_[id] += delta_v;
}

double Device::flux_offset(const QubitId& id) const {
  qubit(id);
  auto it = offsets_.find(id);
  return it == offsets_.end() ? 0.0 : it->second;
}

void Device::set_bias(const QubitId& id, double bias_v) {
  qubit(id);
  biases_[id] = bias_v;
}

double Device::bias(const QubitId& id) const {
  const auto& q = qubit(id);
  auto it = biases_.find(id);
  return it == biases_.end() ? q.v_sweetspot : it->second;
}

double Device::qubit_frequency(const QubitId& id) const { return model::qubit_frequency(qubit(id), effective_bias(id)); }

std::complex<double> Device::noise(double sigma) {
  if (sigma == 0.0) return {0.0, 0.0};
  std::normal_distribution<double> n(0.0, sigma);
  const double re = n(rng_);
  const double im = n(rng_);
  return {re, im};
}

ArraySet Device::sample_probabilities(const QubitId& id, const ReadoutSettings& readout, int nshots,
                                      std::vector<std::size_t> shape, const std::vector<double>& p1_raw) {
  std::vector<double> p1(p1_raw.size());
  for (std::size_t i = 0; i < p1.size(); ++i) p1[i] = std::clamp(p1_raw[i], 0.0, 1.0);
  ArraySet out;
  if (!truth_.noise.shot_sampling) {
    out.add_real("probability", std::move(shape), std::move(p1));
    return out;
  }
  const auto& q = qubit(id);
  const std::complex<double> means[2] = {model::state_iq(q, 0, readout), model::state_iq(q, 1, readout)};
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<double> shots;
  shots.reserve(p1.size() * std::size_t(nshots) * 2);
  for (double p : p1) {
    for (int s = 0; s < nshots; ++s) {
      const int state = uniform(rng_) < p ? 1 : 0;
      const auto iq = means[state] + noise(q.iq_sigma);
      shots.push_back(iq.real());
      shots.push_back(iq.imag());
    }
  }
  shape.push_back(std::size_t(nshots));
  shape.push_back(2);
  out.add_real("shots", std::move(shape), std::move(shots));
  return out;
}

ArraySet Device::simulate(const ExperimentSpec& spec) {
  return std::visit([this](const auto& e) { return run(e); }, spec);
}

ArraySet Device::run(const experiments::ReadoutSweep& e) {
  const auto& q = qubit(e.qubit);
  require_sweep(e.frequencies, "frequency");
  require_shots(e.nshots);
  if (e.prepared_state != 0 && e.prepared_state != 1) throw PreconditionError("prepared_state must be 0 or 1");
  const double sigma = q.iq_sigma / std::sqrt(double(e.nshots));
  std::vector<std::complex<double>> iq;
  for (double f : e.frequencies)
    iq.push_back(q.readout_gain * e.readout_amplitude * model::s21(q, f, e.prepared_state, e.readout_amplitude) +
                 noise(sigma));
  ArraySet out;
  out.add_complex("iq", {iq.size()}, iq);
  return out;
}

ArraySet Device::run(const experiments::PunchoutSweep& e) {
  const auto& q = qubit(e.qubit);
  require_sweep(e.frequencies, "frequency");
  require_sweep(e.amplitudes, "amplitude");
  require_shots(e.nshots);
  const double sigma = q.iq_sigma / std::sqrt(double(e.nshots));
  std::vector<std::complex<double>> iq;
  for (double a : e.amplitudes)
    for (double f : e.frequencies) iq.push_back(q.readout_gain * a * model::s21(q, f, 0, a) + noise(sigma));
  ArraySet out;
  out.add_complex("iq", {e.amplitudes.size(), e.frequencies.size()}, iq);
  return out;
}

ArraySet Device::run(const experiments::DriveSweep& e) {
  const auto& q = qubit(e.qubit);
  require_sweep(e.frequencies, "frequency");
  require_shots(e.nshots);
  const double fq = model::qubit_frequency(q, e.bias_v + flux_offset(e.qubit));
  const auto iq0 = model::state_iq(q, 0, e.readout), iq1 = model::state_iq(q, 1, e.readout);
  const double sigma = q.iq_sigma / std::sqrt(double(e.nshots));
  std::vector<std::complex<double>> iq;
  for (double f : e.frequencies) {
    const double p = 0.5 * lorentz(f, fq, q.drive_linewidth_hz);
    iq.push_back((1.0 - p) * iq0 + p * iq1 + noise(sigma));
  }
  ArraySet out;
  out.add_complex("iq", {iq.size()}, iq);
  return out;
}

ArraySet Device::run(const experiments::FluxMap& e) {
  const auto& q = qubit(e.qubit);
  require_sweep(e.frequencies, "frequency");
  require_sweep(e.biases, "bias");
  require_shots(e.nshots);
  const auto iq0 = model::state_iq(q, 0, e.readout), iq1 = model::state_iq(q, 1, e.readout);
  const double sigma = q.iq_sigma / std::sqrt(double(e.nshots));
  std::vector<std::complex<double>> iq;
  for (double v : e.biases) {
    const double fq = model::qubit_frequency(q, v + flux_offset(e.qubit));
    for (double f : e.frequencies) {
      const double p = 0.5 * lorentz(f, fq, q.drive_linewidth_hz);
      iq.push_back((1.0 - p) * iq0 + p * iq1 + noise(sigma));
    }
  }
  ArraySet out;
  out.add_complex("iq", {e.biases.size(), e.frequencies.size()}, iq);
  return out;
}

ArraySet Device::run(const experiments::RabiAmplitude& e) {
  const auto& q = qubit(e.qubit);
  require_sweep(e.amplitudes, "amplitude");
  require_shots(e.nshots);
  const double contrast = model::drive_contrast(q, e.drive_frequency_hz, qubit_frequency(e.qubit));
  std::vector<double> p;
  for (double a : e.amplitudes) {
    const double s = std::sin(kPi * a / (2.0 * q.a_pi_true));
    p.push_back(contrast * s * s);
  }
  return sample_probabilities(e.qubit, e.readout, e.nshots, {p.size()}, p);
}

ArraySet Device::run(const experiments::RabiDuration& e) {
  const auto& q = qubit(e.qubit);
  require_sweep(e.durations_ns, "duration");
  require_shots(e.nshots);
  const double contrast = model::drive_contrast(q, e.drive_frequency_hz, qubit_frequency(e.qubit));
  std::vector<double> p;
  for (double t : e.durations_ns) {
    const double s = std::sin(kPi * t * (e.drive_amplitude / q.a_pi_true) / (2.0 * q.pi_duration_ref_ns));
    p.push_back(contrast * s * s);
  }
  return sample_probabilities(e.qubit, e.readout, e.nshots, {p.size()}, p);
}

ArraySet Device::run(const experiments::Ramsey& e) {
  const auto& q = qubit(e.qubit);
  require_sweep(e.delays_ns, "delay");
  require_shots(e.nshots);
  const double v = effective_bias(e.qubit);
  const double detuning = e.drive_frequency_hz + e.artificial_detuning_hz - model::qubit_frequency(q, v);
  const double t2 = model::t2_at(q, v);
  std::vector<double> p;
  for (double tau : e.delays_ns)
    p.push_back(0.5 + 0.5 * std::cos(2.0 * kPi * detuning * tau * 1e-9) * std::exp(-tau / t2));
  return sample_probabilities(e.qubit, e.readout, e.nshots, {p.size()}, p);
}

ArraySet Device::run(const experiments::T1& e) {
  const auto& q = qubit(e.qubit);
  require_sweep(e.delays_ns, "delay");
  require_shots(e.nshots);
  const double t1 = model::t1_at(q, effective_bias(e.qubit));
  std::vector<double> p;
  for (double tau : e.delays_ns) p.push_back(std::exp(-tau / t1));
  return sample_probabilities(e.qubit, e.readout, e.nshots, {p.size()}, p);
}

ArraySet Device::run(const experiments::Echo& e) {
  const auto& q = qubit(e.qubit);
  require_sweep(e.delays_ns, "delay");
  require_shots(e.nshots);
  const double t2e = model::t2_echo_at(q, effective_bias(e.qubit));
  std::vector<double> p;
  for (double tau : e.delays_ns) p.push_back(0.5 + 0.5 * std::exp(-tau / t2e));
  return sample_probabilities(e.qubit, e.readout, e.nshots, {p.size()}, p);
}

ArraySet Device::run(const experiments::Flipping& e) {
  const auto& q = qubit(e.qubit);
  require_sweep(e.n_flips, "n_flips");
  require_shots(e.nshots);
  const double eps = e.set_amplitude / q.a_pi_true - 1.0;
  std::vector<double> p;
  for (double n : e.n_flips) p.push_back(0.5 + 0.5 * std::sin(2.0 * kPi * eps * n + kPi * eps / 2.0));
  return sample_probabilities(e.qubit, e.readout, e.nshots, {p.size()}, p);
}

ArraySet Device::run(const experiments::Shots& e) {
  const auto& q = qubit(e.qubit);
  require_shots(e.nshots);
  if (e.prepared_state != 0 && e.prepared_state != 1) throw PreconditionError("prepared_state must be 0 or 1");
  double p1 = 0.0;
  if (e.prepared_state == 1) {
    const double s = std::sin(kPi * e.drive.pi_amplitude / (2.0 * q.a_pi_true));
    p1 = model::drive_contrast(q, e.drive.frequency_hz, qubit_frequency(e.qubit)) * s * s;
  }
  const std::complex<double> means[2] = {model::state_iq(q, 0, e.readout), model::state_iq(q, 1, e.readout)};
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const int n = e.nshots;
  const int ones = static_cast<int>(std::lround(p1 * n));
  std::vector<double> shots;
  shots.reserve(std::size_t(n) * 2);
  for (int s = 0; s < n; ++s) {
    const int state = truth_.noise.shot_sampling ? (uniform(rng_) < p1 ? 1 : 0) : (s < n - ones ? 0 : 1);
    const auto iq = means[state] + noise(q.iq_sigma);
    shots.push_back(iq.real());
    shots.push_back(iq.imag());
  }
  ArraySet out;
  out.add_real("shots", {std::size_t(n), 2}, std::move(shots));
  return out;
}

ArraySet Device::run(const experiments::DragSweep& e) {
  const auto& q = qubit(e.qubit);
  require_sweep(e.betas, "beta");
  require_shots(e.nshots);
  if (e.repetitions < 1) throw PreconditionError("repetitions must be >= 1");
  std::vector<double> p;
  for (double b : e.betas) {
    const double d = b - q.drag_beta_opt;
    p.push_back(kDragCurvature * d * d);
  }
  return sample_probabilities(e.qubit, e.readout, e.nshots, {p.size()}, p);
}

std::vector<double> Device::clifford_survival(const experiments::CliffordSequences& e) const {
  const auto& q = qubit(e.qubit);
  const auto& table = clifford_table();
  const double v = effective_bias(e.qubit);
  const double fq = model::qubit_frequency(q, v);
  const double t1 = model::t1_at(q, v), t2 = model::t2_at(q, v);
  const double t_gate = e.config.pi_duration_ns;
  const double theta = (kPi / 2.0) * (e.config.pi_amplitude / q.a_pi_true);
  const double axis = 2.0 * kPi * (e.config.frequency_hz - fq) * t_gate * 1e-9;
  const double gamma1 = 1.0 - std::exp(-t_gate / t1);
  const double dephasing_rate = std::max(0.0, 1.0 / t2 - 1.0 / (2.0 * t1));
  const double dephase = std::exp(-t_gate * dephasing_rate);
  const double dbeta = e.config.drag_beta - q.drag_beta_opt;
  const double lambda = std::clamp(kDragDepolarizing * dbeta * dbeta, 0.0, 1.0);
  const Matrix2c pulse = equatorial_rotation(theta, 0.0);
  // Detuning advances the qubit frame by `axis` during every pulse, tilting each later pulse further.
  const Matrix2c drift = rz(axis);
  const Matrix2c half = Matrix2c::Identity() * 0.5;

  auto noisy_x90 = [&](Matrix2c rho) {
    rho = conjugate(drift * pulse, rho);
    const std::complex<double> r11 = rho(1, 1);
    rho(0, 0) += gamma1 * r11;
    rho(1, 1) = (1.0 - gamma1) * r11;
    const double coherence = std::sqrt(1.0 - gamma1) * dephase;
    rho(0, 1) *= coherence;
    rho(1, 0) *= coherence;
    return Matrix2c((1.0 - lambda) * rho + lambda * half);
  };

  std::vector<double> survival;
  for (const auto& seq : e.sequences) {
    Matrix2c rho = Matrix2c::Zero();
    rho(0, 0) = 1.0;
    for (int g : seq) {
      if (g < 0 || g >= table.size()) throw PreconditionError("Clifford index out of range");
      const auto& el = table[g];
      rho = conjugate(rz(el.c), rho);
      rho = noisy_x90(rho);
      rho = conjugate(rz(el.b), rho);
      rho = noisy_x90(rho);
      rho = conjugate(rz(el.a), rho);
    }
    survival.push_back(std::clamp(rho(0, 0).real(), 0.0, 1.0));
  }
  return survival;
}

ArraySet Device::run(const experiments::CliffordSequences& e) {
  require_shots(e.nshots);
  if (e.sequences.empty()) throw PreconditionError("no Clifford sequences");
  const auto survival = clifford_survival(e);
  std::vector<double> p1;
  for (double s : survival) p1.push_back(1.0 - s);
  return sample_probabilities(e.qubit, e.readout, e.nshots, {p1.size()}, p1);
}

ArraySet Device::run(const experiments::AvoidedCrossing& e) {
  const auto& p = pair(e.pair);
  (void)p;
  const auto dash = e.pair.find('-');
  const QubitId qa = e.pair.substr(0, dash), qb = e.pair.substr(dash + 1);
  const auto& ta = qubit(qa);
  const auto& tb = qubit(qb);
  require_sweep(e.frequencies, "frequency");
  require_sweep(e.biases, "bias");
  require_shots(e.nshots);
  const double g = pair(e.pair).g_hz;
  const double fb = model::qubit_frequency(tb, effective_bias(qb));
  const auto iq0 = model::state_iq(ta, 0, e.readout), iq1 = model::state_iq(ta, 1, e.readout);
  const double sigma = ta.iq_sigma / std::sqrt(double(e.nshots));
  std::vector<std::complex<double>> iq;
  for (double v : e.biases) {
    const double fa = model::qubit_frequency(ta, v + flux_offset(qa));
    const double mean = 0.5 * (fa + fb);
    const double split = std::sqrt(0.25 * (fa - fb) * (fa - fb) + g * g);
    for (double f : e.frequencies) {
      const double prob = 0.5 * (lorentz(f, mean + split, ta.drive_linewidth_hz) +
                                 lorentz(f, mean - split, ta.drive_linewidth_hz));
      iq.push_back((1.0 - prob) * iq0 + prob * iq1 + noise(sigma));
    }
  }
  ArraySet out;
  out.add_complex("iq", {e.biases.size(), e.frequencies.size()}, iq);
  return out;
}

ArraySet Device::run(const experiments::Chevron& e) {
  const auto& p = pair(e.pair);
  require_sweep(e.amplitudes, "amplitude");
  require_sweep(e.durations_ns, "duration");
  require_shots(e.nshots);
  const QubitId qa = e.pair.substr(0, e.pair.find('-'));
  std::vector<double> prob;
  for (double a : e.amplitudes) {
    const double delta = p.detuning_slope_hz_per_unit * (a - p.a_resonance);
    const double omega = std::sqrt(delta * delta + 4.0 * p.g_hz * p.g_hz);
    for (double t : e.durations_ns) {
      const double s = std::sin(kPi * omega * t * 1e-9);
      prob.push_back(4.0 * p.g_hz * p.g_hz / (omega * omega) * s * s);
    }
  }
  return sample_probabilities(qa, e.readout, e.nshots, {e.amplitudes.size(), e.durations_ns.size()}, prob);
}

ArraySet Device::run(const experiments::CzPhase& e) {
  const auto& p = pair(e.pair);
  require_sweep(e.phases_rad, "phase");
  require_shots(e.nshots);
  if (e.control_state != 0 && e.control_state != 1) throw PreconditionError("control_state must be 0 or 1");
  const QubitId qa = e.pair.substr(0, e.pair.find('-'));
  const double phase = p.phi_a_rad + (e.control_state == 1 ? p.phi_cond_rad : 0.0);
  std::vector<double> prob;
  for (double th : e.phases_rad) prob.push_back(0.5 + 0.5 * std::cos(th + phase));
  return sample_probabilities(qa, e.readout, e.nshots, {prob.size()}, prob);
}

}  // namespace qcal
