#ifndef QCAL_DEVICE_H_
#define QCAL_DEVICE_H_

#include <complex>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "qcal/array_set.h"
#include "qcal/platform.h"

namespace qcal {

// Hidden physics of one transmon + readout resonator.
struct QubitTruth {
  double f_r_bare_hz = 7.1e9;
  double f_r_dressed_hz = 7.1025e9;
  double chi_hz = 0.4e6;  // |0> sits at dressed + chi, |1> at dressed - chi
  double resonator_linewidth_hz = 1.0e6;
  double punchout_amplitude = 0.4;
  double f_q_max_hz = 5.0e9;
  double v_sweetspot = 0.0;
  double v_period = 1.0;  // volts per flux quantum
  double a_pi_true = 0.5;
  double drag_beta_opt = 0.0;
  double drive_linewidth_hz = 4.0e6;
  double t1_ns = 10000.0;  // at the sweetspot
  double t2_ns = 7000.0;   // at the sweetspot
  double iq_sigma = 0.08;
  double readout_gain = 1.0;
  // Duration at which a_pi_true is a pi pulse (Rabi duration model).
  double pi_duration_ref_ns = 40.0;
  // T1 grows linearly with detuning from f_q_max, reaching t1_detuned_ns at t1_detuning_ref_hz.
  double t1_detuned_ns = 10000.0;
  double t1_detuning_ref_hz = 150.0e6;
  // RMS flux noise; adds 2 pi |df/dV| flux_noise_v to the dephasing rate.
  double flux_noise_v = 0.0;
};

struct PairTruth {
  double g_hz = 8.0e6;
  double a_resonance = 0.3;
  double detuning_slope_hz_per_unit = 1.0e9;  // delta(a) = slope * (a - a_resonance)
  double phi_a_rad = 0.0;
  double phi_b_rad = 0.0;
  double phi_cond_rad = 3.141592653589793;
};

struct NoiseModel {
  std::uint64_t seed = 1;
  bool shot_sampling = true;
};

struct DeviceTruth {
  std::map<QubitId, QubitTruth> qubits;
  std::map<std::string, PairTruth> pairs;  // keyed like PlatformConfig::pairs
  NoiseModel noise;
};

// Readout settings taken from the platform when an experiment is built.
struct ReadoutSettings {
  double frequency_hz = 0.0;
  double amplitude = 0.0;
};

// Pulse calibration used to prepare |1> and to play gates.
struct DriveSettings {
  double frequency_hz = 0.0;
  double pi_amplitude = 0.0;
  double pi_duration_ns = 40.0;
  double drag_beta = 0.0;
};

namespace experiments {

struct ReadoutSweep {
  QubitId qubit;
  std::vector<double> frequencies;
  double readout_amplitude = 0.0;
  int prepared_state = 0;
  int nshots = 1;
};
struct PunchoutSweep {
  QubitId qubit;
  std::vector<double> frequencies;
  std::vector<double> amplitudes;
  int nshots = 1;
};
struct DriveSweep {
  QubitId qubit;
  std::vector<double> frequencies;
  double bias_v = 0.0;
  ReadoutSettings readout;
  int nshots = 1;
};
struct FluxMap {
  QubitId qubit;
  std::vector<double> frequencies;
  std::vector<double> biases;
  ReadoutSettings readout;
  int nshots = 1;
};
struct RabiAmplitude {
  QubitId qubit;
  std::vector<double> amplitudes;
  double drive_frequency_hz = 0.0;
  ReadoutSettings readout;
  int nshots = 1;
};
struct RabiDuration {
  QubitId qubit;
  std::vector<double> durations_ns;
  double drive_amplitude = 0.0;
  double drive_frequency_hz = 0.0;
  ReadoutSettings readout;
  int nshots = 1;
};
struct Ramsey {
  QubitId qubit;
  std::vector<double> delays_ns;
  double drive_frequency_hz = 0.0;
  double artificial_detuning_hz = 0.0;
  ReadoutSettings readout;
  int nshots = 1;
};
struct T1 {
  QubitId qubit;
  std::vector<double> delays_ns;
  ReadoutSettings readout;
  int nshots = 1;
};
struct Echo {
  QubitId qubit;
  std::vector<double> delays_ns;
  ReadoutSettings readout;
  int nshots = 1;
};
struct Flipping {
  QubitId qubit;
  std::vector<double> n_flips;
  double set_amplitude = 0.0;
  ReadoutSettings readout;
  int nshots = 1;
};
struct Shots {
  QubitId qubit;
  int prepared_state = 0;
  ReadoutSettings readout;
  DriveSettings drive;
  int nshots = 1;
};
struct DragSweep {
  QubitId qubit;
  std::vector<double> betas;
  int repetitions = 1;
  ReadoutSettings readout;
  int nshots = 1;
};
struct CliffordSequences {
  QubitId qubit;
  std::vector<std::vector<int>> sequences;  // already include the recovery element
  DriveSettings config;
  ReadoutSettings readout;
  int nshots = 1;
};
struct AvoidedCrossing {
  std::string pair;
  std::vector<double> frequencies;
  std::vector<double> biases;  // applied to qubit_a
  ReadoutSettings readout;
  int nshots = 1;
};
struct Chevron {
  std::string pair;
  std::vector<double> amplitudes;
  std::vector<double> durations_ns;
  ReadoutSettings readout;
  int nshots = 1;
};
struct CzPhase {
  std::string pair;
  std::vector<double> phases_rad;
  int control_state = 0;
  ReadoutSettings readout;
  int nshots = 1;
};

}  // namespace experiments

using ExperimentSpec =
    std::variant<experiments::ReadoutSweep, experiments::PunchoutSweep, experiments::DriveSweep, experiments::FluxMap,
                 experiments::RabiAmplitude, experiments::RabiDuration, experiments::Ramsey, experiments::T1,
                 experiments::Echo, experiments::Flipping, experiments::Shots, experiments::DragSweep,
                 experiments::CliffordSequences, experiments::AvoidedCrossing, experiments::Chevron,
                 experiments::CzPhase>;

// Closed-form pieces of the device model, exposed for oracles.
namespace model {

// f_max sqrt(|cos(pi (V - V_ss) / V_p)|)
double qubit_frequency(const QubitTruth& q, double bias_v);
double qubit_frequency_slope(const QubitTruth& q, double bias_v);
double t1_at(const QubitTruth& q, double bias_v);
double t2_at(const QubitTruth& q, double bias_v);
double t2_echo_at(const QubitTruth& q, double bias_v);
// Resonator centre seen at a readout amplitude for a qubit state (punchout above threshold).
double resonator_frequency(const QubitTruth& q, int state, double readout_amplitude);
std::complex<double> s21(const QubitTruth& q, double frequency_hz, int state, double readout_amplitude);
// Noiseless mean IQ point of a state.
std::complex<double> state_iq(const QubitTruth& q, int state, const ReadoutSettings& readout);
// 1 / (1 + ((f_drive - f_q) / linewidth)^2)
double drive_contrast(const QubitTruth& q, double drive_frequency_hz, double qubit_frequency_hz);
// Best achievable assignment fidelity Phi(d / (2 sigma)) for the two state clouds.
double optimal_readout_fidelity(const QubitTruth& q, const ReadoutSettings& readout);
double normal_cdf(double x);

}  // namespace model

void validate(const DeviceTruth& truth);
json to_json(const DeviceTruth& truth);
DeviceTruth truth_from_json(const json& doc);
DeviceTruth load_truth(const std::filesystem::path& dir);
void save_truth(const DeviceTruth& truth, const std::filesystem::path& dir);

// Two qubits q0, q1 and the pair q0-q1, with T1 = 10 us at the sweetspot for q0.
DeviceTruth default_truth();
// A platform calibrated exactly to the truth (drive on the sweetspot frequency, pi amplitude,
// DRAG optimum, readout at the dressed frequency, ideal classifier).
PlatformConfig calibrated_platform(const DeviceTruth& truth, const std::string& name = "dummy");

// Seedable simulator standing in for the QPU. Not thread-safe: one owner per run.
class Device {
 public:
  explicit Device(DeviceTruth truth);

  const DeviceTruth& truth() const { return truth_; }
  const QubitTruth& qubit(const QubitId& id) const;
  const PairTruth& pair(const std::string& key) const;

  ArraySet simulate(const ExperimentSpec& spec);

  // Flux offsets accumulate and shift the effective bias of every later experiment.
  void set_flux_offset(const QubitId& qubit, double delta_v);
  double flux_offset(const QubitId& qubit) const;
  // Operating bias applied by the control stack (the platform's flux_bias_v).
  void set_bias(const QubitId& qubit, double bias_v);
  double bias(const QubitId& qubit) const;
  double effective_bias(const QubitId& qubit) const { return bias(qubit) + flux_offset(qubit); }
  double qubit_frequency(const QubitId& qubit) const;

  void reseed(std::uint64_t seed) { rng_.seed(seed); }

  // Survival probabilities of Clifford sequences under the gate model (no sampling).
  std::vector<double> clifford_survival(const experiments::CliffordSequences& spec) const;

 private:
  ArraySet sample_probabilities(const QubitId& qubit, const ReadoutSettings& readout, int nshots,
                                std::vector<std::size_t> shape, const std::vector<double>& p1);
  std::complex<double> noise(double sigma);

  ArraySet run(const experiments::ReadoutSweep& e);
  ArraySet run(const experiments::PunchoutSweep& e);
  ArraySet run(const experiments::DriveSweep& e);
  ArraySet run(const experiments::FluxMap& e);
  ArraySet run(const experiments::RabiAmplitude& e);
  ArraySet run(const experiments::RabiDuration& e);
  ArraySet run(const experiments::Ramsey& e);
  ArraySet run(const experiments::T1& e);
  ArraySet run(const experiments::Echo& e);
  ArraySet run(const experiments::Flipping& e);
  ArraySet run(const experiments::Shots& e);
  ArraySet run(const experiments::DragSweep& e);
  ArraySet run(const experiments::CliffordSequences& e);
  ArraySet run(const experiments::AvoidedCrossing& e);
  ArraySet run(const experiments::Chevron& e);
  ArraySet run(const experiments::CzPhase& e);

  DeviceTruth truth_;
  std::map<QubitId, double> offsets_;
  std::map<QubitId, double> biases_;
  std::mt19937_64 rng_;
};

}  // namespace qcal

#endif  // QCAL_DEVICE_H_
