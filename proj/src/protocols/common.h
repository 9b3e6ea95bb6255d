#ifndef QCAL_SRC_PROTOCOLS_COMMON_H_
#define QCAL_SRC_PROTOCOLS_COMMON_H_

#include <complex>
#include <string>
#include <vector>

#include "qcal/numerics/least_squares.h"
#include "qcal/protocols.h"

namespace qcal::protocols {

using Vec = Eigen::VectorXd;

// Points lo, lo + step, ... up to hi (inclusive within rounding).
std::vector<double> sweep(double lo, double hi, double step, const std::string& name);
std::vector<double> centered_sweep(double center, double width, double step, const std::string& name);

ReadoutSettings readout_of(const QubitCalibration& q);
DriveSettings drive_of(const QubitCalibration& q);

// Copies the qubit config values into metadata["config"] for later fitting.
void echo_qubit(ArraySet& set, const QubitCalibration& q);
void echo_pair(ArraySet& set, const PairCalibration& p);
const json& config_echo(const ArraySet& set);

// Which end of a sweep is known to be closer to |0> when no classifier is available.
enum class Orientation { kFirstGround, kFirstExcited };

struct Probabilities {
  std::vector<double> p;
  bool uncalibrated = false;
};

// Excited-state probability per sweep point from "probability" or "shots" arrays. Shots are
// classified with the echoed classifier; without one, mean IQ points are projected onto the
// line joining the two most distant means (flag "uncalibrated readout").
Probabilities excited_probability(const ArraySet& set, Orientation orientation);
inline constexpr const char* kUncalibratedFlag = "uncalibrated readout";
inline constexpr const char* kEdgeFlag = "feature at sweep edge";
inline constexpr const char* kStderrFlag = "large fit uncertainty";

// Signed projection of IQ points onto the direction from `reference` to the point farthest from it.
std::vector<double> project_from(const std::vector<std::complex<double>>& iq, std::complex<double> reference);
std::complex<double> median_iq(const std::vector<std::complex<double>>& iq);

Vec to_vec(const std::vector<double>& v);
std::vector<double> to_std(const Vec& v);
std::vector<double> sweep_axis(const ArraySet& set, const std::string& name);

TargetResult failed(const std::string& message);
void record_fit(TargetResult& r, const numerics::FitResult<double>& fit, const std::vector<std::string>& names);
void mark_poor(TargetResult& r, const std::string& flag);
// Poor when stderr exceeds 20% of |value|.
void check_relative_stderr(TargetResult& r, double value, double std_error, const std::string& what);
// True when x lies outside the sweep or within `margin` (fraction of the span) of either end.
bool near_edge(double x, const std::vector<double>& axis, double margin = 0.02);

// Index of the extremum plus a three-point parabolic refinement of its position.
double refined_peak(const std::vector<double>& x, const std::vector<double>& y, bool maximum, std::size_t* index = nullptr);

// Curve evaluated on a dense grid spanning the sweep.
Series fit_curve_series(const numerics::CurveModel<double>& model, const Vec& params, const std::vector<double>& axis,
                        const std::string& label = "fit");

// Lorentzian fit of y(f) with the frequency axis shifted and scaled to MHz for conditioning.
struct LorentzFit {
  numerics::FitResult<double> fit;
  double f0 = 0, w = 0, amplitude = 0, offset = 0;
  double f0_err = 0, w_err = 0, amplitude_err = 0;
  double center = 0;  // shift applied to the frequency axis
};
LorentzFit fit_lorentzian(const std::vector<double>& freqs, const std::vector<double>& y, bool dip);
double eval_lorentz_fit(const LorentzFit& fit, double frequency_hz);

}  // namespace qcal::protocols

#endif  // QCAL_SRC_PROTOCOLS_COMMON_H_
