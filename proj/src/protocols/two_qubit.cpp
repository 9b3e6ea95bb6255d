#include <algorithm>
#include <cmath>
#include <numbers>

#include "catalog.h"
#include "common.h"
#include "qcal/error.h"
#include "qcal/numerics/models.h"
#include "qcal/numerics/oscillation.h"

namespace qcal::protocols {
namespace {

constexpr double kPi = std::numbers::pi;

void echo_pair_and_readout(ArraySet& set, const PlatformConfig& config, const PairCalibration& pair) {
  echo_qubit(set, config.qubit(pair.qubit_a));
  echo_pair(set, pair);
}

const json& pair_echo(const ArraySet& set) {
  auto it = set.metadata().find("pair_config");
  if (it == set.metadata().end()) throw ValidationError("metadata.pair_config", "missing pair config echo");
  return it->second;
}

// Rows of a [rows, cols] complex array.
std::vector<std::vector<std::complex<double>>> complex_rows(const ArraySet& set, const std::string& name) {
  const auto& a = set.at(name);
  const auto all = set.complex(name);
  const std::size_t rows = a.shape.at(0), cols = a.shape.at(1);
  std::vector<std::vector<std::complex<double>>> out(rows);
  for (std::size_t i = 0; i < rows; ++i) out[i].assign(all.begin() + long(i * cols), all.begin() + long((i + 1) * cols));
  return out;
}

// ---- avoided crossing ------------------------------------------------------

struct CrossingPeaks {
  std::vector<double> bias;   // relative to the sweep centre
  std::vector<double> upper;  // MHz relative to the frequency centre
  std::vector<double> lower;
};

// Rows of the crossing map where two separated peaks of comparable height appear.
CrossingPeaks two_peak_rows(const ArraySet& set) {
  const auto freqs = set.real("frequency");
  const auto biases = set.real("bias");
  const auto rows = complex_rows(set, "iq");
  const auto all = set.complex("iq");
  const auto baseline = median_iq(all);
  const double f_center = 0.5 * (freqs.front() + freqs.back());
  const double b_center = 0.5 * (biases.front() + biases.back());
  const double step = freqs.size() > 1 ? std::abs(freqs[1] - freqs[0]) : 1.0;
  const double exclusion = std::max(3 * step, 4e6);
  // Direction towards the excited response, fixed over the whole map.
  const auto signal_all = project_from(all, baseline);
  const double global = *std::max_element(signal_all.begin(), signal_all.end());
  CrossingPeaks out;
  if (!(global > 0)) return out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<double> y(signal_all.begin() + long(i * freqs.size()), signal_all.begin() + long((i + 1) * freqs.size()));
    std::size_t k1 = 0;
    const double f1 = refined_peak(freqs, y, true, &k1);
    const double h1 = y[k1];
    if (h1 < 0.25 * global) continue;
    std::vector<double> masked = y;
    for (std::size_t j = 0; j < y.size(); ++j)
      if (std::abs(freqs[j] - freqs[k1]) < exclusion) masked[j] = -INFINITY;
    std::size_t k2 = 0;
    for (std::size_t j = 1; j < masked.size(); ++j)
      if (masked[j] > masked[k2]) k2 = j;
    if (!(masked[k2] >= 0.5 * h1)) continue;
    // Must be a local maximum, not the shoulder of the first peak.
    if ((k2 > 0 && y[k2 - 1] > y[k2]) || (k2 + 1 < y.size() && y[k2 + 1] > y[k2])) continue;
    double f2 = freqs[k2];
    if (k2 > 0 && k2 + 1 < y.size()) {
      const double denom = y[k2 - 1] - 2 * y[k2] + y[k2 + 1];
      if (denom != 0) f2 += 0.5 * (y[k2 - 1] - y[k2 + 1]) / denom * step;
    }
    out.bias.push_back(biases[i] - b_center);
    out.upper.push_back((std::max(f1, f2) - f_center) / 1e6);
    out.lower.push_back((std::min(f1, f2) - f_center) / 1e6);
  }
  return out;
}

// fA(V) = c0 + c1 V + c2 V^2 against a fixed fB; branches mean +- sqrt(((fA - fB)/2)^2 + g^2).
// Params: fB, g, c0, c1, c2 (MHz, V relative to the sweep centre).
double branch(const Vec& p, double v, bool upper) {
  const double fa = p[2] + p[3] * v + p[4] * v * v;
  const double mean = 0.5 * (fa + p[0]);
  const double split = std::sqrt(0.25 * (fa - p[0]) * (fa - p[0]) + p[1] * p[1]);
  return upper ? mean + split : mean - split;
}

double branch_detuning(const Vec& p, double v) { return p[2] + p[3] * v + p[4] * v * v - p[0]; }

Routine make_avoided_crossing() {
  Routine r;
  r.name = "avoided_crossing";
  r.title = "Avoided crossing";
  r.target_kind = TargetKind::kPair;
  r.defaults = {{"bias_min", 0.10},       {"bias_max", 0.155},       {"bias_step", 0.0025},
                {"freq_width_hz", 80e6},  {"freq_step_hz", 0.5e6},   {"nshots", 100}};
  r.owned_fields = {"coupling_hz"};
  r.acquire_target = [](const PlatformConfig& config, const std::string& key, const Params& p, Device& device) {
    const auto& pair = config.pair(key);
    const auto& qa = config.qubit(pair.qubit_a);
    const auto& qb = config.qubit(pair.qubit_b);
    const auto rel = sweep(p.number("bias_min"), p.number("bias_max"), p.number("bias_step"), "bias");
    std::vector<double> biases;
    for (double v : rel) biases.push_back(qa.sweetspot_v + v);
    const auto freqs =
        centered_sweep(qb.drive_frequency_hz, p.number("freq_width_hz"), p.number("freq_step_hz"), "frequency");
    auto set = device.simulate(experiments::AvoidedCrossing{key, freqs, biases, readout_of(qa), p.integer("nshots")});
    set.add_real("frequency", {freqs.size()}, freqs);
    set.add_real("bias", {biases.size()}, biases);
    echo_pair_and_readout(set, config, pair);
    return set;
  };
  r.fit_target = [](const ArraySet& set, const Params&) {
    const auto peaks = two_peak_rows(set);
    const auto freqs = set.real("frequency");
    const auto biases = set.real("bias");
    const double f_center = 0.5 * (freqs.front() + freqs.back());
    const double b_center = 0.5 * (biases.front() + biases.back());
    TargetResult res;
    res.quality = FitQuality::kGood;
    const std::size_t n = peaks.bias.size();
    if (n < 3) {
      res.quality = FitQuality::kPoor;
      res.flags.push_back("no crossing in range");
      res.message = "fewer than three bias points show both branches";
      return res;
    }
    // Seeds: closest approach fixes fB and g; the branch sum fA + fB is fitted by a quadratic.
    std::size_t closest = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (peaks.upper[i] - peaks.lower[i] < peaks.upper[closest] - peaks.lower[closest]) closest = i;
    const double fb0 = 0.5 * (peaks.upper[closest] + peaks.lower[closest]);
    const double g0 = 0.5 * (peaks.upper[closest] - peaks.lower[closest]);
    Eigen::MatrixXd design(Eigen::Index(n), 3);
    Vec sums(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      design.row(Eigen::Index(i)) << 1.0, peaks.bias[i], peaks.bias[i] * peaks.bias[i];
      sums[Eigen::Index(i)] = peaks.upper[i] + peaks.lower[i] - fb0;
    }
    const Vec c = design.colPivHouseholderQr().solve(sums);
    Vec x0(5);
    x0 << fb0, g0, c[0], c[1], c[2];
    numerics::ModelSpec<double> problem;
    problem.n_params = 5;
    problem.n_residuals = Eigen::Index(2 * n);
    problem.residuals = [&peaks, n](const Vec& p) {
      Vec out(Eigen::Index(2 * n));
      for (std::size_t i = 0; i < n; ++i) {
        out[Eigen::Index(2 * i)] = branch(p, peaks.bias[i], true) - peaks.upper[i];
        out[Eigen::Index(2 * i + 1)] = branch(p, peaks.bias[i], false) - peaks.lower[i];
      }
      return out;
    };
    const auto fit = numerics::levenberg_marquardt(problem, x0);
    record_fit(res, fit, {"fB_mhz", "g_mhz", "c0", "c1", "c2"});
    if (!fit.converged) return failed("branch fit did not converge: " + fit.diagnostic);
    const Vec& p = fit.params;
    const double g_hz = std::abs(p[1]) * 1e6;
    res.values["coupling_hz"] = g_hz;
    res.values["coupling_stderr_hz"] = fit.std_errors[1] * 1e6;
    res.values["qubit_b_frequency_hz"] = f_center + p[0] * 1e6;
    double min_gap = INFINITY;
    for (std::size_t i = 0; i < n; ++i) min_gap = std::min(min_gap, (peaks.upper[i] - peaks.lower[i]) * 1e6);
    res.values["min_gap_hz"] = min_gap;
    // Resonance: fA(V) = fB nearest the sweep centre.
    const double a = p[4], b = p[3], cc = p[2] - p[0];
    double v_res = NAN;
    if (std::abs(a) < 1e-12 * std::max(1.0, std::abs(b))) {
      if (b != 0) v_res = -cc / b;
    } else {
      const double disc = b * b - 4 * a * cc;
      if (disc >= 0) {
        const double r1 = (-b + std::sqrt(disc)) / (2 * a), r2 = (-b - std::sqrt(disc)) / (2 * a);
        v_res = std::abs(r1) < std::abs(r2) ? r1 : r2;
      }
    }
    const double v_lo = biases.front() - b_center, v_hi = biases.back() - b_center;
    const double d_lo = branch_detuning(p, v_lo), d_hi = branch_detuning(p, v_hi);
    if (std::isfinite(v_res)) res.values["resonance_bias_v"] = b_center + v_res;
    check_relative_stderr(res, p[1], fit.std_errors[1], "coupling");
    if (!(d_lo * d_hi < 0)) {
      mark_poor(res, "no crossing in range");
      return res;
    }
    res.updates["coupling_hz"] = g_hz;
    return res;
  };
  r.figures = [](const std::string& key, const ArraySet& set, const TargetResult* res) {
    const auto freqs = set.real("frequency");
    const auto biases = set.real("bias");
    const auto all = set.complex("iq");
    Figure f{"Avoided crossing " + key, "bias (V)", "drive frequency (Hz)", {}, {}};
    Heatmap h;
    h.x = biases;
    h.y = freqs;
    const auto signal = project_from(all, median_iq(all));
    // z is row-major per y: transpose the [bias, frequency] map.
    for (std::size_t j = 0; j < freqs.size(); ++j)
      for (std::size_t i = 0; i < biases.size(); ++i) h.z.push_back(signal[i * freqs.size() + j]);
    f.heatmap = h;
    if (res && res->quality != FitQuality::kFailed && res->vectors.count("fit_params")) {
      const Vec p = to_vec(res->vectors.at("fit_params"));
      const double fc = 0.5 * (freqs.front() + freqs.back()), bc = 0.5 * (biases.front() + biases.back());
      for (bool upper : {true, false}) {
        Series s;
        s.label = upper ? "upper branch" : "lower branch";
        s.style = SeriesStyle::kLine;
        for (double v : biases) {
          s.x.push_back(v);
          s.y.push_back(fc + branch(p, v - bc, upper) * 1e6);
        }
        f.series.push_back(s);
      }
    }
    return std::vector<Figure>{f};
  };
  return r;
}

// ---- chevron ---------------------------------------------------------------

struct ColumnFit {
  double amplitude = 0;   // flux amplitude
  double omega_ghz = 0;   // oscillation frequency in 1/ns
  double contrast = 0;
};

std::vector<ColumnFit> chevron_columns(const ArraySet& set, std::vector<double>* probabilities = nullptr) {
  const auto amps = set.real("amplitude");
  const auto durs = set.real("duration_ns");
  const auto prob = excited_probability(set, Orientation::kFirstGround);
  if (probabilities) *probabilities = prob.p;
  std::vector<ColumnFit> out;
  for (std::size_t i = 0; i < amps.size(); ++i) {
    std::vector<double> y(prob.p.begin() + long(i * durs.size()), prob.p.begin() + long((i + 1) * durs.size()));
    numerics::OscillationSeed seed;
    try {
      seed = numerics::oscillation_seed(durs, y);
    } catch (const PreconditionError&) {
      continue;
    }
    if (!(seed.amplitude > 0)) continue;
    Vec x0(4);
    x0 << seed.amplitude, seed.frequency, seed.phase, seed.offset;
    const auto fit = numerics::fit_curve(numerics::cosine<double>(), to_vec(durs), to_vec(y), x0);
    if (!fit.converged) continue;
    double a = fit.params[0], f = fit.params[1], phi = fit.params[2];
    numerics::canonicalize_oscillation(a, f, phi);
    if (!(a > 3 * fit.std_errors[0]) || !(f > 0)) continue;
    out.push_back({amps[i], f, 2 * a});
  }
  return out;
}

Routine make_chevron() {
  Routine r;
  r.name = "chevron";
  r.title = "Chevron";
  r.target_kind = TargetKind::kPair;
  r.defaults = {{"amplitude_width", 0.1}, {"amplitude_step", 0.005}, {"duration_max_ns", 200.0},
                {"duration_step_ns", 2.0}, {"nshots", 512}};
  r.owned_fields = {"cz_flux_amplitude", "cz_duration_ns"};
  r.acquire_target = [](const PlatformConfig& config, const std::string& key, const Params& p, Device& device) {
    const auto& pair = config.pair(key);
    const auto amps = centered_sweep(pair.cz_flux_amplitude, p.number("amplitude_width"), p.number("amplitude_step"),
                                     "amplitude");
    const auto durs = sweep(0.0, p.number("duration_max_ns"), p.number("duration_step_ns"), "duration");
    auto set = device.simulate(
        experiments::Chevron{key, amps, durs, readout_of(config.qubit(pair.qubit_a)), p.integer("nshots")});
    set.add_real("amplitude", {amps.size()}, amps);
    set.add_real("duration_ns", {durs.size()}, durs);
    echo_pair_and_readout(set, config, pair);
    return set;
  };
  r.fit_target = [](const ArraySet& set, const Params&) {
    const auto amps = set.real("amplitude");
    const auto cols = chevron_columns(set);
    TargetResult res;
    res.quality = FitQuality::kGood;
    if (cols.size() < 3) return failed("fewer than three columns show an oscillation");
    // Omega^2 = s^2 (a - a_r)^2 + 4 g^2 is a parabola in the flux amplitude.
    std::vector<double> a, w2;
    for (const auto& c : cols) {
      a.push_back(c.amplitude);
      w2.push_back(c.omega_ghz * c.omega_ghz);
    }
    res.vectors["column_amplitude"] = a;
    res.vectors["column_frequency_ghz"] = [&] {
      std::vector<double> v;
      for (const auto& c : cols) v.push_back(c.omega_ghz);
      return v;
    }();
    const std::size_t k = std::size_t(std::min_element(w2.begin(), w2.end()) - w2.begin());
    const double a_mid = 0.5 * (amps.front() + amps.back());
    Eigen::MatrixXd design(Eigen::Index(a.size()), 3);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = a[i] - a_mid;
      design.row(Eigen::Index(i)) << d * d, d, 1.0;
    }
    const Vec q = design.colPivHouseholderQr().solve(to_vec(w2));
    Vec x0(3);
    if (q[0] > 0) {
      const double v = -q[1] / (2 * q[0]);
      x0 << q[0], a_mid + v, q[2] - q[0] * v * v;
    } else {
      x0 << 1.0, a[k], w2[k];
    }
    if (!(x0[2] > 0)) x0[2] = w2[k];
    const auto fit = numerics::fit_curve(numerics::parabola<double>(), to_vec(a), to_vec(w2), x0);
    record_fit(res, fit, {"curvature", "a_resonance", "omega_sq_min"});
    if (!fit.converged) return failed("chevron parabola fit did not converge: " + fit.diagnostic);
    if (!(fit.params[0] > 0) || !(fit.params[2] > 0)) return failed("no chevron apex found");
    const double a_res = fit.params[1];
    const double omega_apex = std::sqrt(fit.params[2]);  // 1/ns
    const double g_hz = 0.5 * omega_apex * 1e9;
    const double t_swap = 1.0 / (2.0 * omega_apex);
    res.values["cz_flux_amplitude"] = a_res;
    res.values["coupling_hz"] = g_hz;
    res.values["cz_duration_ns"] = t_swap;
    res.values["apex_column_amplitude"] = a[k];
    res.values["apex_column_frequency_hz"] = cols[k].omega_ghz * 1e9;
    if (near_edge(a_res, amps, 0.0)) mark_poor(res, kEdgeFlag);
    check_relative_stderr(res, fit.params[2], fit.std_errors[2], "apex frequency");
    if (res.has_flag(kEdgeFlag)) return res;
    res.updates["cz_flux_amplitude"] = a_res;
    res.updates["cz_duration_ns"] = t_swap;
    return res;
  };
  r.figures = [](const std::string& key, const ArraySet& set, const TargetResult*) {
    const auto amps = set.real("amplitude");
    const auto durs = set.real("duration_ns");
    std::vector<double> p;
    chevron_columns(set, &p);
    Figure f{"Chevron " + key, "flux amplitude", "duration (ns)", {}, {}};
    Heatmap h;
    h.x = amps;
    h.y = durs;
    for (std::size_t j = 0; j < durs.size(); ++j)
      for (std::size_t i = 0; i < amps.size(); ++i) h.z.push_back(p[i * durs.size() + j]);
    f.heatmap = h;
    return std::vector<Figure>{f};
  };
  return r;
}

// ---- CZ virtual phase ------------------------------------------------------

ArraySet control_subset(const ArraySet& set, int control) {
  ArraySet out;
  const std::string prefix = "control_" + std::to_string(control) + ".";
  for (const auto& [name, arr] : set.arrays())
    if (name.rfind(prefix, 0) == 0) out.arrays()[name.substr(prefix.size())] = arr;
  out.metadata() = set.metadata();
  return out;
}

// B + A cos(theta + phi)
numerics::CurveModel<double> phase_cosine() {
  return {"phase_cosine", {"A", "phi", "B"}, [](double th, const Vec& p) { return p[2] + p[0] * std::cos(th + p[1]); }};
}

struct PhaseFit {
  numerics::FitResult<double> fit;
  double phase = 0;
};

PhaseFit fit_phase(const std::vector<double>& theta, const std::vector<double>& y) {
  Eigen::MatrixXd design(Eigen::Index(theta.size()), 3);
  for (std::size_t i = 0; i < theta.size(); ++i)
    design.row(Eigen::Index(i)) << 1.0, std::cos(theta[i]), std::sin(theta[i]);
  const Vec c = design.colPivHouseholderQr().solve(to_vec(y));
  // A cos(t + phi) = A cos(phi) cos(t) - A sin(phi) sin(t)
  Vec x0(3);
  x0 << std::hypot(c[1], c[2]), std::atan2(-c[2], c[1]), c[0];
  if (!(x0[0] > 0)) x0[0] = 1e-3;
  PhaseFit out;
  out.fit = numerics::fit_curve(phase_cosine(), to_vec(theta), to_vec(y), x0);
  double a = out.fit.params[0], phi = out.fit.params[1];
  if (a < 0) phi += kPi;
  out.phase = numerics::wrap_angle(phi);
  return out;
}

Routine make_cz_virtual_phase() {
  Routine r;
  r.name = "cz_virtual_phase";
  r.title = "CZ virtual phase";
  r.target_kind = TargetKind::kPair;
  r.defaults = {{"phase_min_rad", 0.0}, {"phase_max_rad", 2 * kPi}, {"phase_step_rad", kPi / 20}, {"nshots", 512}};
  r.owned_fields = {"conditional_phase_rad", "virtual_phase_rad.*"};
  r.acquire_target = [](const PlatformConfig& config, const std::string& key, const Params& p, Device& device) {
    const auto& pair = config.pair(key);
    const auto phases = sweep(p.number("phase_min_rad"), p.number("phase_max_rad"), p.number("phase_step_rad"), "phase");
    ArraySet set;
    for (int control : {0, 1}) {
      auto part = device.simulate(experiments::CzPhase{key, phases, control, readout_of(config.qubit(pair.qubit_a)),
                                                       p.integer("nshots")});
      for (const auto& [name, arr] : part.arrays())
        set.arrays()["control_" + std::to_string(control) + "." + name] = arr;
    }
    set.add_real("phase_rad", {phases.size()}, phases);
    echo_pair_and_readout(set, config, pair);
    return set;
  };
  r.fit_target = [](const ArraySet& set, const Params&) {
    const auto theta = set.real("phase_rad");
    const auto p0 = excited_probability(control_subset(set, 0), Orientation::kFirstExcited);
    const auto p1 = excited_probability(control_subset(set, 1), Orientation::kFirstExcited);
    const auto f0 = fit_phase(theta, p0.p);
    const auto f1 = fit_phase(theta, p1.p);
    TargetResult res;
    res.quality = FitQuality::kGood;
    record_fit(res, f0.fit, {"A", "phi", "B"});
    res.vectors["fit_params_control_1"] = to_std(f1.fit.params);
    res.fit.converged = f0.fit.converged && f1.fit.converged;
    if (!res.fit.converged) return failed("phase fit did not converge");
    const double phi_c = numerics::wrap_angle(f1.phase - f0.phase);
    const double correction = numerics::wrap_angle(-f0.phase);
    const std::string qa = pair_echo(set).at("qubit_a").get<std::string>();
    res.values["phase_control_0_rad"] = f0.phase;
    res.values["phase_control_1_rad"] = f1.phase;
    res.values["conditional_phase_rad"] = phi_c;
    res.values["virtual_phase_rad"] = correction;
    if (p0.uncalibrated || p1.uncalibrated) {
      res.flags.push_back(kUncalibratedFlag);
      mark_poor(res, "phase sign ambiguous without a classifier");
      return res;
    }
    res.updates["conditional_phase_rad"] = phi_c;
    res.updates["virtual_phase_rad." + qa] = correction;
    return res;
  };
  r.figures = [](const std::string& key, const ArraySet& set, const TargetResult* res) {
    const auto theta = set.real("phase_rad");
    Figure f{"CZ virtual phase " + key, "phase (rad)", "excited-state probability", {}, {}};
    const char* names[2] = {"control |0>", "control |1>"};
    for (int c : {0, 1}) {
      const auto p = excited_probability(control_subset(set, c), Orientation::kFirstExcited);
      f.series.push_back({names[c], theta, p.p, SeriesStyle::kMarkers, ""});
    }
    if (res && res->quality != FitQuality::kFailed && res->vectors.count("fit_params")) {
      f.series.push_back(fit_curve_series(phase_cosine(), to_vec(res->vectors.at("fit_params")), theta, "fit |0>"));
      f.series.push_back(
          fit_curve_series(phase_cosine(), to_vec(res->vectors.at("fit_params_control_1")), theta, "fit |1>"));
    }
    return std::vector<Figure>{f};
  };
  return r;
}

}  // namespace

Routine avoided_crossing() { return make_avoided_crossing(); }
Routine chevron() { return make_chevron(); }
Routine cz_virtual_phase() { return make_cz_virtual_phase(); }

}  // namespace qcal::protocols
