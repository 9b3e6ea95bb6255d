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

void store_probability_series(Figure& f, const std::vector<double>& x, const ArraySet& set, Orientation o) {
  const auto prob = excited_probability(set, o);
  f.series.push_back({"data", x, prob.p, SeriesStyle::kMarkers, ""});
}

void note_readout(TargetResult& r, const Probabilities& prob) {
  if (prob.uncalibrated) r.flags.push_back(kUncalibratedFlag);
}

// Best of several LM starts, judged by final cost.
numerics::FitResult<double> best_fit(const numerics::CurveModel<double>& model, const Vec& x, const Vec& y,
                                     const std::vector<Vec>& starts,
                                     const std::vector<numerics::Bounds<double>>& bounds = {}) {
  numerics::FitResult<double> best;
  bool have = false;
  for (const auto& x0 : starts) {
    numerics::FitResult<double> fit;
    try {
      fit = numerics::fit_curve(model, x, y, x0, bounds);
    } catch (const PreconditionError&) {
      continue;
    }
    if (!fit.params.allFinite()) continue;
    const bool better = !have || (fit.converged && !best.converged) ||
                        (fit.converged == best.converged && fit.cost < best.cost);
    if (better) {
      best = fit;
      have = true;
    }
  }
  if (!have) throw Error("no fit start produced a finite result");
  return best;
}

double shot_noise_scale(const ArraySet& set) {
  if (set.has("probability")) return 0.0;
  const auto& shape = set.at("shots").shape;
  return std::sqrt(0.25 / double(shape[shape.size() - 2]));
}

// ---- Rabi ------------------------------------------------------------------

// B + A cos(2 pi f x): no rotation at zero amplitude or duration fixes the phase.
numerics::CurveModel<double> rabi_model() {
  return {"rabi_cosine", {"A", "f", "B"}, [](double x, const Vec& p) {
            return p[2] + p[0] * std::cos(2 * kPi * p[1] * x);
          }};
}

Routine make_rabi() {
  Routine r;
  r.name = "rabi";
  r.title = "Rabi oscillation";
  r.defaults = {{"mode", "amplitude"},       {"amplitude_min", 0.0},     {"amplitude_max", 1.0},
                {"amplitude_step", 0.02},    {"duration_min_ns", 0.0},   {"duration_max_ns", 200.0},
                {"duration_step_ns", 4.0},   {"nshots", 512}};
  r.owned_fields = {"pi_pulse_amplitude", "pi_pulse_duration_ns"};
  r.acquire_target = [](const PlatformConfig& config, const std::string& t, const Params& p, Device& device) {
    const auto& q = config.qubit(t);
    const std::string mode = p.text("mode");
    ArraySet set;
    if (mode == "amplitude") {
      const auto amps = sweep(p.number("amplitude_min"), p.number("amplitude_max"), p.number("amplitude_step"), "amplitude");
      set = device.simulate(
          experiments::RabiAmplitude{t, amps, q.drive_frequency_hz, readout_of(q), p.integer("nshots")});
      set.add_real("sweep", {amps.size()}, amps);
    } else if (mode == "duration") {
      const auto durs =
          sweep(p.number("duration_min_ns"), p.number("duration_max_ns"), p.number("duration_step_ns"), "duration");
      set = device.simulate(experiments::RabiDuration{t, durs, q.pi_pulse_amplitude, q.drive_frequency_hz,
                                                      readout_of(q), p.integer("nshots")});
      set.add_real("sweep", {durs.size()}, durs);
    } else {
      throw ValidationError("parameters.mode", "expected 'amplitude' or 'duration'");
    }
    echo_qubit(set, q);
    return set;
  };
  r.fit_target = [](const ArraySet& set, const Params& p) {
    const bool amplitude_mode = p.text("mode") == "amplitude";
    const auto x = set.real("sweep");
    const auto prob = excited_probability(set, Orientation::kFirstGround);
    const auto seed = numerics::oscillation_seed(x, prob.p);
    std::vector<Vec> starts;
    for (double scale : {1.0, 0.7, 1.4})
      for (double sign : {-1.0, 1.0}) {
        Vec s(3);
        s << sign * std::max(seed.amplitude, 0.05), seed.frequency * scale, seed.offset;
        starts.push_back(s);
      }
    const auto fit = best_fit(rabi_model(), to_vec(x), to_vec(prob.p), starts);
    TargetResult res;
    res.quality = FitQuality::kGood;
    note_readout(res, prob);
    record_fit(res, fit, {"A", "f", "B"});
    if (!fit.converged) return failed("cosine fit did not converge: " + fit.diagnostic);
    const double a = std::abs(fit.params[0]), f = std::abs(fit.params[1]);
    if (!(f > 0)) return failed("no oscillation found");
    const double half = 1.0 / (2.0 * f);
    const double span = x.back() - x.front();
    res.values["frequency"] = f;
    res.values["contrast"] = 2 * a;
    res.values[amplitude_mode ? "pi_amplitude" : "pi_duration_ns"] = half;
    check_relative_stderr(res, f, fit.std_errors[1], "oscillation frequency");
    if (span * f < 0.5) {
      mark_poor(res, "sweep covers less than half a period");
      return res;
    }
    if (fit.params[0] > 0) {
      mark_poor(res, "excited population is highest without drive");
      return res;
    }
    if (amplitude_mode && half > 1.0) {
      mark_poor(res, "pi amplitude outside [0, 1]");
      return res;
    }
    res.updates[amplitude_mode ? "pi_pulse_amplitude" : "pi_pulse_duration_ns"] = half;
    return res;
  };
  r.figures = [](const std::string& t, const ArraySet& set, const TargetResult* res) {
    const auto x = set.real("sweep");
    const bool amp = set.at("sweep").shape.size() == 1 && res && res->values.count("pi_amplitude");
    Figure f{"Rabi " + t, amp ? "drive amplitude" : "sweep", "excited-state probability", {}, {}};
    store_probability_series(f, x, set, Orientation::kFirstGround);
    if (res && res->quality != FitQuality::kFailed && res->vectors.count("fit_params"))
      f.series.push_back(fit_curve_series(rabi_model(), to_vec(res->vectors.at("fit_params")), x));
    return std::vector<Figure>{f};
  };
  return r;
}

// ---- Ramsey ----------------------------------------------------------------

Routine make_ramsey() {
  Routine r;
  r.name = "ramsey";
  r.title = "Ramsey";
  r.defaults = {{"delay_min_ns", 0.0},      {"delay_max_ns", 4000.0}, {"delay_step_ns", 40.0},
                {"artificial_detuning_hz", 2e6}, {"nshots", 512}};
  r.owned_fields = {"drive_frequency_hz", "t2_ramsey_ns"};
  r.acquire_target = [](const PlatformConfig& config, const std::string& t, const Params& p, Device& device) {
    const auto& q = config.qubit(t);
    const auto delays = sweep(p.number("delay_min_ns"), p.number("delay_max_ns"), p.number("delay_step_ns"), "delay");
    auto set = device.simulate(experiments::Ramsey{t, delays, q.drive_frequency_hz, p.number("artificial_detuning_hz"),
                                                   readout_of(q), p.integer("nshots")});
    set.add_real("delay_ns", {delays.size()}, delays);
    echo_qubit(set, q);
    return set;
  };
  r.fit_target = [](const ArraySet& set, const Params& p) {
    const double detuning = p.number("artificial_detuning_hz");
    if (!(detuning > 0)) return failed("artificial_detuning_hz must be positive");
    const auto x = set.real("delay_ns");
    const auto prob = excited_probability(set, Orientation::kFirstExcited);
    const auto seed = numerics::oscillation_seed(x, prob.p);
    const double span = x.back() - x.front();
    std::vector<Vec> starts;
    for (double tscale : {0.5, 1.0, 3.0}) {
      Vec s(5);
      s << std::max(seed.amplitude, 0.05), seed.frequency, seed.phase, span * tscale, seed.offset;
      starts.push_back(s);
    }
    const auto fit = best_fit(numerics::damped_cos<double>(), to_vec(x), to_vec(prob.p), starts,
                              {{-INFINITY, INFINITY}, {-INFINITY, INFINITY}, {-INFINITY, INFINITY},
                               {span * 1e-3, span * 1e3}, {-INFINITY, INFINITY}});
    TargetResult res;
    res.quality = FitQuality::kGood;
    note_readout(res, prob);
    record_fit(res, fit, {"A", "f", "phi", "T", "B"});
    if (!fit.converged) return failed("damped cosine fit did not converge: " + fit.diagnostic);
    double a = fit.params[0], f = fit.params[1], phi = fit.params[2];
    numerics::canonicalize_oscillation(a, f, phi);
    const double f_hz = f * 1e9;
    const double t2 = fit.params[3];
    const double drive = config_echo(set).at("drive_frequency_hz").get<double>();
    res.values["frequency_hz"] = f_hz;
    res.values["t2_ramsey_ns"] = t2;
    res.values["drive_error_hz"] = f_hz - detuning;
    res.values["drive_frequency_hz"] = drive + detuning - f_hz;
    check_relative_stderr(res, t2, fit.std_errors[3], "T2*");
    check_relative_stderr(res, f, fit.std_errors[1], "frequency");
    res.updates["drive_frequency_hz"] = drive + detuning - f_hz;
    res.updates["t2_ramsey_ns"] = t2;
    return res;
  };
  r.figures = [](const std::string& t, const ArraySet& set, const TargetResult* res) {
    const auto x = set.real("delay_ns");
    Figure f{"Ramsey " + t, "delay (ns)", "excited-state probability", {}, {}};
    store_probability_series(f, x, set, Orientation::kFirstExcited);
    if (res && res->quality != FitQuality::kFailed && res->vectors.count("fit_params"))
      f.series.push_back(fit_curve_series(numerics::damped_cos<double>(), to_vec(res->vectors.at("fit_params")), x));
    return std::vector<Figure>{f};
  };
  return r;
}

// ---- T1 / echo -------------------------------------------------------------

Routine make_coherence_decay() {
  Routine r;
  r.name = "coherence_decay";
  r.title = "Coherence decay";
  r.defaults = {{"kind", "t1"},
                {"delay_min_ns", 0.0},
                {"delay_max_ns", 50000.0},
                {"delay_step_ns", 1000.0},
                {"nshots", 512}};
  r.owned_fields = {"t1_ns", "t2_echo_ns"};
  r.acquire_target = [](const PlatformConfig& config, const std::string& t, const Params& p, Device& device) {
    const auto& q = config.qubit(t);
    const auto delays = sweep(p.number("delay_min_ns"), p.number("delay_max_ns"), p.number("delay_step_ns"), "delay");
    const std::string kind = p.text("kind");
    ArraySet set;
    if (kind == "t1") {
      set = device.simulate(experiments::T1{t, delays, readout_of(q), p.integer("nshots")});
    } else if (kind == "echo") {
      set = device.simulate(experiments::Echo{t, delays, readout_of(q), p.integer("nshots")});
    } else {
      throw ValidationError("parameters.kind", "expected 't1' or 'echo'");
    }
    set.add_real("delay_ns", {delays.size()}, delays);
    echo_qubit(set, q);
    return set;
  };
  r.fit_target = [](const ArraySet& set, const Params& p) {
    const auto x = set.real("delay_ns");
    const auto prob = excited_probability(set, Orientation::kFirstExcited);
    const auto& y = prob.p;
    const double y0 = y.front(), y1 = y.back();
    const double level = y1 + (y0 - y1) / std::exp(1.0);
    double t_seed = (x.back() - x.front()) / 3;
    for (std::size_t i = 1; i < y.size(); ++i) {
      if ((y[i - 1] - level) * (y[i] - level) <= 0 && y[i - 1] != y[i]) {
        t_seed = std::max(x[i - 1] + (level - y[i - 1]) * (x[i] - x[i - 1]) / (y[i] - y[i - 1]) - x.front(),
                          (x[1] - x[0]) / 2);
        break;
      }
    }
    Vec x0(3);
    x0 << y0 - y1, t_seed, y1;
    const double span = x.back() - x.front();
    const auto fit = numerics::fit_curve(numerics::exp_decay<double>(), to_vec(x), to_vec(y), x0,
                                         {{-INFINITY, INFINITY}, {span * 1e-4, span * 1e4}, {-INFINITY, INFINITY}});
    TargetResult res;
    res.quality = FitQuality::kGood;
    note_readout(res, prob);
    record_fit(res, fit, {"A", "T", "B"});
    if (!fit.converged) return failed("exponential fit did not converge: " + fit.diagnostic);
    const double tau = fit.params[1];
    const bool t1 = p.text("kind") == "t1";
    res.values[t1 ? "t1_ns" : "t2_echo_ns"] = tau;
    check_relative_stderr(res, tau, fit.std_errors[1], "decay time");
    if (span < tau) mark_poor(res, "delays shorter than the decay time");
    res.updates[t1 ? "t1_ns" : "t2_echo_ns"] = tau;
    return res;
  };
  r.figures = [](const std::string& t, const ArraySet& set, const TargetResult* res) {
    const auto x = set.real("delay_ns");
    Figure f{"Coherence decay " + t, "delay (ns)", "excited-state probability", {}, {}};
    store_probability_series(f, x, set, Orientation::kFirstExcited);
    if (res && res->quality != FitQuality::kFailed && res->vectors.count("fit_params"))
      f.series.push_back(fit_curve_series(numerics::exp_decay<double>(), to_vec(res->vectors.at("fit_params")), x));
    return std::vector<Figure>{f};
  };
  return r;
}

// ---- flipping --------------------------------------------------------------

// 0.5 + A sin(omega N + phi)
numerics::CurveModel<double> flipping_model() {
  return {"flipping", {"A", "omega", "phi"},
          [](double n, const Vec& p) { return 0.5 + p[0] * std::sin(p[1] * n + p[2]); }};
}

Routine make_flipping() {
  Routine r;
  r.name = "flipping";
  r.title = "Flipping";
  r.defaults = {{"n_flips_max", 40}, {"n_flips_step", 1}, {"nshots", 512}};
  r.owned_fields = {"pi_pulse_amplitude"};
  r.acquire_target = [](const PlatformConfig& config, const std::string& t, const Params& p, Device& device) {
    const auto& q = config.qubit(t);
    const auto flips = sweep(0, p.number("n_flips_max"), p.number("n_flips_step"), "n_flips");
    auto set = device.simulate(
        experiments::Flipping{t, flips, q.pi_pulse_amplitude, readout_of(q), p.integer("nshots")});
    set.add_real("n_flips", {flips.size()}, flips);
    echo_qubit(set, q);
    return set;
  };
  r.fit_target = [](const ArraySet& set, const Params&) {
    const auto n = set.real("n_flips");
    const auto prob = excited_probability(set, Orientation::kFirstGround);
    const auto& y = prob.p;
    const double amp = config_echo(set).at("pi_pulse_amplitude").get<double>();
    TargetResult res;
    res.quality = FitQuality::kGood;
    note_readout(res, prob);
    const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    const double noise = shot_noise_scale(set);
    if (*hi - *lo <= std::max(1e-9, 8 * noise)) {
      res.values["epsilon"] = 0.0;
      res.values["pi_amplitude"] = amp;
      res.flags.push_back("flat trace");
      res.updates["pi_pulse_amplitude"] = amp;
      return res;
    }
    const double n_max = n.back() - n.front();
    const double step = n.size() > 1 ? n[1] - n[0] : 1.0;
    std::vector<Vec> starts;
    const double c_lo = 0.2 / n_max, c_hi = 0.5 / step;
    const int grid = 30;
    for (int i = 0; i < grid; ++i) {
      const double cycles = c_lo * std::pow(c_hi / c_lo, double(i) / (grid - 1));
      for (double phi : {0.0, kPi / 2, kPi, -kPi / 2}) {
        Vec s(3);
        s << (*hi - *lo) / 2, 2 * kPi * cycles, phi;
        starts.push_back(s);
      }
    }
    const auto fit = best_fit(flipping_model(), to_vec(n), to_vec(y), starts,
                              {{-1.0, 1.0}, {0.0, kPi / step}, {-2 * kPi, 2 * kPi}});
    record_fit(res, fit, {"A", "omega", "phi"});
    if (!fit.converged) return failed("flipping fit did not converge: " + fit.diagnostic);
    double a = fit.params[0], omega = fit.params[1], phi = fit.params[2];
    if (omega < 0) {
      omega = -omega;
      phi = kPi - phi;
    }
    if (a < 0) {
      a = -a;
      phi += kPi;
    }
    phi = numerics::wrap_angle(phi);
    const double eps = omega / (2 * kPi) * (std::cos(phi) > 0 ? 1.0 : -1.0);
    res.values["epsilon"] = eps;
    res.values["pi_amplitude"] = amp / (1 + eps);
    res.values["phase"] = phi;
    check_relative_stderr(res, omega, fit.std_errors[1], "rotation rate");
    res.updates["pi_pulse_amplitude"] = amp / (1 + eps);
    return res;
  };
  r.figures = [](const std::string& t, const ArraySet& set, const TargetResult* res) {
    const auto x = set.real("n_flips");
    Figure f{"Flipping " + t, "number of flips", "excited-state probability", {}, {}};
    store_probability_series(f, x, set, Orientation::kFirstGround);
    if (res && res->quality != FitQuality::kFailed && res->vectors.count("fit_params"))
      f.series.push_back(fit_curve_series(flipping_model(), to_vec(res->vectors.at("fit_params")), x));
    return std::vector<Figure>{f};
  };
  return r;
}

// ---- DRAG ------------------------------------------------------------------

Routine make_drag_tuning() {
  Routine r;
  r.name = "drag_tuning";
  r.title = "DRAG tuning";
  r.defaults = {{"beta_min", -0.2}, {"beta_max", 0.4}, {"beta_step", 0.02}, {"repetitions", 5}, {"nshots", 512}};
  r.owned_fields = {"drag_beta"};
  r.acquire_target = [](const PlatformConfig& config, const std::string& t, const Params& p, Device& device) {
    const auto& q = config.qubit(t);
    const auto betas = sweep(p.number("beta_min"), p.number("beta_max"), p.number("beta_step"), "beta");
    auto set = device.simulate(
        experiments::DragSweep{t, betas, p.integer("repetitions"), readout_of(q), p.integer("nshots")});
    set.add_real("beta", {betas.size()}, betas);
    echo_qubit(set, q);
    return set;
  };
  r.fit_target = [](const ArraySet& set, const Params&) {
    const auto x = set.real("beta");
    const auto prob = excited_probability(set, Orientation::kFirstExcited);
    // Seed from the linear least-squares quadratic.
    Eigen::MatrixXd design(x.size(), 3);
    for (std::size_t i = 0; i < x.size(); ++i) design.row(i) << x[i] * x[i], x[i], 1.0;
    const Vec coef = design.colPivHouseholderQr().solve(to_vec(prob.p));
    Vec x0(3);
    const double a = coef[0];
    const double vertex = a != 0 ? -coef[1] / (2 * a) : 0.5 * (x.front() + x.back());
    x0 << a, vertex, coef[2] - (a != 0 ? coef[1] * coef[1] / (4 * a) : 0.0);
    const auto fit = numerics::fit_curve(numerics::parabola<double>(), to_vec(x), to_vec(prob.p), x0);
    TargetResult res;
    res.quality = FitQuality::kGood;
    note_readout(res, prob);
    record_fit(res, fit, {"a", "x0", "c"});
    if (!fit.converged) return failed("parabola fit did not converge: " + fit.diagnostic);
    res.values["drag_beta"] = fit.params[1];
    res.values["curvature"] = fit.params[0];
    if (!(fit.params[0] > 0)) {
      mark_poor(res, "no minimum in the swept range");
      return res;
    }
    if (fit.params[1] < x.front() || fit.params[1] > x.back()) {
      mark_poor(res, kEdgeFlag);
      return res;
    }
    res.updates["drag_beta"] = fit.params[1];
    return res;
  };
  r.figures = [](const std::string& t, const ArraySet& set, const TargetResult* res) {
    const auto x = set.real("beta");
    Figure f{"DRAG tuning " + t, "DRAG beta", "excited-state probability", {}, {}};
    store_probability_series(f, x, set, Orientation::kFirstExcited);
    if (res && res->quality != FitQuality::kFailed && res->vectors.count("fit_params"))
      f.series.push_back(fit_curve_series(numerics::parabola<double>(), to_vec(res->vectors.at("fit_params")), x));
    return std::vector<Figure>{f};
  };
  return r;
}

}  // namespace

Routine rabi() { return make_rabi(); }
Routine ramsey() { return make_ramsey(); }
Routine coherence_decay() { return make_coherence_decay(); }
Routine flipping() { return make_flipping(); }
Routine drag_tuning() { return make_drag_tuning(); }

}  // namespace qcal::protocols
