#include <algorithm>
#include <cmath>
#include <numbers>

#include "catalog.h"
#include "common.h"
#include "qcal/error.h"

namespace qcal::protocols {
namespace {

constexpr double kPi = std::numbers::pi;

// Peak of the two-tone response: IQ projected away from the median point.
LorentzFit fit_drive_peak(const std::vector<double>& freqs, const std::vector<std::complex<double>>& iq) {
  return fit_lorentzian(freqs, project_from(iq, median_iq(iq)), false);
}

bool peak_found(const LorentzFit& lf) {
  return lf.fit.converged && lf.amplitude > 0 && lf.amplitude > 3 * lf.amplitude_err;
}

Series drive_fit_series(const LorentzFit& lf, const std::vector<double>& freqs) {
  Series s;
  s.label = "fit";
  s.style = SeriesStyle::kLine;
  for (int i = 0; i < 200; ++i) {
    const double f = freqs.front() + (freqs.back() - freqs.front()) * i / 199.0;
    s.x.push_back(f);
    s.y.push_back(eval_lorentz_fit(lf, f));
  }
  return s;
}

Routine make_qubit_spectroscopy() {
  Routine r;
  r.name = "qubit_spectroscopy";
  r.title = "Qubit spectroscopy";
  r.defaults = {{"freq_width_hz", 20e6}, {"freq_step_hz", 0.25e6}, {"nshots", 1000}};
  r.owned_fields = {"drive_frequency_hz"};
  r.acquire_target = [](const PlatformConfig& config, const std::string& t, const Params& p, Device& device) {
    const auto& q = config.qubit(t);
    const auto freqs =
        centered_sweep(q.drive_frequency_hz, p.number("freq_width_hz"), p.number("freq_step_hz"), "frequency");
    auto set = device.simulate(experiments::DriveSweep{t, freqs, q.flux_bias_v, readout_of(q), p.integer("nshots")});
    set.add_real("frequency", {freqs.size()}, freqs);
    echo_qubit(set, q);
    return set;
  };
  r.fit_target = [](const ArraySet& set, const Params&) {
    const auto freqs = set.real("frequency");
    const auto lf = fit_drive_peak(freqs, set.complex("iq"));
    TargetResult res;
    res.quality = FitQuality::kGood;
    record_fit(res, lf.fit, {"A", "f0_mhz", "w_mhz", "B"});
    if (!peak_found(lf)) return failed("no qubit peak found" + (lf.fit.diagnostic.empty() ? "" : ": " + lf.fit.diagnostic));
    res.values["frequency_hz"] = lf.f0;
    res.values["linewidth_hz"] = lf.w;
    res.values["frequency_stderr_hz"] = lf.f0_err;
    if (near_edge(lf.f0, freqs, 0.05)) mark_poor(res, kEdgeFlag);
    check_relative_stderr(res, lf.w, lf.f0_err, "centre");
    res.updates["drive_frequency_hz"] = lf.f0;
    return res;
  };
  r.figures = [](const std::string& t, const ArraySet& set, const TargetResult* res) {
    const auto freqs = set.real("frequency");
    const auto iq = set.complex("iq");
    Figure f{"Qubit spectroscopy " + t, "drive frequency (Hz)", "signal (a.u.)", {}, {}};
    f.series.push_back({"data", freqs, project_from(iq, median_iq(iq)), SeriesStyle::kMarkers, ""});
    if (res && res->quality != FitQuality::kFailed) f.series.push_back(drive_fit_series(fit_drive_peak(freqs, iq), freqs));
    return std::vector<Figure>{f};
  };
  return r;
}

// f_max sqrt(|cos(pi (V - V_ss) / V_p)|) with frequencies in GHz.
numerics::CurveModel<double> flux_model() {
  return {"flux_dependence", {"f_max_ghz", "v_sweetspot", "v_period"}, [](double v, const Vec& p) {
            return p[0] * std::sqrt(std::abs(std::cos(kPi * (v - p[1]) / p[2])));
          }};
}

Routine make_qubit_flux_dependence() {
  Routine r;
  r.name = "qubit_flux_dependence";
  r.title = "Qubit flux dependence";
  r.defaults = {{"freq_width_hz", 1.2e9},  {"freq_step_hz", 2e6},    {"bias_min_v", -0.2},
                {"bias_max_v", 0.2},       {"bias_step_v", 0.02},    {"nshots", 100}};
  r.owned_fields = {"sweetspot_v"};
  r.acquire_target = [](const PlatformConfig& config, const std::string& t, const Params& p, Device& device) {
    const auto& q = config.qubit(t);
    const auto freqs =
        centered_sweep(q.drive_frequency_hz, p.number("freq_width_hz"), p.number("freq_step_hz"), "frequency");
    auto biases = sweep(p.number("bias_min_v"), p.number("bias_max_v"), p.number("bias_step_v"), "bias");
    if (biases.size() < 5) throw PreconditionError("qubit_flux_dependence needs at least 5 bias points");
    for (auto& b : biases) b += q.sweetspot_v;
    auto set = device.simulate(experiments::FluxMap{t, freqs, biases, readout_of(q), p.integer("nshots")});
    set.add_real("frequency", {freqs.size()}, freqs);
    set.add_real("bias", {biases.size()}, biases);
    echo_qubit(set, q);
    return set;
  };
  r.fit_target = [](const ArraySet& set, const Params&) {
    const auto freqs = set.real("frequency");
    const auto biases = set.real("bias");
    const auto iq = set.complex("iq");
    const std::size_t nf = freqs.size();
    std::vector<double> vs, fs;
    for (std::size_t b = 0; b < biases.size(); ++b) {
      std::vector<std::complex<double>> row(iq.begin() + b * nf, iq.begin() + (b + 1) * nf);
      const auto lf = fit_drive_peak(freqs, row);
      if (!peak_found(lf) || near_edge(lf.f0, freqs, 0.01)) continue;
      vs.push_back(biases[b]);
      fs.push_back(lf.f0 / 1e9);
    }
    TargetResult res;
    res.quality = FitQuality::kGood;
    res.vectors["peak_bias_v"] = vs;
    std::vector<double> peaks_hz;
    for (double f : fs) peaks_hz.push_back(f * 1e9);
    res.vectors["peak_frequency_hz"] = peaks_hz;
    if (vs.size() < 4) return failed("fewer than 4 bias points show a qubit peak");
    const std::size_t top = std::max_element(fs.begin(), fs.end()) - fs.begin();
    const std::size_t low = std::min_element(fs.begin(), fs.end()) - fs.begin();
    double period = 1.0;
    const double u = std::acos(std::min(1.0, std::pow(fs[low] / fs[top], 2)));
    if (u > 1e-6 && vs[low] != vs[top]) period = kPi * std::abs(vs[low] - vs[top]) / u;
    Vec x0(3);
    x0 << fs[top], vs[top], period;
    const auto fit = numerics::fit_curve(flux_model(), to_vec(vs), to_vec(fs), x0,
                                         {{0.0, INFINITY}, {-INFINITY, INFINITY}, {1e-6, INFINITY}});
    record_fit(res, fit, {"f_max_ghz", "v_sweetspot", "v_period"});
    if (!fit.converged) return failed("flux model fit did not converge: " + fit.diagnostic);
    res.values["f_max_hz"] = fit.params[0] * 1e9;
    res.values["sweetspot_v"] = fit.params[1];
    res.values["v_period"] = fit.params[2];
    check_relative_stderr(res, fit.params[0], fit.std_errors[0], "f_max");
    check_relative_stderr(res, fit.params[2], fit.std_errors[2], "period");
    check_relative_stderr(res, fit.params[2], fit.std_errors[1], "sweetspot");
    if (near_edge(fit.params[1], biases, 0.0)) mark_poor(res, kEdgeFlag);
    res.updates["sweetspot_v"] = fit.params[1];
    return res;
  };
  r.figures = [](const std::string& t, const ArraySet& set, const TargetResult* res) {
    Figure f{"Qubit flux dependence " + t, "drive frequency (Hz)", "bias (V)", {}, {}};
    const auto freqs = set.real("frequency");
    const auto biases = set.real("bias");
    const auto iq = set.complex("iq");
    Heatmap h{freqs, biases, {}};
    const std::size_t nf = freqs.size();
    for (std::size_t b = 0; b < biases.size(); ++b) {
      std::vector<std::complex<double>> row(iq.begin() + b * nf, iq.begin() + (b + 1) * nf);
      for (double v : project_from(row, median_iq(row))) h.z.push_back(v);
    }
    f.heatmap = h;
    if (res && res->vectors.count("peak_frequency_hz"))
      f.series.push_back({"peaks", res->vectors.at("peak_frequency_hz"), res->vectors.at("peak_bias_v"),
                          SeriesStyle::kMarkers, "#ffffff"});
    if (res && res->quality != FitQuality::kFailed && res->values.count("f_max_hz")) {
      Series s;
      s.label = "fit";
      s.style = SeriesStyle::kLine;
      s.color = "#ff4040";
      const Vec p = to_vec(res->vectors.at("fit_params"));
      for (int i = 0; i < 200; ++i) {
        const double v = biases.front() + (biases.back() - biases.front()) * i / 199.0;
        s.x.push_back(flux_model()(v, p) * 1e9);
        s.y.push_back(v);
      }
      f.series.push_back(s);
    }
    return std::vector<Figure>{f};
  };
  return r;
}

}  // namespace

Routine qubit_spectroscopy() { return make_qubit_spectroscopy(); }
Routine qubit_flux_dependence() { return make_qubit_flux_dependence(); }

}  // namespace qcal::protocols
