#include <algorithm>
#include <cmath>

#include "catalog.h"
#include "common.h"
#include "qcal/numerics/models.h"

namespace qcal::protocols {
namespace {

std::vector<double> squared_magnitude(const std::vector<std::complex<double>>& iq) {
  std::vector<double> out;
  for (const auto& z : iq) out.push_back(std::norm(z));
  return out;
}

Routine make_resonator_spectroscopy() {
  Routine r;
  r.name = "resonator_spectroscopy";
  r.title = "Resonator spectroscopy";
  r.defaults = {{"freq_width_hz", 4e6}, {"freq_step_hz", 50e3}, {"nshots", 1000}, {"prepared_state", 0}};
  r.owned_fields = {"readout_frequency_hz"};
  r.acquire_target = [](const PlatformConfig& config, const std::string& t, const Params& p, Device& device) {
    const auto& q = config.qubit(t);
    const auto freqs =
        centered_sweep(q.readout_frequency_hz, p.number("freq_width_hz"), p.number("freq_step_hz"), "frequency");
    auto set = device.simulate(
        experiments::ReadoutSweep{t, freqs, q.readout_amplitude, p.integer("prepared_state"), p.integer("nshots")});
    set.add_real("frequency", {freqs.size()}, freqs);
    echo_qubit(set, q);
    return set;
  };
  r.fit_target = [](const ArraySet& set, const Params&) {
    const auto freqs = set.real("frequency");
    const auto y = squared_magnitude(set.complex("iq"));
    const auto lf = fit_lorentzian(freqs, y, true);
    TargetResult res;
    res.quality = FitQuality::kGood;
    record_fit(res, lf.fit, {"A", "f0_mhz", "w_mhz", "B"});
    if (!lf.fit.converged) return failed("Lorentzian fit did not converge: " + lf.fit.diagnostic);
    if (!(lf.amplitude < 0) || !(std::abs(lf.amplitude) > 3 * lf.amplitude_err))
      return failed("no resonance dip found");
    res.values["frequency_hz"] = lf.f0;
    res.values["linewidth_hz"] = lf.w;
    res.values["depth"] = -lf.amplitude;
    res.values["frequency_stderr_hz"] = lf.f0_err;
    if (near_edge(lf.f0, freqs)) mark_poor(res, kEdgeFlag);
    check_relative_stderr(res, lf.w, lf.f0_err, "centre");
    check_relative_stderr(res, lf.w, lf.w_err, "linewidth");
    res.updates["readout_frequency_hz"] = lf.f0;
    return res;
  };
  r.figures = [](const std::string& t, const ArraySet& set, const TargetResult* res) {
    Figure f{"Resonator spectroscopy " + t, "readout frequency (Hz)", "|IQ|^2 (a.u.)", {}, {}};
    f.series.push_back({"data", set.real("frequency"), squared_magnitude(set.complex("iq")), SeriesStyle::kMarkers, ""});
    if (res && res->quality != FitQuality::kFailed && res->values.count("frequency_hz")) {
      const auto& p = res->vectors.at("fit_params");
      const auto freqs = set.real("frequency");
      const double center = 0.5 * (freqs.front() + freqs.back());
      Series s;
      s.label = "fit";
      s.style = SeriesStyle::kLine;
      for (int i = 0; i < 200; ++i) {
        const double fr = freqs.front() + (freqs.back() - freqs.front()) * i / 199.0;
        const double u = 2 * ((fr - center) / 1e6 - p[1]) / p[2];
        s.x.push_back(fr);
        s.y.push_back(p[3] + p[0] / (1 + u * u));
      }
      f.series.push_back(s);
    }
    return std::vector<Figure>{f};
  };
  return r;
}

Routine make_resonator_punchout() {
  Routine r;
  r.name = "resonator_punchout";
  r.title = "Resonator punchout";
  r.defaults = {{"freq_width_hz", 8e6},     {"freq_step_hz", 100e3},  {"amplitude_min", 0.05},
                {"amplitude_max", 0.8},     {"amplitude_step", 0.05}, {"nshots", 100}};
  r.owned_fields = {"readout_frequency_hz", "readout_amplitude"};
  r.acquire_target = [](const PlatformConfig& config, const std::string& t, const Params& p, Device& device) {
    const auto& q = config.qubit(t);
    const auto freqs =
        centered_sweep(q.readout_frequency_hz, p.number("freq_width_hz"), p.number("freq_step_hz"), "frequency");
    const auto amps = sweep(p.number("amplitude_min"), p.number("amplitude_max"), p.number("amplitude_step"), "amplitude");
    auto set = device.simulate(experiments::PunchoutSweep{t, freqs, amps, p.integer("nshots")});
    set.add_real("frequency", {freqs.size()}, freqs);
    set.add_real("amplitude", {amps.size()}, amps);
    echo_qubit(set, q);
    return set;
  };
  r.fit_target = [](const ArraySet& set, const Params& p) {
    const auto freqs = set.real("frequency");
    const auto amps = set.real("amplitude");
    const auto iq = set.complex("iq");
    const std::size_t nf = freqs.size();
    std::vector<double> dips;
    for (std::size_t a = 0; a < amps.size(); ++a) {
      std::vector<double> row(nf);
      for (std::size_t i = 0; i < nf; ++i) row[i] = std::norm(iq[a * nf + i]) / (amps[a] * amps[a]);
      dips.push_back(refined_peak(freqs, row, false));
    }
    TargetResult res;
    res.quality = FitQuality::kGood;
    res.vectors["dip_frequency_hz"] = dips;
    std::size_t jump = 0;
    double biggest = 0;
    for (std::size_t i = 0; i + 1 < dips.size(); ++i) {
      if (std::abs(dips[i + 1] - dips[i]) > biggest) {
        biggest = std::abs(dips[i + 1] - dips[i]);
        jump = i;
      }
    }
    auto mean = [](auto first, auto last) {
      double s = 0;
      for (auto it = first; it != last; ++it) s += *it;
      return s / double(last - first);
    };
    if (dips.size() >= 2 && biggest > 3 * p.number("freq_step_hz")) {
      const double dressed = mean(dips.begin(), dips.begin() + jump + 1);
      const double bare = mean(dips.begin() + jump + 1, dips.end());
      res.values["threshold_amplitude"] = amps[jump];
      res.values["f_dressed_hz"] = dressed;
      res.values["f_bare_hz"] = bare;
      res.updates["readout_amplitude"] = amps[jump] / 2;
      res.updates["readout_frequency_hz"] = dressed;
    } else {
      std::vector<double> sorted = dips;
      std::sort(sorted.begin(), sorted.end());
      const double dressed = sorted[sorted.size() / 2];
      res.values["f_dressed_hz"] = dressed;
      mark_poor(res, "single plateau");
      res.message = "no punchout transition inside the amplitude range";
      res.updates["readout_frequency_hz"] = dressed;
    }
    return res;
  };
  r.figures = [](const std::string& t, const ArraySet& set, const TargetResult* res) {
    Figure f{"Resonator punchout " + t, "readout frequency (Hz)", "readout amplitude", {}, {}};
    const auto freqs = set.real("frequency");
    const auto amps = set.real("amplitude");
    const auto iq = set.complex("iq");
    Heatmap h{freqs, amps, {}};
    for (std::size_t a = 0; a < amps.size(); ++a)
      for (std::size_t i = 0; i < freqs.size(); ++i) h.z.push_back(std::abs(iq[a * freqs.size() + i]) / amps[a]);
    f.heatmap = h;
    if (res && res->vectors.count("dip_frequency_hz"))
      f.series.push_back({"dip", res->vectors.at("dip_frequency_hz"), amps, SeriesStyle::kMarkers, "#ffffff"});
    return std::vector<Figure>{f};
  };
  return r;
}

Routine make_readout_frequency_optimization() {
  Routine r;
  r.name = "readout_frequency_optimization";
  r.title = "Readout frequency optimization";
  r.defaults = {{"freq_width_hz", 3e6}, {"freq_step_hz", 50e3}, {"nshots", 1000}};
  r.owned_fields = {"readout_frequency_hz"};
  r.acquire_target = [](const PlatformConfig& config, const std::string& t, const Params& p, Device& device) {
    const auto& q = config.qubit(t);
    const auto freqs =
        centered_sweep(q.readout_frequency_hz, p.number("freq_width_hz"), p.number("freq_step_hz"), "frequency");
    ArraySet set;
    for (int state : {0, 1}) {
      auto s = device.simulate(experiments::ReadoutSweep{t, freqs, q.readout_amplitude, state, p.integer("nshots")});
      set.add_complex("iq" + std::to_string(state), {freqs.size()}, s.complex("iq"));
    }
    set.add_real("frequency", {freqs.size()}, freqs);
    echo_qubit(set, q);
    return set;
  };
  r.fit_target = [](const ArraySet& set, const Params&) {
    const auto freqs = set.real("frequency");
    const auto iq0 = set.complex("iq0"), iq1 = set.complex("iq1");
    std::vector<double> sep(freqs.size());
    for (std::size_t i = 0; i < sep.size(); ++i) sep[i] = std::abs(iq1[i] - iq0[i]);
    std::size_t k = 0;
    const double best = refined_peak(freqs, sep, true, &k);
    TargetResult res;
    res.quality = FitQuality::kGood;
    res.values["frequency_hz"] = best;
    res.values["max_separation"] = sep[k];
    res.vectors["separation"] = sep;
    if (!(sep[k] > 1e-12)) {
      mark_poor(res, "no state separation");
      res.message = "the two states are indistinguishable at every frequency";
      return res;
    }
    if (k == 0 || k + 1 == sep.size()) {
      mark_poor(res, kEdgeFlag);
      return res;
    }
    res.updates["readout_frequency_hz"] = best;
    return res;
  };
  r.figures = [](const std::string& t, const ArraySet& set, const TargetResult* res) {
    Figure f{"Readout frequency optimization " + t, "readout frequency (Hz)", "|IQ1 - IQ0| (a.u.)", {}, {}};
    const auto freqs = set.real("frequency");
    const auto iq0 = set.complex("iq0"), iq1 = set.complex("iq1");
    std::vector<double> sep;
    for (std::size_t i = 0; i < freqs.size(); ++i) sep.push_back(std::abs(iq1[i] - iq0[i]));
    f.series.push_back({"separation", freqs, sep, SeriesStyle::kLine, ""});
    if (res && res->values.count("frequency_hz"))
      f.series.push_back({"optimum", {res->values.at("frequency_hz")}, {res->values.at("max_separation")},
                          SeriesStyle::kMarkers, ""});
    return std::vector<Figure>{f};
  };
  return r;
}

}  // namespace

Routine resonator_spectroscopy() { return make_resonator_spectroscopy(); }
Routine resonator_punchout() { return make_resonator_punchout(); }
Routine readout_frequency_optimization() { return make_readout_frequency_optimization(); }

}  // namespace qcal::protocols
