#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "qcal/device.h"
#include "qcal/error.h"
#include "qcal/executor.h"
#include "qcal/numerics/least_squares.h"
#include "qcal/numerics/models.h"
#include "qcal/platform.h"
#include "qcal/protocols.h"
#include "qcal/report.h"
#include "test_util.h"
#include "xml_tree.h"

using namespace qcal;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

// Added to every seed; set from the command line to probe other random streams.
std::uint64_t g_seed = 0;

struct Verdict {
  bool pass = false;
  std::string detail;
};

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

DeviceTruth quiet_truth() {
  auto t = default_truth();
  for (auto& [id, q] : t.qubits) q.iq_sigma = 0.0;
  t.noise.shot_sampling = false;
  return t;
}

double true_frequency(const DeviceTruth& t, const std::string& q) {
  const auto& qt = t.qubits.at(q);
  return model::qubit_frequency(qt, qt.v_sweetspot);
}

// One protocol on one target, fit included.
TargetResult measure(const std::string& protocol, const PlatformConfig& config, Device& device,
                     const std::string& target, const json& params = json::object()) {
  const auto& r = find_routine(protocol);
  for (const auto& [id, q] : config.qubits) device.set_bias(id, q.flux_bias_v);
  const Data data = r.acquire(config, {target}, params, device);
  return r.fit(data).targets.at(target);
}

double value(const Results& r, const std::string& target, const std::string& key) {
  const auto& t = r.targets.at(target);
  auto it = t.values.find(key);
  if (it == t.values.end()) throw Error(r.protocol + " has no " + key + " (" + t.message + ")");
  return it->second;
}

double value(const TargetResult& t, const std::string& key) {
  auto it = t.values.find(key);
  if (it == t.values.end()) throw Error("missing " + key + " (" + t.message + ")");
  return it->second;
}

// Phi(d / 2 sigma) from the two noiseless state clouds.
double gaussian_fidelity_oracle(const QubitTruth& q, const QubitCalibration& c) {
  const ReadoutSettings ro{c.readout_frequency_hz, c.readout_amplitude};
  const double d = std::abs(model::state_iq(q, 1, ro) - model::state_iq(q, 0, ro));
  return 0.5 * std::erfc(-(d / (2.0 * q.iq_sigma)) / std::sqrt(2.0));
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool report_well_formed(const fs::path& dir, std::string* why) {
  try {
    test::parse_xml(read_file(write_report(dir)));
    return true;
  } catch (const std::exception& e) {
    *why = e.what();
    return false;
  }
}

// ---- 1 ---------------------------------------------------------------------

Verdict closed_loop_calibration() {
  Clock clock;
  test::TempDir tmp;
  const DeviceTruth truth = default_truth();
  const auto& qt = truth.qubits.at("q0");
  PlatformConfig config = calibrated_platform(truth);
  auto& c = config.qubits.at("q0");
  c.drive_frequency_hz -= 2e6;
  c.pi_pulse_amplitude *= 1.08;
  c.classifier.reset();
  c.readout_fidelity.reset();

  ScriptExecutor ex(config, truth, tmp.path() / "run", 11 + g_seed);
  ex.connect();
  const auto flux = ex.qubit_flux_dependence({"q0"});
  const double f_max = value(flux, "q0", "f_max_hz"), v_ss = value(flux, "q0", "sweetspot_v"),
               v_p = value(flux, "q0", "v_period");
  auto& q = ex.platform().qubits.at("q0");
  q.drive_frequency_hz = f_max * std::sqrt(std::abs(std::cos(kPi * (q.flux_bias_v - v_ss) / v_p)));
  ex.apply_updates(ex.rabi({"q0"}));
  ex.apply_updates(ex.single_shot_classification({"q0"}));
  ex.apply_updates(ex.ramsey({"q0"}));
  ex.apply_updates(ex.single_shot_classification({"q0"}));
  ex.coherence_decay({"q0"}, {{"kind", "t1"}});
  ex.ramsey({"q0"});
  ex.disconnect();
  const auto dir = ex.save();

  const auto& fin = ex.platform().qubit("q0");
  const double df = std::abs(fin.drive_frequency_hz - true_frequency(truth, "q0"));
  const double da = std::abs(fin.pi_pulse_amplitude / qt.a_pi_true - 1.0);
  const double oracle = gaussian_fidelity_oracle(qt, fin);
  const double fid = fin.readout_fidelity.value_or(0.0);
  const double secs = clock.seconds();
  std::string why;
  const bool xml = report_well_formed(dir, &why);
  return {df <= 50e3 && da <= 0.01 && std::abs(fid - oracle) <= 0.02 && secs < 60 && xml,
          fmt("|df|=%.0f Hz, |da|/a=%.4f, fidelity %.4f vs oracle %.4f, %.1f s%s", df, da, fid, oracle, secs,
              xml ? "" : (", report: " + why).c_str())};
}

// ---- 2 ---------------------------------------------------------------------

struct ModelCase {
  numerics::CurveModel<double> model;
  std::vector<double> truth;
  double x_lo, x_hi;
};

Verdict fit_oracles() {
  std::vector<ModelCase> cases = {
      {numerics::lorentzian(), {0.8, 5.0, 0.6, 0.1}, 2.0, 8.0},
      {numerics::exp_decay(), {0.9, 12.0, 0.05}, 0.0, 50.0},
      {numerics::damped_cos(), {0.45, 0.25, 0.7, 15.0, 0.5}, 0.0, 40.0},
      {numerics::cosine(), {0.5, 1.3, -0.9, 0.5}, 0.0, 3.0},
      {numerics::parabola(), {2.5, 0.12, 0.3}, -0.3, 0.5},
  };
  std::string detail;
  bool noiseless_ok = true;
  for (const auto& mc : cases) {
    const int n = 101;
    numerics::Vector<double> x(n), y(n), p(static_cast<Eigen::Index>(mc.truth.size())), x0(p.size());
    for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = mc.truth[static_cast<std::size_t>(i)];
    for (int i = 0; i < n; ++i) {
      x[i] = mc.x_lo + (mc.x_hi - mc.x_lo) * i / (n - 1);
      y[i] = mc.model(x[i], p);
    }
    for (Eigen::Index i = 0; i < p.size(); ++i) x0[i] = p[i] * (i % 2 ? 0.9 : 1.1);
    const auto fit = numerics::fit_curve(mc.model, x, y, x0);
    double worst = 0;
    for (Eigen::Index i = 0; i < p.size(); ++i) worst = std::max(worst, std::abs(fit.params[i] - p[i]) / std::abs(p[i]));
    if (!(worst <= 1e-6)) noiseless_ok = false;
    detail += fmt("%s %.1e; ", mc.model.name.c_str(), worst);
  }

  DeviceTruth truth = default_truth();
  const auto& qt = truth.qubits.at("q0");
  const PlatformConfig config = calibrated_platform(truth);
  const double t1 = model::t1_at(qt, qt.v_sweetspot), t2 = model::t2_at(qt, qt.v_sweetspot);
  const double det = 2e6;
  int ok_t1 = 0, ok_t2 = 0, ok_f = 0;
  for (int seed = 1; seed <= 20; ++seed) {
    Device device(truth);
    device.reseed(1000 + seed + g_seed);
    const auto r1 = measure("coherence_decay", config, device, "q0", {{"kind", "t1"}, {"nshots", 4096}});
    const auto r2 = measure("ramsey", config, device, "q0", {{"nshots", 4096}, {"artificial_detuning_hz", det}});
    if (r1.values.count("t1_ns") && std::abs(r1.values.at("t1_ns") / t1 - 1) <= 0.15) ++ok_t1;
    if (r2.values.count("t2_ramsey_ns") && std::abs(r2.values.at("t2_ramsey_ns") / t2 - 1) <= 0.15) ++ok_t2;
    if (r2.values.count("frequency_hz") && std::abs(r2.values.at("frequency_hz") / det - 1) <= 0.15) ++ok_f;
  }
  detail += fmt("shots: T1 %d/20, T2* %d/20, frequency %d/20", ok_t1, ok_t2, ok_f);
  return {noiseless_ok && ok_t1 >= 18 && ok_t2 >= 18 && ok_f >= 18, detail};
}

// ---- 3 ---------------------------------------------------------------------

Verdict flipping_recovery() {
  const std::vector<double> errors = {0.01, -0.01, 0.02, -0.02, 0.05, -0.05};
  bool ok = true;
  std::string detail;
  for (int noisy = 0; noisy < 2; ++noisy) {
    const DeviceTruth truth = noisy ? default_truth() : quiet_truth();
    const double tol = noisy ? 0.25 : 0.10;
    double worst = 0;
    for (double eps : errors) {
      PlatformConfig config = calibrated_platform(truth);
      config.qubits.at("q0").pi_pulse_amplitude = truth.qubits.at("q0").a_pi_true * (1 + eps);
      Device device(truth);
      device.reseed(77 + g_seed);
      const auto r = measure("flipping", config, device, "q0", {{"nshots", 1024}});
      const double got = r.values.count("epsilon") ? r.values.at("epsilon") : 0.0;
      const double rel = std::abs(got - eps) / std::abs(eps);
      worst = std::max(worst, rel);
      if (!(rel <= tol) || (got > 0) != (eps > 0)) ok = false;
    }
    detail += fmt("%s%s worst relative error %.3f", noisy ? "; " : "", noisy ? "1024 shots" : "noiseless", worst);
  }
  return {ok, detail};
}

// ---- 4 ---------------------------------------------------------------------

// Depolarizing parameter per Clifford of two amplitude-damped, dephased X90 pulses.
double rb_prediction(const QubitTruth& q, double t_gate) {
  const double t1 = q.t1_ns, t2 = q.t2_ns;
  const double t_phi_rate = 1.0 / t2 - 1.0 / (2.0 * t1);
  const double transverse = std::exp(-t_gate / (2.0 * t1)) * std::exp(-t_gate * t_phi_rate);
  const double longitudinal = std::exp(-t_gate / t1);
  const double per_pulse = (2.0 * transverse + longitudinal) / 3.0;
  return per_pulse * per_pulse;
}

Verdict rb_decay() {
  DeviceTruth truth = default_truth();
  auto& qt = truth.qubits.at("q0");
  qt.t1_ns = qt.t1_detuned_ns = 40000.0;  // t_gate / T1 = 1e-3
  qt.t2_ns = 60000.0;
  const PlatformConfig config = calibrated_platform(truth);
  const double predicted = rb_prediction(qt, config.qubit("q0").pi_pulse_duration_ns);
  PlatformConfig off = config;
  off.qubits.at("q0").pi_pulse_amplitude *= 1.05;
  double worst = 0;
  bool lower = true;
  for (int seed = 1; seed <= 5; ++seed) {
    Device a(truth), b(truth);
    a.reseed(seed + g_seed);
    b.reseed(seed + g_seed);
    const json params = {{"rng_seed", seed + g_seed}};
    const double p = value(measure("standard_rb", config, a, "q0", params), "decay");
    const double p_off = value(measure("standard_rb", off, b, "q0", params), "decay");
    worst = std::max(worst, std::abs(p - predicted));
    if (!(p_off < p)) lower = false;
  }
  return {worst <= 0.005 && lower,
          fmt("predicted p=%.5f, worst |p-pred|=%.5f, 5%% amplitude error lowers p: %s", predicted, worst,
              lower ? "yes" : "no")};
}

// ---- 5 ---------------------------------------------------------------------

Verdict pulse_optimization() {
  Clock clock;
  test::TempDir tmp;
  const DeviceTruth truth = default_truth();
  const auto& qt = truth.qubits.at("q0");
  PlatformConfig config = calibrated_platform(truth);
  config.qubits.at("q0").pi_pulse_amplitude = qt.a_pi_true * 1.05;
  config.qubits.at("q0").drag_beta = qt.drag_beta_opt + 0.1;
  ScriptExecutor ex(config, truth, tmp.path() / "run", 5 + g_seed);
  ex.connect();
  const ProtocolCall call{"", "optimize_pulse:q0", false};
  const double p0 = value(ex.run_protocol("standard_rb", {"q0"}, json::object(), call), "q0", "decay");
  const auto result = optimize_pulse(ex, "q0", {});
  const double p1 = value(ex.run_protocol("standard_rb", {"q0"}, json::object(), call), "q0", "decay");
  const double amp_err = std::abs(ex.platform().qubit("q0").pi_pulse_amplitude / qt.a_pi_true - 1.0);
  const double secs = clock.seconds();
  const int evals = static_cast<int>(result.history.size());
  return {evals <= 25 && p1 > p0 && amp_err < 0.01 && secs < 120,
          fmt("p %.5f -> %.5f in %d evaluations, amplitude error %.4f, beta %.3f, %.1f s", p0, p1, evals, amp_err,
              ex.platform().qubit("q0").drag_beta, secs)};
}

// ---- 6 ---------------------------------------------------------------------

Verdict flux_drift_recalibration() {
  test::TempDir tmp;
  const DeviceTruth truth = default_truth();
  const auto& qt = truth.qubits.at("q0");
  ScriptExecutor ex(calibrated_platform(truth), truth, tmp.path() / "run", 21 + g_seed);
  ex.connect();
  const ProtocolCall rb{"", "rb", true};
  auto decay = [&] { return value(ex.run_protocol("standard_rb", {"q0"}, json::object(), rb), "q0", "decay"); };
  const double p_before = decay();
  // Bias offset moving the qubit 1.5 MHz below the sweetspot frequency.
  const double target = qt.f_q_max_hz - 1.5e6;
  const double dv = qt.v_period / kPi * std::acos(std::pow(target / qt.f_q_max_hz, 2));
  ex.device().set_flux_offset("q0", dv);
  const double shift = qt.f_q_max_hz - ex.device().qubit_frequency("q0");
  const double p_drift = decay();
  ex.apply_updates(ex.ramsey({"q0"}));
  ex.apply_updates(ex.single_shot_classification({"q0"}));
  ex.apply_updates(ex.rabi({"q0"}));
  ex.apply_updates(ex.single_shot_classification({"q0"}));
  const double p_after = decay();
  ex.disconnect();
  return {shift >= 1e6 && p_before - p_drift >= 0.002 && std::abs(p_after - p_before) <= 0.001,
          fmt("detuning %.2f MHz, p %.5f -> %.5f (drift) -> %.5f (recalibrated)", shift / 1e6, p_before, p_drift,
              p_after)};
}

// ---- 7 ---------------------------------------------------------------------

Verdict coherence_map() {
  test::TempDir tmp;
  DeviceTruth truth = default_truth();
  auto& qt = truth.qubits.at("q0");
  qt.t1_detuned_ns = 20000.0;
  qt.t1_detuning_ref_hz = 150e6;
  qt.flux_noise_v = 1e-5;
  ScriptExecutor ex(calibrated_platform(truth), truth, tmp.path() / "run", 31 + g_seed);
  ex.connect();
  const auto flux = ex.qubit_flux_dependence({"q0"});
  const double f_max = value(flux, "q0", "f_max_hz"), v_ss = value(flux, "q0", "sweetspot_v"),
               v_p = value(flux, "q0", "v_period");
  auto predicted = [&](double v) { return f_max * std::sqrt(std::abs(std::cos(kPi * (v - v_ss) / v_p))); };
  const std::vector<double> detunings = {-150e6, -100e6, -50e6, 0.0, 50e6, 100e6, 150e6};
  std::vector<double> t1s, t2s, fids;
  for (double d : detunings) {
    const double u = v_p / kPi * std::acos(std::pow(1.0 - std::abs(d) / f_max, 2));
    auto& q = ex.platform().qubits.at("q0");
    q.flux_bias_v = v_ss + (d < 0 ? -u : u);
    q.drive_frequency_hz = predicted(q.flux_bias_v);
    ex.apply_updates(ex.rabi({"q0"}));
    ex.apply_updates(ex.single_shot_classification({"q0"}));
    ex.apply_updates(ex.ramsey({"q0"}));
    const auto ro = ex.single_shot_classification({"q0"});
    ex.apply_updates(ro);
    t1s.push_back(value(ex.coherence_decay({"q0"}, {{"kind", "t1"}}), "q0", "t1_ns"));
    t2s.push_back(value(ex.ramsey({"q0"}), "q0", "t2_ramsey_ns"));
    fids.push_back(value(ro, "q0", "assignment_fidelity"));
  }
  ex.disconnect();
  std::string why;
  const bool xml = report_well_formed(ex.save(), &why);
  bool monotone = true;
  for (std::size_t i = 0; i + 1 < 4; ++i) {
    if (!(t1s[3 - i] < t1s[2 - i])) monotone = false;  // sweetspot towards -150 MHz
    if (!(t1s[3 + i] < t1s[4 + i])) monotone = false;  // sweetspot towards +150 MHz
  }
  const auto peak = std::max_element(t2s.begin(), t2s.end()) - t2s.begin();
  std::string detail = "T1 us:";
  for (double t : t1s) detail += fmt(" %.1f", t / 1e3);
  detail += "; T2* us:";
  for (double t : t2s) detail += fmt(" %.2f", t / 1e3);
  if (!xml) detail += "; report: " + why;
  return {monotone && peak == 3 && xml, detail};
}

// ---- 8 ---------------------------------------------------------------------

Verdict two_qubit() {
  const DeviceTruth noisy = default_truth();
  const DeviceTruth quiet = quiet_truth();
  const std::string pair = noisy.pairs.begin()->first;
  const auto& pt = noisy.pairs.at(pair);

  PlatformConfig config = calibrated_platform(noisy);
  Device d1(noisy);
  d1.reseed(41 + g_seed);
  const auto crossing = measure("avoided_crossing", config, d1, pair);
  const double g = crossing.values.count("coupling_hz") ? crossing.values.at("coupling_hz") : 0.0;
  const double g_err = std::abs(g / pt.g_hz - 1.0);

  Device d2(noisy);
  d2.reseed(42 + g_seed);
  const auto chev = measure("chevron", config, d2, pair);
  const double step = find_routine("chevron").defaults.at("amplitude_step").get<double>();
  const double apex = chev.values.count("cz_flux_amplitude") ? chev.values.at("cz_flux_amplitude") : -1.0;

  PlatformConfig qconfig = calibrated_platform(quiet);
  Device d3(quiet);
  const auto cz = measure("cz_virtual_phase", qconfig, d3, pair);
  const double phi = cz.values.count("conditional_phase_rad") ? cz.values.at("conditional_phase_rad") : 0.0;
  const double phi_err = std::abs(numerics::wrap_angle(phi - quiet.pairs.at(pair).phi_cond_rad));

  return {g_err <= 0.05 && std::abs(apex - pt.a_resonance) <= step && phi_err <= 0.02,
          fmt("g %.3f MHz (truth %.3f), apex %.4f (truth %.4f, step %.4f), conditional phase error %.2e rad", g / 1e6,
              pt.g_hz / 1e6, apex, pt.a_resonance, step, phi_err)};
}

// ---- 9 ---------------------------------------------------------------------

const char* kRuncard = R"(platform: dummy
targets: [q0]
actions:
  - id: qubit_spec
    operation: qubit_spectroscopy
  - id: rabi
    operation: rabi
  - id: ramsey
    operation: ramsey
    parameters:
      artificial_detuning_hz: 1.5e6
  - id: broken
    operation: ramsey
    parameters:
      artificial_detuning_hz: 0
  - id: t1
    operation: coherence_decay
    parameters:
      kind: t1
)";

std::vector<std::string> action_dirs(const fs::path& run) {
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(run / "data")) out.push_back(e.path().filename().string());
  std::sort(out.begin(), out.end());
  return out;
}

Verdict framework_contracts() {
  test::TempDir tmp;
  DeviceTruth truth = default_truth();
  PlatformConfig start = calibrated_platform(truth);
  start.qubits.at("q0").drive_frequency_hz -= 1e6;
  start.qubits.at("q0").pi_pulse_amplitude *= 1.04;
  const fs::path platforms = tmp.path() / "platforms";
  save_platform(start, platforms / "dummy");
  save_truth(truth, platforms / "dummy");
  test::EnvGuard env("QCAL_PLATFORMS", platforms.c_str());
  const Runcard rc = parse_runcard(kRuncard);
  std::vector<std::string> failures;

  const auto full = tmp.path() / "full";
  const auto split = tmp.path() / "split";
  const auto again = tmp.path() / "again";
  run(rc, full, {RunMode::kFull, 9 + g_seed, false});
  run(rc, split, {RunMode::kAcquireOnly, 9 + g_seed, false});
  fit_run(split, true);
  run(rc, again, {RunMode::kFull, 9 + g_seed, false});
  for (const auto& id : action_dirs(full)) {
    const auto a = read_file(full / "data" / id / "results.json");
    if (a.empty() || a != read_file(split / "data" / id / "results.json")) failures.push_back("acquire+fit " + id);
    if (a != read_file(again / "data" / id / "results.json") ||
        read_file(full / "data" / id / "data.json") != read_file(again / "data" / id / "data.json"))
      failures.push_back("determinism " + id);
  }
  if (read_file(full / "platform_final.json") != read_file(split / "platform_final.json"))
    failures.push_back("acquire+fit platform_final");

  const auto other = tmp.path() / "other";
  run(rc, other, {RunMode::kFull, 10 + g_seed, false});
  if (read_file(full / "data/t1/data.json") == read_file(other / "data/t1/data.json"))
    failures.push_back("different seeds give identical data");

  const json status = read_json_file(full / "data/broken/status.json");
  if (status.at("status") != "failed" || !status.at("updates_applied").empty())
    failures.push_back("failed fit applied updates");
  {
    const PlatformConfig mid = platform_from_json(read_json_file(full / "platform_final.json"));
    const Results ramsey = Results::from_json(read_json_file(full / "data/ramsey/results.json"));
    const double fixed = ramsey.targets.at("q0").values.at("drive_frequency_hz");
    if (std::abs(mid.qubit("q0").drive_frequency_hz - fixed) > 1.0) failures.push_back("failed fit changed drive");
  }

  std::string why;
  try {
    const auto doc = test::parse_xml(read_file(write_report(full)));
    const auto sections = doc->find_all("section");
    std::vector<std::string> ids;
    for (const auto* s : sections) ids.push_back(s->attr("id"));
    const std::vector<std::string> want = {"action-qubit_spec", "action-rabi", "action-ramsey", "action-broken",
                                           "action-t1"};
    if (ids != want) failures.push_back("report sections");
    bool diff_table = false;
    doc->visit([&](const test::XmlNode& n) {
      if (n.attr("class") == "platform-diff") diff_table = true;
    });
    if (!diff_table) failures.push_back("report platform diff");
    bool results_in_broken = false;
    doc->find_id("action-broken")->visit([&](const test::XmlNode& n) {
      if (n.attr("class") == "results") results_in_broken = true;
    });
    if (results_in_broken) failures.push_back("failed action shows results");
    std::string gen = render_compare(full, other);
    const auto cmp = test::parse_xml(gen);
    const auto cmp_rev = test::parse_xml(render_compare(other, full));
    auto section_ids = [](const test::XmlNode& n) {
      std::vector<std::string> out;
      for (const auto* s : n.find_all("section")) out.push_back(s->attr("id"));
      std::sort(out.begin(), out.end());
      return out;
    };
    if (section_ids(*cmp) != section_ids(*cmp_rev) || section_ids(*cmp).size() != 4)
      failures.push_back("compare sections");
  } catch (const std::exception& e) {
    failures.push_back(std::string("report/compare: ") + e.what());
  }

  const auto mon = tmp.path() / "monitor";
  const Runcard t1_card = parse_runcard("platform: dummy\ntargets: [q0]\nactions:\n  - id: t1\n    operation: coherence_decay\n");
  const auto written = monitor(t1_card, mon, {0.0, 3, 4 + g_seed});
  const auto records = read_metrics(mon / "metrics.jsonl");
  const auto t1_records = std::count_if(records.begin(), records.end(), [](const MetricsRecord& r) {
    return r.metric == "t1_ns";
  });
  if (t1_records != 3 || written != records.size()) failures.push_back("monitor records");

  std::string detail = failures.empty() ? "all contracts hold" : "broken:";
  for (const auto& f : failures) detail += " [" + f + "]";
  return {failures.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_seed = std::stoull(argv[1]);
  struct Criterion {
    int number;
    const char* name;
    std::function<Verdict()> check;
  };
  const std::vector<Criterion> criteria = {
      {1, "closed-loop single-qubit calibration", closed_loop_calibration},
      {2, "fit-oracle suite", fit_oracles},
      {3, "flipping error recovery", flipping_recovery},
      {4, "RB decay against the decoherence limit", rb_decay},
      {5, "Nelder-Mead pulse optimization", pulse_optimization},
      {6, "flux-drift recalibration", flux_drift_recalibration},
      {7, "flux-point coherence map", coherence_map},
      {8, "two-qubit protocols", two_qubit},
      {9, "framework contracts", framework_contracts},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failed;
    std::printf("%s criterion %d: %s (%s)\n", v.pass ? "PASS" : "FAIL", c.number, c.name, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
