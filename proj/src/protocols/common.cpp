#include "common.h"

#include <algorithm>
#include <cmath>

#include "qcal/error.h"
#include "qcal/numerics/discriminant.h"
#include "qcal/numerics/models.h"

namespace qcal::protocols {

std::vector<double> sweep(double lo, double hi, double step, const std::string& name) {
  if (!(step > 0) || !std::isfinite(step)) throw PreconditionError(name + " step must be positive");
  if (!(hi >= lo)) throw PreconditionError(name + " range must have max >= min");
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  if (n > 100000) throw PreconditionError(name + " sweep has too many points");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + double(i) * step;
  return out;
}

std::vector<double> centered_sweep(double center, double width, double step, const std::string& name) {
  return sweep(center - width / 2, center + width / 2, step, name);
}

ReadoutSettings readout_of(const QubitCalibration& q) { return {q.readout_frequency_hz, q.readout_amplitude}; }

DriveSettings drive_of(const QubitCalibration& q) {
  return {q.drive_frequency_hz, q.pi_pulse_amplitude, q.pi_pulse_duration_ns, q.drag_beta};
}

void echo_qubit(ArraySet& set, const QubitCalibration& q) {
  PlatformConfig tmp;
  tmp.qubits["q"] = q;
  set.metadata()["config"] = to_json(tmp)["qubits"]["q"];
}

void echo_pair(ArraySet& set, const PairCalibration& p) {
  PlatformConfig tmp;
  tmp.pairs["p"] = p;
  set.metadata()["pair_config"] = to_json(tmp)["pairs"]["p"];
}

const json& config_echo(const ArraySet& set) {
  auto it = set.metadata().find("config");
  if (it == set.metadata().end()) throw ValidationError("metadata.config", "missing config echo");
  return it->second;
}

std::vector<double> project_from(const std::vector<std::complex<double>>& iq, std::complex<double> reference) {
  std::complex<double> far = reference;
  for (const auto& z : iq)
    if (std::abs(z - reference) > std::abs(far - reference)) far = z;
  const auto dir = far - reference;
  std::vector<double> out(iq.size(), 0.0);
  const double norm = std::abs(dir);
  if (norm == 0) return out;
  for (std::size_t i = 0; i < iq.size(); ++i) out[i] = ((iq[i] - reference) * std::conj(dir)).real() / norm;
  return out;
}

std::complex<double> median_iq(const std::vector<std::complex<double>>& iq) {
  std::vector<double> re, im;
  for (const auto& z : iq) {
    re.push_back(z.real());
    im.push_back(z.imag());
  }
  auto med = [](std::vector<double> v) {
    const std::size_t n = v.size();
    std::nth_element(v.begin(), v.begin() + n / 2, v.end());
    double m = v[n / 2];
    if (n % 2 == 0) {
      std::nth_element(v.begin(), v.begin() + n / 2 - 1, v.end());
      m = 0.5 * (m + v[n / 2 - 1]);
    }
    return m;
  };
  return {med(re), med(im)};
}

Probabilities excited_probability(const ArraySet& set, Orientation orientation) {
  Probabilities out;
  if (set.has("probability")) {
    out.p = set.real("probability");
    return out;
  }
  const auto& shots = set.at("shots");
  if (shots.shape.size() < 2 || shots.shape.back() != 2) throw ValidationError("shots", "expected [..., nshots, 2]");
  const std::size_t nshots = shots.shape[shots.shape.size() - 2];
  if (nshots == 0) throw ValidationError("shots", "no shots recorded");
  const std::size_t points = shots.values.size() / (2 * nshots);
  const json& cfg = config_echo(set);
  if (cfg.contains("classifier") && !cfg["classifier"].is_null()) {
    ClassifierParams params{cfg["classifier"]["angle_rad"].get<double>(), cfg["classifier"]["threshold"].get<double>(),
                            cfg["classifier"]["assignment_fidelity"].get<double>()};
    const double c = std::cos(params.angle_rad), s = std::sin(params.angle_rad);
    for (std::size_t p = 0; p < points; ++p) {
      std::size_t ones = 0;
      for (std::size_t k = 0; k < nshots; ++k) {
        const double* v = &shots.values[2 * (p * nshots + k)];
        ones += (v[0] * c - v[1] * s) > params.threshold;
      }
      out.p.push_back(double(ones) / double(nshots));
    }
    return out;
  }
  out.uncalibrated = true;
  std::vector<std::complex<double>> means(points);
  for (std::size_t p = 0; p < points; ++p) {
    std::complex<double> acc = 0;
    for (std::size_t k = 0; k < nshots; ++k) {
      const double* v = &shots.values[2 * (p * nshots + k)];
      acc += std::complex<double>(v[0], v[1]);
    }
    means[p] = acc / double(nshots);
  }
  std::size_t a = 0, b = 0;
  double best = -1;
  for (std::size_t i = 0; i < points; ++i)
    for (std::size_t j = i + 1; j < points; ++j)
      if (std::abs(means[i] - means[j]) > best) {
        best = std::abs(means[i] - means[j]);
        a = i;
        b = j;
      }
  if (best <= 0) {
    out.p.assign(points, 0.0);
    return out;
  }
  // e0 is the extreme taken as |0>.
  std::complex<double> e0 = means[a], e1 = means[b];
  const bool a_closer_to_first = std::abs(means[0] - means[a]) <= std::abs(means[0] - means[b]);
  if ((orientation == Orientation::kFirstGround) != a_closer_to_first) std::swap(e0, e1);
  const auto axis = e1 - e0;
  for (const auto& m : means) out.p.push_back(((m - e0) * std::conj(axis)).real() / std::norm(axis));
  return out;
}

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), Eigen::Index(v.size())); }

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

std::vector<double> sweep_axis(const ArraySet& set, const std::string& name) { return set.real(name); }

TargetResult failed(const std::string& message) {
  TargetResult r;
  r.quality = FitQuality::kFailed;
  r.message = message;
  return r;
}

void record_fit(TargetResult& r, const numerics::FitResult<double>& fit, const std::vector<std::string>& names) {
  r.fit.converged = fit.converged;
  r.fit.cost = fit.cost;
  r.fit.iterations = fit.iterations;
  r.fit.diagnostic = fit.diagnostic;
  r.vectors["fit_params"] = to_std(fit.params);
  r.vectors["fit_stderr"] = to_std(fit.std_errors);
  (void)names;
}

void mark_poor(TargetResult& r, const std::string& flag) {
  if (r.quality == FitQuality::kGood) r.quality = FitQuality::kPoor;
  if (!r.has_flag(flag)) r.flags.push_back(flag);
}

void check_relative_stderr(TargetResult& r, double value, double std_error, const std::string& what) {
  if (!(std_error <= 0.2 * std::abs(value))) {
    mark_poor(r, kStderrFlag);
    if (r.message.empty()) r.message = what + " uncertainty exceeds 20%";
  }
}

bool near_edge(double x, const std::vector<double>& axis, double margin) {
  const auto [lo, hi] = std::minmax_element(axis.begin(), axis.end());
  const double span = *hi - *lo;
  return !(x >= *lo + margin * span && x <= *hi - margin * span);
}

double refined_peak(const std::vector<double>& x, const std::vector<double>& y, bool maximum, std::size_t* index) {
  std::size_t k = 0;
  for (std::size_t i = 1; i < y.size(); ++i)
    if (maximum ? y[i] > y[k] : y[i] < y[k]) k = i;
  if (index) *index = k;
  if (k == 0 || k + 1 >= y.size()) return x[k];
  const double y0 = y[k - 1], y1 = y[k], y2 = y[k + 1];
  const double denom = y0 - 2 * y1 + y2;
  if (denom == 0) return x[k];
  const double shift = 0.5 * (y0 - y2) / denom;
  return x[k] + shift * 0.5 * (x[k + 1] - x[k - 1]);
}

Series fit_curve_series(const numerics::CurveModel<double>& model, const Vec& params, const std::vector<double>& axis,
                        const std::string& label) {
  Series s;
  s.label = label;
  s.style = SeriesStyle::kLine;
  const auto [lo, hi] = std::minmax_element(axis.begin(), axis.end());
  const int n = 200;
  for (int i = 0; i < n; ++i) {
    const double x = *lo + (*hi - *lo) * i / (n - 1);
    s.x.push_back(x);
    s.y.push_back(model(x, params));
  }
  return s;
}

LorentzFit fit_lorentzian(const std::vector<double>& freqs, const std::vector<double>& y, bool dip) {
  const double center = 0.5 * (freqs.front() + freqs.back());
  std::vector<double> x(freqs.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = (freqs[i] - center) / 1e6;
  std::size_t k = 0;
  refined_peak(x, y, !dip, &k);
  const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());
  const double span = std::abs(x.back() - x.front());
  Vec x0(4);
  x0 << (dip ? *ymin - *ymax : *ymax - *ymin), x[k], span / 10, (dip ? *ymax : *ymin);
  std::vector<numerics::Bounds<double>> bounds = {
      {-INFINITY, INFINITY}, {x.front() - span, x.back() + span}, {span * 1e-4, span * 10}, {-INFINITY, INFINITY}};
  LorentzFit out;
  out.center = center;
  out.fit = numerics::fit_curve(numerics::lorentzian<double>(), to_vec(x), to_vec(y), x0, bounds);
  const auto& p = out.fit.params;
  const auto& e = out.fit.std_errors;
  out.amplitude = p[0];
  out.f0 = center + p[1] * 1e6;
  out.w = std::abs(p[2]) * 1e6;
  out.offset = p[3];
  out.amplitude_err = e[0];
  out.f0_err = e[1] * 1e6;
  out.w_err = e[2] * 1e6;
  return out;
}

double eval_lorentz_fit(const LorentzFit& fit, double frequency_hz) {
  return numerics::lorentzian<double>()((frequency_hz - fit.center) / 1e6, fit.fit.params);
}

}  // namespace qcal::protocols
