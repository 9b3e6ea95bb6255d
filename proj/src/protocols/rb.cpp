#include <algorithm>
#include <cmath>
#include <random>

#include "catalog.h"
#include "common.h"
#include "qcal/clifford.h"
#include "qcal/error.h"

namespace qcal::protocols {
namespace {

// A p^m + B
numerics::CurveModel<double> rb_decay() {
  return {"rb_decay", {"A", "p", "B"}, [](double m, const Vec& q) { return q[0] * std::pow(q[1], m) + q[2]; }};
}

struct DepthMeans {
  std::vector<double> depths;
  std::vector<double> survival;
};

DepthMeans average_by_depth(const std::vector<double>& depth_of_sequence, const std::vector<double>& survival) {
  DepthMeans out;
  for (std::size_t i = 0; i < survival.size(); ++i) {
    auto it = std::find(out.depths.begin(), out.depths.end(), depth_of_sequence[i]);
    if (it == out.depths.end()) {
      out.depths.push_back(depth_of_sequence[i]);
      out.survival.push_back(0.0);
      it = out.depths.end() - 1;
    }
    out.survival[std::size_t(it - out.depths.begin())] += survival[i];
  }
  for (std::size_t k = 0; k < out.depths.size(); ++k) {
    const auto count = std::count(depth_of_sequence.begin(), depth_of_sequence.end(), out.depths[k]);
    out.survival[k] /= double(count);
  }
  return out;
}

DepthMeans survival_means(const ArraySet& set) {
  const auto prob = excited_probability(set, Orientation::kFirstGround);
  std::vector<double> survival;
  for (double p : prob.p) survival.push_back(1.0 - p);
  return average_by_depth(set.real("sequence_depth"), survival);
}

Routine make_standard_rb() {
  Routine r;
  r.name = "standard_rb";
  r.title = "Standard randomized benchmarking";
  r.defaults = {{"depths", {1, 10, 25, 50, 100, 200, 400, 800}},
                {"sequences_per_depth", 10},
                {"nshots", 512},
                {"rng_seed", 1}};
  r.acquire_target = [](const PlatformConfig& config, const std::string& t, const Params& p, Device& device) {
    const auto& q = config.qubit(t);
    const auto depths = p.numbers("depths");
    const int per_depth = p.integer("sequences_per_depth");
    if (depths.empty()) throw ValidationError("parameters.depths", "must not be empty");
    if (per_depth < 1) throw ValidationError("parameters.sequences_per_depth", "must be >= 1");
    for (double d : depths)
      if (!(d >= 1) || d != std::floor(d)) throw ValidationError("parameters.depths", "depths must be positive integers");
    const auto& table = clifford_table();
    std::mt19937_64 rng(std::uint64_t(p.integer("rng_seed")));
    std::uniform_int_distribution<int> pick(0, table.size() - 1);
    experiments::CliffordSequences spec{t, {}, drive_of(q), readout_of(q), p.integer("nshots")};
    std::vector<double> depth_of_sequence;
    for (double d : depths) {
      for (int s = 0; s < per_depth; ++s) {
        std::vector<int> seq;
        for (int k = 0; k < int(d); ++k) seq.push_back(pick(rng));
        seq.push_back(table.inverse(table.compose_sequence(seq)));
        spec.sequences.push_back(std::move(seq));
        depth_of_sequence.push_back(d);
      }
    }
    auto set = device.simulate(spec);
    set.add_real("sequence_depth", {depth_of_sequence.size()}, depth_of_sequence);
    echo_qubit(set, q);
    return set;
  };
  r.fit_target = [](const ArraySet& set, const Params&) {
    const auto means = survival_means(set);
    const auto& m = means.depths;
    const auto& s = means.survival;
    TargetResult res;
    res.quality = FitQuality::kGood;
    res.vectors["depths"] = m;
    res.vectors["survival"] = s;
    auto finish = [&res](double p) {
      res.values["decay"] = p;
      res.values["error_per_clifford"] = (1 - p) / 2;
      res.values["fidelity"] = 1 - (1 - p) / 2;
    };
    if (std::all_of(s.begin(), s.end(), [](double v) { return v >= 1 - 1e-9; })) {
      res.fit.converged = true;
      res.values["A"] = 0.5;
      res.values["B"] = 0.5;
      finish(1.0);
      return res;
    }
    if (m.size() < 3) return failed("at least three depths are needed");
    // Seed with B = 1/2 and a geometric rate between the shallowest and deepest points.
    const double b0 = 0.5;
    const double first = std::max(s.front() - b0, 1e-6), last = std::max(s.back() - b0, 1e-6);
    double p0 = std::pow(last / first, 1.0 / (m.back() - m.front()));
    p0 = std::clamp(std::isfinite(p0) ? p0 : 0.9, 0.01, 0.999999);
    Vec x0(3);
    x0 << first / std::pow(p0, m.front()), p0, b0;
    const auto fit = numerics::fit_curve(rb_decay(), to_vec(m), to_vec(s), x0,
                                         {{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}});
    record_fit(res, fit, {"A", "p", "B"});
    if (!fit.converged) return failed("decay fit did not converge: " + fit.diagnostic);
    res.values["A"] = fit.params[0];
    res.values["B"] = fit.params[2];
    finish(fit.params[1]);
    res.values["decay_stderr"] = fit.std_errors[1];
    if (!(fit.std_errors[1] <= 0.2 * (1 - fit.params[1])) && fit.params[1] < 1) mark_poor(res, kStderrFlag);
    return res;
  };
  r.figures = [](const std::string& t, const ArraySet& set, const TargetResult* res) {
    const auto means = survival_means(set);
    Figure f{"Randomized benchmarking " + t, "sequence length", "survival probability", {}, {}};
    f.series.push_back({"mean survival", means.depths, means.survival, SeriesStyle::kMarkers, ""});
    if (res && res->quality != FitQuality::kFailed && res->values.count("decay")) {
      Vec q(3);
      q << res->values.at("A"), res->values.at("decay"), res->values.at("B");
      f.series.push_back(fit_curve_series(rb_decay(), q, means.depths));
    }
    return std::vector<Figure>{f};
  };
  return r;
}

}  // namespace

Routine standard_rb() { return make_standard_rb(); }

}  // namespace qcal::protocols
