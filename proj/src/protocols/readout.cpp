#include <cmath>
#include <cstdio>
#include <string>

#include "catalog.h"
#include "common.h"
#include "qcal/numerics/discriminant.h"

namespace qcal::protocols {
namespace {

numerics::IqPoints points(const ArraySet& set, const std::string& name) {
  const auto& a = set.at(name);
  const std::size_t n = a.shape.at(0);
  numerics::IqPoints out(Eigen::Index(n), 2);
  for (std::size_t i = 0; i < n; ++i) {
    out(Eigen::Index(i), 0) = a.values[2 * i];
    out(Eigen::Index(i), 1) = a.values[2 * i + 1];
  }
  return out;
}

std::vector<double> column(const numerics::IqPoints& pts, int c) {
  return std::vector<double>(pts.col(c).data(), pts.col(c).data() + pts.rows());
}

std::string percent(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * x);
  return buf;
}

Routine make_single_shot_classification() {
  Routine r;
  r.name = "single_shot_classification";
  r.title = "Single-shot classification";
  r.defaults = {{"nshots", 5000}};
  r.owned_fields = {"classifier", "readout_fidelity"};
  r.acquire_target = [](const PlatformConfig& config, const std::string& t, const Params& p, Device& device) {
    const auto& q = config.qubit(t);
    ArraySet set;
    for (int state : {0, 1}) {
      auto shots = device.simulate(experiments::Shots{t, state, readout_of(q), drive_of(q), p.integer("nshots")});
      auto& a = shots.at("shots");
      set.add_real("shots_" + std::to_string(state), a.shape, a.values);
    }
    echo_qubit(set, q);
    return set;
  };
  r.fit_target = [](const ArraySet& set, const Params&) {
    const auto s0 = points(set, "shots_0");
    const auto s1 = points(set, "shots_1");
    const auto d = numerics::train_linear_discriminant(s0, s1);
    if (d.degenerate) return failed("state means coincide; no classifier can be trained");
    TargetResult res;
    res.quality = FitQuality::kGood;
    res.fit.converged = true;
    const auto c0 = numerics::classify(s0, d.params);
    const auto c1 = numerics::classify(s1, d.params);
    double p10 = 0, p01 = 0;
    for (int c : c0) p10 += c;
    for (int c : c1) p01 += 1 - c;
    p10 /= double(c0.size());
    p01 /= double(c1.size());
    res.values["assignment_fidelity"] = d.params.assignment_fidelity;
    res.values["angle_rad"] = d.params.angle_rad;
    res.values["threshold"] = d.params.threshold;
    res.values["p1_given_0"] = p10;
    res.values["p0_given_1"] = p01;
    res.updates["classifier"] = {{"angle_rad", d.params.angle_rad},
                                 {"threshold", d.params.threshold},
                                 {"assignment_fidelity", d.params.assignment_fidelity}};
    res.updates["readout_fidelity"] = d.params.assignment_fidelity;
    return res;
  };
  r.figures = [](const std::string& t, const ArraySet& set, const TargetResult*) {
    const auto s0 = points(set, "shots_0");
    const auto s1 = points(set, "shots_1");
    Figure f{"Single shot " + t, "I", "Q", {}, {}};
    f.series.push_back({"|0>", column(s0, 0), column(s0, 1), SeriesStyle::kMarkers, ""});
    f.series.push_back({"|1>", column(s1, 0), column(s1, 1), SeriesStyle::kMarkers, ""});
    return std::vector<Figure>{f};
  };
  r.custom_html = [](const std::string&, const ArraySet&, const TargetResult& res) -> std::string {
    if (!res.values.count("p1_given_0")) return "";
    const double p10 = res.values.at("p1_given_0"), p01 = res.values.at("p0_given_1");
    return "<table class=\"confusion\"><tr><th>prepared</th><th>assigned 0</th><th>assigned 1</th></tr>"
           "<tr><td>|0&gt;</td><td>" + percent(1 - p10) + "</td><td>" + percent(p10) + "</td></tr>"
           "<tr><td>|1&gt;</td><td>" + percent(p01) + "</td><td>" + percent(1 - p01) + "</td></tr></table>";
  };
  return r;
}

}  // namespace

Routine single_shot_classification() { return make_single_shot_classification(); }

}  // namespace qcal::protocols
