#include <filesystem>
#include <random>

#include "doctest.h"
#include "qcal/array_set.h"
#include "qcal/device.h"
#include "qcal/error.h"
#include "qcal/platform.h"
#include "test_util.h"

using namespace qcal;

namespace {

PlatformConfig one_qubit() {
  PlatformConfig c;
  c.name = "single";
  QubitCalibration q;
  q.readout_frequency_hz = 7.1e9;
  q.readout_amplitude = 0.2;
  q.drive_frequency_hz = 5e9;
  q.pi_pulse_amplitude = 0.5;
  c.qubits["q0"] = q;
  return c;
}

PlatformConfig random_platform(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PlatformConfig c;
  c.name = "rand";
  const int n = 1 + int(u(rng) * 3);
  for (int i = 0; i < n; ++i) {
    QubitCalibration q;
    q.readout_frequency_hz = 6e9 + u(rng) * 2e9;
    q.readout_amplitude = u(rng);
    q.drive_frequency_hz = 4e9 + u(rng) * 1e9;
    q.pi_pulse_amplitude = u(rng);
    q.pi_pulse_duration_ns = 10 + u(rng) * 50;
    q.drag_beta = u(rng) - 0.5;
    q.sweetspot_v = u(rng) - 0.5;
    q.flux_bias_v = u(rng) - 0.5;
    if (u(rng) > 0.3) {
      q.t1_ns = 5000 + u(rng) * 20000;
      q.t2_ramsey_ns = *q.t1_ns * u(rng);
      q.t2_echo_ns = *q.t1_ns * (1 + u(rng));
    }
    if (u(rng) > 0.5) {
      q.classifier = ClassifierParams{u(rng) * 6 - 3, u(rng), 0.5 + 0.5 * u(rng)};
      q.readout_fidelity = q.classifier->assignment_fidelity;
    }
    c.qubits["q" + std::to_string(i)] = q;
  }
  if (n >= 2) {
    PairCalibration p;
    p.qubit_a = "q0";
    p.qubit_b = "q1";
    p.coupling_hz = u(rng) * 1e7;
    p.cz_flux_amplitude = u(rng);
    p.cz_duration_ns = 10 + u(rng) * 40;
    p.conditional_phase_rad = u(rng) * 6 - 3;
    p.virtual_phase_rad = {{"q0", u(rng)}, {"q1", -u(rng)}};
    c.pairs["q0-q1"] = p;
  }
  return c;
}

}  // namespace

TEST_CASE("platform directory with one qubit loads") {
  test::TempDir dir;
  save_platform(one_qubit(), dir.path());
  auto c = load_platform(dir.path());
  CHECK(c.qubits.size() == 1);
  CHECK(c.pairs.empty());
  CHECK_FALSE(c.qubit("q0").t1_ns.has_value());
}

TEST_CASE("invariant violations name the field") {
  auto c = one_qubit();
  c.qubits["q0"].t1_ns = 1000.0;
  c.qubits["q0"].t2_ramsey_ns = 3000.0;
  try {
    validate(c);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(e.field() == "qubits.q0.t2_ramsey_ns");
  }
  test::TempDir dir;
  write_text_file(dir.path() / "platform.json", dump_canonical(to_json(c)));
  CHECK_THROWS_AS(load_platform(dir.path()), ValidationError);
  CHECK_THROWS_AS(load_platform(dir.path() / "missing"), IoError);
  write_text_file(dir.path() / "platform.json", "{not json");
  CHECK_THROWS_AS(load_platform(dir.path()), ValidationError);
}

TEST_CASE("schema keys are strict and nulls are explicit") {
  json doc = to_json(one_qubit());
  CHECK(doc["qubits"]["q0"]["t1_ns"].is_null());
  CHECK(doc["qubits"]["q0"]["classifier"].is_null());
  json extra = doc;
  extra["qubits"]["q0"]["colour"] = 1;
  CHECK_THROWS_AS(platform_from_json(extra), ValidationError);
  json missing = doc;
  missing["qubits"]["q0"].erase("t1_ns");
  CHECK_THROWS_AS(platform_from_json(missing), ValidationError);
}

TEST_CASE("save is byte stable and round trips randomized configs") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 25; ++trial) {
    const auto c = random_platform(rng);
    test::TempDir dir;
    save_platform(c, dir.path());
    const auto first = read_text_file(dir.path() / "platform.json");
    const auto loaded = load_platform(dir.path());
    CHECK(diff_platforms(c, loaded).empty());
    save_platform(loaded, dir.path());
    CHECK(read_text_file(dir.path() / "platform.json") == first);
  }
}

TEST_CASE("empty qubit map is a valid document") {
  PlatformConfig c;
  c.name = "empty";
  test::TempDir dir;
  save_platform(c, dir.path());
  CHECK(load_platform(dir.path()).qubits.empty());
}

TEST_CASE("diff reports changed leaves") {
  const auto c = calibrated_platform(default_truth());
  CHECK(diff_platforms(c, c).empty());
  auto d = c;
  d.qubits["q0"].drive_frequency_hz += 1e6;
  auto changes = diff_platforms(c, d);
  REQUIRE(changes.size() == 1);
  CHECK(changes[0].path == "qubits.q0.drive_frequency_hz");
  d.qubits["q1"].drag_beta = 0.3;
  CHECK(diff_platforms(c, d).size() == 2);
  d.qubits["q1"].classifier.reset();
  CHECK(diff_platforms(c, d).size() == 3);
}

TEST_CASE("apply_update is atomic and recovered by diff") {
  const auto c = calibrated_platform(default_truth());
  CHECK(diff_platforms(c, apply_update(c, {})).empty());

  CHECK_THROWS_AS(apply_update(c, {{"qubits.q0.pi_pulse_amplitude", 1.5}}), ValidationError);
  CHECK_THROWS_AS(apply_update(c, {{"qubits.q0.drive_frequency_hz", 4.9e9}, {"qubits.q7.t1_ns", 1.0}}),
                  ValidationError);
  CHECK_THROWS_AS(apply_update(c, {{"qubits.q0.no_such_field", 1.0}}), ValidationError);

  const std::vector<FieldUpdate> updates = {{"qubits.q0.drive_frequency_hz", 4.9e9},
                                            {"pairs.q0-q1.virtual_phase_rad.q1", 0.25},
                                            {"qubits.q1.t1_ns", 11000.0}};
  const auto updated = apply_update(c, updates);
  const auto changes = diff_platforms(c, updated);
  REQUIRE(changes.size() == updates.size());
  std::map<std::string, double> got;
  for (const auto& ch : changes) got[ch.path] = ch.new_value.get<double>();
  for (const auto& u : updates) CHECK(got.at(u.path) == doctest::Approx(u.value.get<double>()));
}

TEST_CASE("pair keys order their labels") {
  CHECK(pair_key("q1", "q0") == "q0-q1");
  auto c = calibrated_platform(default_truth());
  auto bad = c;
  auto p = bad.pairs.at("q0-q1");
  bad.pairs.erase("q0-q1");
  bad.pairs["q1-q0"] = p;
  CHECK_THROWS_AS(validate(bad), ValidationError);
  auto ghost = c;
  ghost.pairs.at("q0-q1").qubit_b = "q9";
  CHECK_THROWS_AS(validate(ghost), ValidationError);
}

TEST_CASE("platforms_root names the environment variable") {
  test::EnvGuard guard("QCAL_PLATFORMS", nullptr);
  try {
    platforms_root();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("QCAL_PLATFORMS") != std::string::npos);
  }
}

TEST_CASE("array sets serialize losslessly") {
  ArraySet a;
  a.add_real("x", {2, 3}, {1, 2, 3, 4, 5, NAN});
  a.add_complex("iq", {2}, {{1.0, -2.0}, {0.1, 1e-300}});
  a.metadata()["qubit"] = "q0";
  a.metadata()["step"] = 0.1;
  const auto back = ArraySet::from_json(json::parse(a.to_json().dump()));
  CHECK(back == a);
  CHECK(back.at("x").shape == std::vector<std::size_t>{2, 3});
  CHECK_FALSE(back.all_finite());
  CHECK_THROWS(a.add_real("x", {1}, {1}));
  CHECK_THROWS(a.add_real("y", {3}, {1, 2}));
}
