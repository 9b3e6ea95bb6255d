#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <set>
#include <string>

#include "doctest.h"
#include "qcal/device.h"
#include "qcal/error.h"
#include "qcal/executor.h"
#include "qcal/report.h"
#include "test_util.h"
#include "xml_tree.h"

using namespace qcal;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// A temporary QCAL_PLATFORMS root holding platform "dummy": default truth with a slightly
// miscalibrated drive.
struct Bench {
  test::TempDir tmp;
  fs::path platforms = tmp.path() / "platforms";
  DeviceTruth truth = default_truth();
  PlatformConfig start;
  test::EnvGuard env{"QCAL_PLATFORMS", platforms.c_str()};

  Bench() {
    start = calibrated_platform(truth);
    start.qubits.at("q0").drive_frequency_hz -= 0.5e6;
    save_platform(start, platforms / "dummy");
    save_truth(truth, platforms / "dummy");
  }

  fs::path path(const std::string& name) const { return tmp.path() / name; }
  fs::path runcard(const std::string& text, const std::string& name = "card.yml") const {
    const auto p = tmp.path() / name;
    spit(p, text);
    return p;
  }
};

const char* kThreeActions = R"(platform: dummy
targets: [q0]
actions:
  - id: spec
    operation: qubit_spectroscopy
  - id: ramsey
    operation: ramsey
  - id: t1
    operation: coherence_decay
    parameters:
      kind: t1
)";

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

struct CliResult {
  int code = -1;
  std::string out;
};

CliResult cli(const std::string& args) {
  CliResult r;
  const std::string cmd = std::string(QCAL_CLI) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) r.out += buf;
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string last_line(const std::string& text) {
  std::string t = text;
  while (!t.empty() && t.back() == '\n') t.pop_back();
  const auto pos = t.rfind('\n');
  return pos == std::string::npos ? t : t.substr(pos + 1);
}

std::vector<std::string> section_ids(const test::XmlNode& doc) {
  std::vector<std::string> out;
  for (const auto* s : doc.find_all("section")) out.push_back(s->attr("id"));
  return out;
}

// Section ids with the class and row count of every table inside them.
std::string report_structure(const test::XmlNode& doc) {
  std::string out;
  for (const auto* s : doc.find_all("section")) {
    out += s->attr("id") + ":";
    for (const auto* t : s->find_all("table")) out += " " + t->attr("class") + "=" + std::to_string(t->find_all("tr").size());
    out += " figures=" + std::to_string(s->find_all("svg").size()) + "\n";
  }
  return out;
}

}  // namespace

TEST_CASE("runcard parsing") {
  SUBCASE("minimal runcard gets defaults") {
    const auto rc = parse_runcard("platform: dummy\nactions:\n  - id: a\n    operation: rabi\n");
    REQUIRE(rc.actions.size() == 1);
    CHECK(rc.actions[0].update);
    CHECK(rc.actions[0].parameters.empty());
    CHECK_FALSE(rc.targets.has_value());
  }
  SUBCASE("unknown operation lists nearest names") {
    const auto msg = message_of([] { parse_runcard("platform: dummy\nactions:\n  - id: a\n    operation: rabbi\n"); });
    CHECK(msg.find("rabi") != std::string::npos);
    CHECK(msg.find("line 4") != std::string::npos);
  }
  SUBCASE("unknown key carries its line") {
    const auto msg =
        message_of([] { parse_runcard("platform: dummy\nactions:\n  - id: a\n    operation: rabi\n    udpate: false\n"); });
    CHECK(msg.find("udpate") != std::string::npos);
    CHECK(msg.find("line 5") != std::string::npos);
  }
  SUBCASE("unknown parameter carries its line") {
    const auto msg = message_of(
        [] { parse_runcard("platform: dummy\nactions:\n  - id: a\n    operation: rabi\n    parameters:\n      nshot: 3\n"); });
    CHECK(msg.find("nshot") != std::string::npos);
    CHECK(msg.find("line 6") != std::string::npos);
  }
  SUBCASE("YAML syntax error carries its line") {
    const auto msg = message_of([] { parse_runcard("platform: dummy\nactions:\n  - id: [a\n"); });
    CHECK(msg.find("line") != std::string::npos);
  }
  SUBCASE("duplicate ids rejected") {
    CHECK_THROWS_AS(parse_runcard("platform: dummy\nactions:\n  - id: a\n    operation: rabi\n  - id: a\n    operation: t1\n"),
                    ValidationError);
  }
  SUBCASE("round trip through JSON") {
    const auto rc = parse_runcard(kThreeActions);
    CHECK(Runcard::from_json(rc.to_json()).to_json() == rc.to_json());
  }
}

TEST_CASE("target precedence") {
  const auto truth = default_truth();
  const auto config = calibrated_platform(truth);
  const auto& rabi = find_routine("rabi");
  const auto& chevron = find_routine("chevron");
  Action a;
  a.operation = "rabi";
  CHECK(resolve_targets(rabi, config, a, std::nullopt) == std::vector<std::string>{"q0", "q1"});
  CHECK(resolve_targets(rabi, config, a, std::vector<std::string>{"q1"}) == std::vector<std::string>{"q1"});
  a.targets = std::vector<std::string>{"q0"};
  CHECK(resolve_targets(rabi, config, a, std::vector<std::string>{"q1"}) == std::vector<std::string>{"q0"});
  Action c;
  c.operation = "chevron";
  CHECK(resolve_targets(chevron, config, c, std::vector<std::string>{"q0"}) == std::vector<std::string>{"q0-q1"});
}

TEST_CASE("run writes the documented layout") {
  Bench b;
  const auto rc = parse_runcard(kThreeActions);
  const auto out = run(rc, b.path("run"), {RunMode::kFull, 3, false});
  for (const char* f : {"meta.json", "platform_start.json", "platform_final.json"}) CHECK(fs::exists(out.dir / f));
  for (const char* id : {"spec", "ramsey", "t1"})
    for (const char* f : {"parameters.json", "data.json", "results.json", "status.json"})
      CHECK(fs::exists(out.dir / "data" / id / f));
  const auto meta = read_json_file(out.dir / "meta.json");
  CHECK(meta.at("seed") == 3);
  CHECK(meta.at("mode") == "full");

  SUBCASE("later actions see earlier updates") {
    const auto spec_status = read_json_file(out.dir / "data/spec/status.json");
    REQUIRE(!spec_status.at("updates_applied").empty());
    const double updated = spec_status.at("updates_applied")[0].at("value").get<double>();
    const auto data = read_json_file(out.dir / "data/ramsey/data.json");
    CHECK(data.at("targets").at("q0").at("metadata").at("config").at("drive_frequency_hz").get<double>() == updated);
  }
  SUBCASE("existing output needs force") {
    CHECK_THROWS_AS(run(rc, b.path("run"), {RunMode::kFull, 3, false}), OutputExistsError);
    CHECK_NOTHROW(run(rc, b.path("run"), {RunMode::kFull, 3, true}));
  }
}

TEST_CASE("acquire only and fit") {
  Bench b;
  const auto rc = parse_runcard(kThreeActions);
  run(rc, b.path("full"), {RunMode::kFull, 5, false});
  run(rc, b.path("acq"), {RunMode::kAcquireOnly, 5, false});
  for (const char* id : {"spec", "ramsey", "t1"}) {
    CHECK(fs::exists(b.path("acq") / "data" / id / "data.json"));
    CHECK_FALSE(fs::exists(b.path("acq") / "data" / id / "results.json"));
  }
  CHECK_FALSE(fs::exists(b.path("acq") / "platform_final.json"));

  SUBCASE("fit without update writes no platform_final") {
    fit_run(b.path("acq"), false);
    CHECK_FALSE(fs::exists(b.path("acq") / "platform_final.json"));
  }
  SUBCASE("acquire then fit equals run, and fitting twice is idempotent") {
    fit_run(b.path("acq"), true);
    for (const char* id : {"spec", "ramsey", "t1"}) {
      CHECK(slurp(b.path("acq") / "data" / id / "results.json") == slurp(b.path("full") / "data" / id / "results.json"));
      CHECK(slurp(b.path("acq") / "data" / id / "data.json") == slurp(b.path("full") / "data" / id / "data.json"));
    }
    CHECK(slurp(b.path("acq") / "platform_final.json") == slurp(b.path("full") / "platform_final.json"));
    const auto first = slurp(b.path("acq") / "data/ramsey/results.json");
    fit_run(b.path("acq"), true);
    CHECK(slurp(b.path("acq") / "data/ramsey/results.json") == first);
  }
  SUBCASE("corrupted data is a per-action error") {
    spit(b.path("acq") / "data/ramsey/data.json", "{ not json");
    const auto out = fit_run(b.path("acq"), true);
    REQUIRE(out.actions.size() == 3);
    CHECK(out.actions[0].status == "completed");
    CHECK(out.actions[1].status == "error");
    CHECK(out.actions[2].status == "completed");
  }
  SUBCASE("no data at all is an I/O error") {
    fs::remove_all(b.path("acq") / "data");
    CHECK_THROWS_AS(fit_run(b.path("acq"), true), IoError);
  }
}

TEST_CASE("update false leaves the platform untouched") {
  Bench b;
  const auto rc = parse_runcard("platform: dummy\ntargets: [q0]\nactions:\n  - id: spec\n    operation: qubit_spectroscopy\n    update: false\n");
  const auto out = run(rc, b.path("run"), {RunMode::kFull, 1, false});
  CHECK(out.actions[0].applied.empty());
  CHECK(slurp(b.path("run") / "platform_final.json") == slurp(b.path("run") / "platform_start.json"));
}

TEST_CASE("seed determinism and action sub-seeds") {
  Bench b;
  const auto rc = parse_runcard(kThreeActions);
  run(rc, b.path("a"), {RunMode::kFull, 8, false});
  run(rc, b.path("b"), {RunMode::kFull, 8, false});
  run(rc, b.path("c"), {RunMode::kFull, 9, false});
  CHECK(slurp(b.path("a") / "data/t1/data.json") == slurp(b.path("b") / "data/t1/data.json"));
  CHECK(slurp(b.path("a") / "data/t1/results.json") == slurp(b.path("b") / "data/t1/results.json"));
  CHECK(slurp(b.path("a") / "data/t1/data.json") != slurp(b.path("c") / "data/t1/data.json"));
  CHECK(action_seed(8, "t1") == action_seed(8, "t1"));
  CHECK(action_seed(8, "t1") != action_seed(8, "ramsey"));
}

TEST_CASE("script executor") {
  Bench b;
  SUBCASE("ramsey loop converges within five iterations") {
    ScriptExecutor ex("dummy", b.path("script"), 2);
    ex.connect();
    const double det = 2e6;
    int iterations = 0;
    for (; iterations < 10; ++iterations) {
      const auto r = ex.ramsey({"q0"}, {{"artificial_detuning_hz", det}});
      if (std::abs(r.targets.at("q0").values.at("frequency_hz") - det) < 10e3) break;
      ex.apply_updates(r);
    }
    CHECK(iterations + 1 <= 5);
  }
  SUBCASE("protocol calls need a connection") {
    ScriptExecutor ex("dummy", b.path("script"), 2);
    CHECK_THROWS_AS(ex.rabi({"q0"}), Error);
    ex.connect();
    ex.rabi({"q0"});
    ex.disconnect();
    CHECK_THROWS_AS(ex.rabi({"q0"}), Error);
  }
  SUBCASE("script replicating a runcard gives the same platform_final") {
    const auto rc = parse_runcard(kThreeActions);
    run(rc, b.path("run"), {RunMode::kFull, 4, false});
    ScriptExecutor ex("dummy", b.path("script"), 4);
    ex.connect();
    for (const auto& a : rc.actions) ex.apply_updates(ex.run_protocol(a.operation, {"q0"}, a.parameters, {a.id, "", true}));
    ex.disconnect();
    const auto dir = ex.save();
    CHECK(slurp(dir / "platform_final.json") == slurp(b.path("run") / "platform_final.json"));
    CHECK(slurp(dir / "data/ramsey/results.json") == slurp(b.path("run") / "data/ramsey/results.json"));
    CHECK_NOTHROW(test::parse_xml(slurp(write_report(dir))));
  }
  SUBCASE("updates are applied only on request") {
    ScriptExecutor ex("dummy", b.path("script"), 2);
    ex.connect();
    const double before = ex.platform().qubit("q0").drive_frequency_hz;
    const auto r = ex.qubit_spectroscopy({"q0"});
    CHECK(ex.platform().qubit("q0").drive_frequency_hz == before);
    CHECK_FALSE(ex.apply_updates(r).empty());
    CHECK(ex.platform().qubit("q0").drive_frequency_hz != before);
  }
}

TEST_CASE("pulse optimization") {
  Bench b;
  SUBCASE("start at the optimum stays there") {
    ScriptExecutor ex(calibrated_platform(b.truth), b.truth, b.path("opt"), 6);
    ex.connect();
    const double a0 = ex.platform().qubit("q0").pi_pulse_amplitude;
    const auto r = optimize_pulse(ex, "q0");
    CHECK(std::abs(r.best_amplitude / a0 - 1) < 0.01);
    CHECK(r.best_objective <= r.history.front().objective);
  }
  SUBCASE("a budget of dim + 1 returns the best initial vertex") {
    auto config = calibrated_platform(b.truth);
    config.qubits.at("q0").pi_pulse_amplitude *= 1.05;
    ScriptExecutor ex(config, b.truth, b.path("opt"), 6);
    ex.connect();
    OptimizeOptions o;
    o.max_evals = 3;
    const auto r = optimize_pulse(ex, "q0", o);
    REQUIRE(r.history.size() == 3);
    const auto best = std::min_element(r.history.begin(), r.history.end(),
                                       [](const auto& x, const auto& y) { return x.objective < y.objective; });
    CHECK(r.best_amplitude == best->amplitude);
    CHECK(ex.platform().qubit("q0").pi_pulse_amplitude == doctest::Approx(best->amplitude));
    CHECK(ex.platform().qubit("q0").drag_beta == doctest::Approx(best->beta));
  }
}

TEST_CASE("report") {
  Bench b;
  SUBCASE("one section per action") {
    const auto rc = parse_runcard("platform: dummy\ntargets: [q0]\nactions:\n  - id: only\n    operation: rabi\n");
    run(rc, b.path("run"), {RunMode::kFull, 1, false});
    const auto doc = test::parse_xml(render_report(b.path("run")));
    CHECK(section_ids(*doc) == std::vector<std::string>{"action-only"});
  }
  SUBCASE("failed fit has a status but no results table") {
    const auto rc = parse_runcard(
        "platform: dummy\ntargets: [q0]\nactions:\n  - id: bad\n    operation: ramsey\n    parameters:\n      artificial_detuning_hz: 0\n");
    run(rc, b.path("run"), {RunMode::kFull, 1, false});
    const auto doc = test::parse_xml(render_report(b.path("run")));
    const auto* s = doc->find_id("action-bad");
    REQUIRE(s != nullptr);
    CHECK(s->all_text().find("failed") != std::string::npos);
    bool results = false;
    s->visit([&](const test::XmlNode& n) { results |= n.attr("class") == "results"; });
    CHECK_FALSE(results);
  }
  SUBCASE("structural golden for a fixed-seed three-action run") {
    run(parse_runcard(kThreeActions), b.path("run"), {RunMode::kFull, 12, false});
    const auto doc = test::parse_xml(render_report(b.path("run")));
    const std::string got = report_structure(*doc);
    const fs::path golden = fs::path(QCAL_TEST_DIR) / "golden" / "report_structure.txt";
    if (std::getenv("QCAL_UPDATE_GOLDEN")) spit(golden, got);
    CHECK(got == slurp(golden));
  }
}

TEST_CASE("compare") {
  Bench b;
  const auto rc = parse_runcard(kThreeActions);
  run(rc, b.path("a"), {RunMode::kFull, 1, false});
  run(rc, b.path("b"), {RunMode::kFull, 2, false});

  SUBCASE("a run against itself overlays identical series") {
    const auto doc = test::parse_xml(render_compare(b.path("a"), b.path("a")));
    const auto* s = doc->find_id("compare-ramsey-q0");
    REQUIRE(s != nullptr);
    std::vector<std::string> points;
    s->visit([&](const test::XmlNode& n) {
      if (n.name == "polyline") points.push_back(n.attr("points"));
    });
    REQUIRE(points.size() >= 2);
    REQUIRE(points.size() % 2 == 0);
    const auto half = static_cast<std::ptrdiff_t>(points.size() / 2);
    CHECK(std::equal(points.begin(), points.begin() + half, points.begin() + half));
  }
  SUBCASE("sections are symmetric") {
    auto ab = section_ids(*test::parse_xml(render_compare(b.path("a"), b.path("b"))));
    auto ba = section_ids(*test::parse_xml(render_compare(b.path("b"), b.path("a"))));
    std::sort(ab.begin(), ab.end());
    std::sort(ba.begin(), ba.end());
    CHECK(ab == ba);
    CHECK(ab.size() == 3);
  }
  SUBCASE("disjoint runs are an error") {
    run(parse_runcard("platform: dummy\ntargets: [q0]\nactions:\n  - id: r\n    operation: rabi\n"), b.path("c"),
        {RunMode::kFull, 1, false});
    const auto msg = message_of([&] { render_compare(b.path("a"), b.path("c")); });
    CHECK(msg.find("share no") != std::string::npos);
  }
}

TEST_CASE("compare shows a Ramsey drive correction") {
  Bench b;
  const double det = 2e6;
  const double fq = model::qubit_frequency(b.truth.qubits.at("q0"), b.truth.qubits.at("q0").v_sweetspot);
  auto detuned = calibrated_platform(b.truth);
  const double injected = 0.4e6;
  detuned.qubits.at("q0").drive_frequency_hz = fq - injected;
  ScriptExecutor before(detuned, b.truth, b.path("before"), 3);
  before.connect();
  const auto r = before.ramsey({"q0"}, {{"artificial_detuning_hz", det}});
  before.apply_updates(r);
  ScriptExecutor after(before.platform(), b.truth, b.path("after"), 3);
  after.connect();
  after.ramsey({"q0"}, {{"artificial_detuning_hz", det}});
  before.disconnect();
  after.disconnect();
  before.save();
  after.save();
  const auto doc = test::parse_xml(render_compare(b.path("before"), b.path("after")));
  const auto* s = doc->find_id("compare-ramsey-q0");
  REQUIRE(s != nullptr);
  const test::XmlNode* freq_row = nullptr;
  for (const auto* tr : s->find_all("tr"))
    if (!tr->children.empty() && tr->children[0]->all_text() == "frequency_hz") freq_row = tr;
  REQUIRE(freq_row != nullptr);
  REQUIRE(freq_row->children.size() == 3);
  const double fa = std::stod(freq_row->children[1]->all_text());
  const double fb = std::stod(freq_row->children[2]->all_text());
  CHECK(std::abs(std::abs(fa - fb) - injected) < 5e3);
}

TEST_CASE("metrics log") {
  test::TempDir tmp;
  const auto log = tmp.path() / "sub" / "metrics.jsonl";
  std::vector<MetricsRecord> recs = {{"2024-01-01T00:00:00.000Z", "q0", "t1_ns", 1.0, "r", "coherence_decay"},
                                     {"2024-01-01T00:00:00.000Z", "q0", "t2_ramsey_ns", 2.0, "r", "ramsey"},
                                     {"2024-01-01T00:00:00.000Z", "q1", "t1_ns", 3.0, "r", "coherence_decay"}};
  append_metrics(log, recs);
  CHECK(read_metrics(log).size() == 3);
  append_metrics(log, recs);
  const auto all = read_metrics(log);
  REQUIRE(all.size() == 6);
  CHECK(all[3].value == 1.0);
  CHECK(all[5].qubit == "q1");

  SUBCASE("every prefix of whole lines parses") {
    const std::string text = slurp(log);
    std::size_t pos = 0;
    int lines = 0;
    while ((pos = text.find('\n', pos)) != std::string::npos) {
      ++pos;
      ++lines;
      spit(tmp.path() / "cut.jsonl", text.substr(0, pos));
      CHECK(read_metrics(tmp.path() / "cut.jsonl").size() == static_cast<std::size_t>(lines));
    }
    CHECK(lines == 6);
  }
}

TEST_CASE("monitor") {
  Bench b;
  const auto rc = parse_runcard("platform: dummy\ntargets: [q0]\nactions:\n  - id: t1\n    operation: coherence_decay\n");

  SUBCASE("three iterations give three t1 records matching results") {
    const auto n = monitor(rc, b.path("mon"), {0.0, 3, 1});
    const auto recs = read_metrics(b.path("mon") / "metrics.jsonl");
    CHECK(n == recs.size());
    std::vector<MetricsRecord> t1;
    std::copy_if(recs.begin(), recs.end(), std::back_inserter(t1), [](const auto& r) { return r.metric == "t1_ns"; });
    REQUIRE(t1.size() == 3);
    const auto results = Results::from_json(read_json_file(b.path("mon") / "iter_002/data/t1/results.json"));
    CHECK(t1[1].value == results.targets.at("q0").values.at("t1_ns"));
    CHECK(fs::exists(b.path("mon") / "iter_003/report.html"));
  }
  SUBCASE("a failing iteration does not stop the loop") {
    const auto platform_file = b.platforms / "dummy" / "platform.json";
    const std::string good = slurp(platform_file);
    std::vector<std::string> messages;
    monitor(rc, b.path("mon"), {0.0, 3, 1}, [&](const std::string& m) {
      messages.push_back(m);
      if (m.rfind("iter_001", 0) == 0) spit(platform_file, "{ broken");
      if (m.rfind("iter_002", 0) == 0) spit(platform_file, good);
    });
    const auto recs = read_metrics(b.path("mon") / "metrics.jsonl");
    std::set<std::string> runs;
    for (const auto& r : recs) runs.insert(fs::path(r.run).filename().string());
    CHECK(runs == std::set<std::string>{"iter_001", "iter_003"});
    CHECK(std::any_of(messages.begin(), messages.end(),
                      [](const std::string& m) { return m.find("iter_002 failed") != std::string::npos; }));
  }
}

TEST_CASE("archive") {
  Bench b;
  run(parse_runcard(kThreeActions), b.path("run"), {RunMode::kAcquireOnly, 1, false});
  export_archive(b.path("run"), b.path("one.tar"));
  export_archive(b.path("run"), b.path("two.tar"));
  CHECK(slurp(b.path("one.tar")) == slurp(b.path("two.tar")));
  CHECK(slurp(b.path("one.tar")).size() % 512 == 0);

  extract_archive(b.path("one.tar"), b.path("copy"));
  fit_run(b.path("copy"), true);
  fit_run(b.path("run"), true);
  CHECK(slurp(b.path("copy") / "platform_final.json") == slurp(b.path("run") / "platform_final.json"));

  fs::create_directories(b.path("empty"));
  CHECK_THROWS_AS(export_archive(b.path("empty"), b.path("empty.tar")), Error);
}

TEST_CASE("command line") {
  Bench b;
  const auto card = b.runcard(kThreeActions);
  const std::string out = b.path("cli_run").string();

  SUBCASE("run, refuse to overwrite, report") {
    auto r = cli("run " + card.string() + " -o " + out + " --seed 5");
    CHECK(r.code == 0);
    CHECK(last_line(r.out) == "OUTPUT: " + out);
    CHECK(fs::exists(fs::path(out) / "report.html"));
    const auto before = slurp(fs::path(out) / "data/t1/results.json");
    r = cli("run " + card.string() + " -o " + out + " --seed 6");
    CHECK(r.code == 1);
    CHECK(slurp(fs::path(out) / "data/t1/results.json") == before);
    r = cli("report " + out);
    CHECK(r.code == 0);
    CHECK(last_line(r.out) == "OUTPUT: " + (fs::path(out) / "report.html").string());
  }
  SUBCASE("same seed twice gives identical results") {
    CHECK(cli("run " + card.string() + " -o " + out + " -s 5").code == 0);
    CHECK(cli("run " + card.string() + " -o " + out + "2 -s 5").code == 0);
    CHECK(slurp(fs::path(out) / "data/ramsey/results.json") == slurp(fs::path(out + "2") / "data/ramsey/results.json"));
  }
  SUBCASE("acquire, fit, update") {
    CHECK(cli("acquire " + card.string() + " -o " + out + " -s 5").code == 0);
    CHECK_FALSE(fs::exists(fs::path(out) / "data/ramsey/results.json"));
    auto r = cli("fit " + out + " --update");
    CHECK(r.code == 0);
    CHECK(fs::exists(fs::path(out) / "platform_final.json"));
    const auto installed = b.platforms / "dummy" / "platform.json";
    const auto old = slurp(installed);
    r = cli("update " + out);
    CHECK(r.code == 0);
    CHECK(last_line(r.out) == "OUTPUT: " + installed.string());
    CHECK(to_json(load_platform(b.platforms / "dummy")) ==
          to_json(platform_from_json(read_json_file(fs::path(out) / "platform_final.json"))));
    int backups = 0;
    for (const auto& e : fs::directory_iterator(b.platforms / "dummy"))
      if (e.path().extension() == ".bak") {
        ++backups;
        CHECK(slurp(e.path()) == old);
      }
    CHECK(backups == 1);
  }
  SUBCASE("fit on a directory without data fails with 2") {
    fs::create_directories(out);
    CHECK(cli("fit " + out).code == 2);
  }
  SUBCASE("update without QCAL_PLATFORMS names the variable") {
    CHECK(cli("run " + card.string() + " -o " + out + " -s 1").code == 0);
    CHECK(cli("fit " + out + " --update").code == 0);
    test::EnvGuard unset("QCAL_PLATFORMS", nullptr);
    const auto r = cli("update " + out);
    CHECK(r.code == 2);
    CHECK(r.out.find("QCAL_PLATFORMS") != std::string::npos);
  }
  SUBCASE("usage errors exit with 1") {
    CHECK(cli("run").code == 1);
    CHECK(cli("frobnicate").code == 1);
    CHECK(cli("run " + b.runcard("platform: dummy\nactions:\n  - id: a\n    operation: rabbi\n", "bad.yml").string()).code == 1);
  }
  SUBCASE("compare and monitor print their outputs") {
    CHECK(cli("run " + card.string() + " -o " + out + " -s 1").code == 0);
    CHECK(cli("run " + card.string() + " -o " + out + "2 -s 2").code == 0);
    auto r = cli("compare " + out + " " + out + "2 -o " + out + "_cmp");
    CHECK(r.code == 0);
    CHECK(last_line(r.out) == "OUTPUT: " + (fs::path(out + "_cmp") / "compare.html").string());
    const auto t1_card = b.runcard("platform: dummy\ntargets: [q0]\nactions:\n  - id: t1\n    operation: coherence_decay\n", "t1.yml");
    r = cli("monitor " + t1_card.string() + " --interval 0 --repeat 3 -o " + out + "_mon -s 1");
    CHECK(r.code == 0);
    CHECK(last_line(r.out) == "OUTPUT: " + (fs::path(out + "_mon") / "metrics.jsonl").string());
    CHECK(read_metrics(fs::path(out + "_mon") / "metrics.jsonl").size() >= 3);
  }
  SUBCASE("help lists every flag") {
    const std::vector<std::pair<std::string, std::vector<std::string>>> expected = {
        {"run", {"--output", "--force", "--seed"}},
        {"acquire", {"--output", "--force", "--seed"}},
        {"fit", {"--update"}},
        {"report", {"dir"}},
        {"compare", {"--output"}},
        {"update", {"dir"}},
        {"monitor", {"--interval", "--repeat", "--output", "--seed"}},
        {"archive", {"--output"}},
        {"extract", {"--output"}},
        {"init", {"name"}},
    };
    for (const auto& [cmd, flags] : expected) {
      const auto r = cli(cmd + " --help");
      CHECK(r.code == 0);
      for (const auto& f : flags) CHECK_MESSAGE(r.out.find(f) != std::string::npos, cmd << " --help lacks " << f);
    }
  }
}
