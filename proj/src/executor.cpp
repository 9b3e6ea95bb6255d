#include "qcal/executor.h"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <set>
#include <thread>

#include "qcal/error.h"
#include "qcal/numerics/nelder_mead.h"
#include "qcal/report.h"

namespace qcal {
namespace fs = std::filesystem;
namespace {

// ---- runcard parsing -------------------------------------------------------

std::string at_line(const YAML::Node& node) {
  return " (line " + std::to_string(node.Mark().line + 1) + ")";
}

json yaml_to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Sequence: {
      json out = json::array();
      for (const auto& item : node) out.push_back(yaml_to_json(item));
      return out;
    }
    case YAML::NodeType::Map: {
      json out = json::object();
      for (const auto& kv : node) out[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return out;
    }
    case YAML::NodeType::Scalar:
      break;
  }
  const std::string text = node.Scalar();
  if (node.Tag() == "!") return text;  // quoted
  if (text == "true" || text == "True") return true;
  if (text == "false" || text == "False") return false;
  if (text == "~" || text == "null") return nullptr;
  try {
    std::size_t used = 0;
    const long long i = std::stoll(text, &used);
    if (used == text.size()) return i;
  } catch (const std::exception&) {
  }
  try {
    std::size_t used = 0;
    const double d = std::stod(text, &used);
    if (used == text.size()) return d;
  } catch (const std::exception&) {
  }
  return text;
}

void check_map_keys(const YAML::Node& node, const std::set<std::string>& allowed, const std::string& where) {
  if (!node.IsMap()) throw ValidationError(where, "expected a mapping" + at_line(node));
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw ValidationError(where.empty() ? key : where + "." + key,
                            "unknown key" + at_line(kv.first) + "; expected one of " + list);
    }
  }
}

std::string scalar_string(const YAML::Node& node, const std::string& where) {
  if (!node || !node.IsScalar() || node.Scalar().empty())
    throw ValidationError(where, "expected a non-empty string" + (node ? at_line(node) : std::string()));
  return node.Scalar();
}

std::vector<std::string> string_list(const YAML::Node& node, const std::string& where) {
  if (!node.IsSequence()) throw ValidationError(where, "expected a list" + at_line(node));
  std::vector<std::string> out;
  for (std::size_t i = 0; i < node.size(); ++i) out.push_back(scalar_string(node[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

void validate_runcard(const Runcard& rc) {
  if (rc.platform.empty()) throw ValidationError("platform", "missing platform name");
  if (rc.actions.empty()) throw ValidationError("actions", "at least one action is required");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < rc.actions.size(); ++i) {
    const auto& a = rc.actions[i];
    const std::string where = "actions[" + std::to_string(i) + "]";
    if (a.id.empty()) throw ValidationError(where + ".id", "missing id");
    if (a.id.find_first_of("/\\") != std::string::npos || a.id == "." || a.id == "..")
      throw ValidationError(where + ".id", "id must be usable as a directory name");
    if (!ids.insert(a.id).second) throw ValidationError(where + ".id", "duplicate action id '" + a.id + "'");
    try {
      find_routine(a.operation).resolve(a.parameters);
    } catch (const ValidationError& e) {
      throw ValidationError(where + "." + e.field(), std::string(e.what()).substr(e.field().size() + 2));
    }
  }
}

// ---- helpers ---------------------------------------------------------------

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void prepare_output(const fs::path& dir, bool force) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw OutputExistsError(dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir)) {
      if (!force) throw OutputExistsError("output directory " + dir.string() + " is not empty (use --force)");
      for (const auto& entry : fs::directory_iterator(dir)) fs::remove_all(entry.path());
    }
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

void write_json(const fs::path& path, const json& doc) {
  try {
    write_text_file(path, dump_canonical(doc));
  } catch (const IoError&) {
    throw;
  } catch (const std::exception& e) {
    throw IoError("cannot write " + path.string() + ": " + e.what());
  }
}

void write_platform(const fs::path& path, const PlatformConfig& config) {
  write_text_file(path, serialize_platform(config));
}

PlatformConfig read_platform(const fs::path& path) {
  return platform_from_json(read_json_file(path));
}

void sync_biases(const PlatformConfig& config, Device& device) {
  for (const auto& [id, q] : config.qubits)
    if (device.truth().qubits.count(id)) device.set_bias(id, q.flux_bias_v);
}

json updates_json(const std::vector<FieldUpdate>& updates) {
  json out = json::array();
  for (const auto& u : updates) out.push_back({{"path", u.path}, {"value", u.value}});
  return out;
}

json status_json(const ActionOutcome& o, const Results* results) {
  json quality = json::object();
  if (results)
    for (const auto& [t, r] : results->targets) quality[t] = to_string(r.quality);
  return {{"id", o.id},           {"operation", o.operation},  {"targets", o.targets},
          {"status", o.status},   {"message", o.message},      {"fit_quality", quality},
          {"updates_applied", updates_json(o.applied)}, {"updates_rejected", o.rejected}};
}

std::string outcome_status(const Results& results) {
  for (const auto& [t, r] : results.targets)
    if (r.quality == FitQuality::kFailed) return "failed";
  return "completed";
}

// Fits stored data, applying updates to `config` when `update` is set.
void fit_and_update(const Routine& routine, const Data& data, const Action& action, bool update,
                    const fs::path& action_dir, PlatformConfig& config, ActionOutcome& outcome) {
  const Results results = routine.fit(data);
  write_json(action_dir / "results.json", results.to_json());
  outcome.status = outcome_status(results);
  if (update && action.update) {
    const auto updates = routine.update(results, config);
    config = apply_updates_leniently(config, updates, &outcome.applied, &outcome.rejected);
  }
  write_json(action_dir / "status.json", status_json(outcome, &results));
}

std::string unique_id(const std::vector<std::string>& taken, const std::string& base) {
  auto used = [&](const std::string& s) { return std::find(taken.begin(), taken.end(), s) != taken.end(); };
  if (!used(base)) return base;
  for (int k = 2;; ++k) {
    const std::string id = base + "_" + std::to_string(k);
    if (!used(id)) return id;
  }
}

}  // namespace

// ---- runcard ---------------------------------------------------------------

json Runcard::to_json() const {
  json doc = {{"platform", platform}, {"actions", json::array()}};
  if (targets) doc["targets"] = *targets;
  for (const auto& a : actions) {
    json j = {{"id", a.id}, {"operation", a.operation}, {"parameters", a.parameters}, {"update", a.update}};
    if (a.targets) j["targets"] = *a.targets;
    doc["actions"].push_back(j);
  }
  return doc;
}

Runcard Runcard::from_json(const json& doc) {
  Runcard rc;
  rc.platform = doc.at("platform").get<std::string>();
  if (doc.contains("targets")) rc.targets = doc["targets"].get<std::vector<std::string>>();
  for (const auto& j : doc.at("actions")) {
    Action a;
    a.id = j.at("id").get<std::string>();
    a.operation = j.at("operation").get<std::string>();
    if (j.contains("targets")) a.targets = j["targets"].get<std::vector<std::string>>();
    a.parameters = j.value("parameters", json::object());
    a.update = j.value("update", true);
    rc.actions.push_back(std::move(a));
  }
  return rc;
}

Runcard parse_runcard(const std::string& yaml_text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ValidationError(source, "YAML parse error at line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!root || root.IsNull()) throw ValidationError(source, "empty runcard");
  check_map_keys(root, {"platform", "targets", "actions"}, "");
  Runcard rc;
  rc.platform = scalar_string(root["platform"], "platform");
  if (root["targets"]) rc.targets = string_list(root["targets"], "targets");
  const auto actions = root["actions"];
  if (!actions || !actions.IsSequence()) throw ValidationError("actions", "expected a list of actions");
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const auto node = actions[i];
    const std::string where = "actions[" + std::to_string(i) + "]";
    check_map_keys(node, {"id", "operation", "targets", "update", "parameters"}, where);
    Action a;
    a.id = scalar_string(node["id"], where + ".id");
    a.operation = scalar_string(node["operation"], where + ".operation");
    try {
      find_routine(a.operation);
    } catch (const ValidationError& e) {
      throw ValidationError(where + ".operation", std::string(e.what()).substr(e.field().size() + 2) +
                                                      at_line(node["operation"]));
    }
    if (node["targets"]) a.targets = string_list(node["targets"], where + ".targets");
    if (node["update"]) {
      const json u = yaml_to_json(node["update"]);
      if (!u.is_boolean()) throw ValidationError(where + ".update", "expected true or false" + at_line(node["update"]));
      a.update = u.get<bool>();
    }
    if (node["parameters"]) {
      const auto params = node["parameters"];
      if (!params.IsMap() && !params.IsNull())
        throw ValidationError(where + ".parameters", "expected a mapping" + at_line(params));
      a.parameters = params.IsNull() ? json::object() : yaml_to_json(params);
      try {
        find_routine(a.operation).resolve(a.parameters);
      } catch (const ValidationError& e) {
        const std::string key = e.field().substr(e.field().find('.') + 1);
        const auto at = params[key] ? at_line(params[key]) : at_line(params);
        throw ValidationError(where + "." + e.field(), std::string(e.what()).substr(e.field().size() + 2) + at);
      }
    }
    rc.actions.push_back(std::move(a));
  }
  validate_runcard(rc);
  return rc;
}

Runcard load_runcard(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("runcard not found: " + path.string());
  return parse_runcard(read_text_file(path), path.string());
}

std::vector<std::string> resolve_targets(const Routine& routine, const PlatformConfig& config, const Action& action,
                                         const std::optional<std::vector<std::string>>& runcard_targets) {
  if (!action.targets && !runcard_targets) return default_targets(routine, config);
  const auto& requested = action.targets ? *action.targets : *runcard_targets;
  std::vector<std::string> out;
  auto add = [&out](const std::string& t) {
    if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
  };
  for (const auto& t : requested) {
    if (routine.target_kind == TargetKind::kPair) {
      if (config.pairs.count(t)) {
        add(t);
      } else if (config.qubits.count(t)) {
        for (const auto& [key, p] : config.pairs)
          if (p.qubit_a == t || p.qubit_b == t) add(key);
      } else {
        add(t);  // rejected by check_targets
      }
    } else {
      if (config.pairs.count(t) && !config.qubits.count(t)) {
        add(config.pairs.at(t).qubit_a);
        add(config.pairs.at(t).qubit_b);
      } else {
        add(t);
      }
    }
  }
  return out;
}

std::uint64_t action_seed(std::uint64_t seed, const std::string& id) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix(seed ^ splitmix(h));
}

PlatformConfig apply_updates_leniently(const PlatformConfig& config, const std::vector<FieldUpdate>& updates,
                                       std::vector<FieldUpdate>* applied, std::vector<std::string>* rejected) {
  if (updates.empty()) return config;
  try {
    auto next = apply_update(config, updates);
    if (applied) applied->insert(applied->end(), updates.begin(), updates.end());
    return next;
  } catch (const ValidationError&) {
  }
  PlatformConfig current = config;
  for (const auto& u : updates) {
    try {
      current = apply_update(current, {u});
      if (applied) applied->push_back(u);
    } catch (const ValidationError& e) {
      if (rejected) rejected->push_back(u.path + ": " + e.what());
    }
  }
  return current;
}

// ---- run -------------------------------------------------------------------

RunOutput run(const Runcard& runcard, const fs::path& out_dir, const RunOptions& options) {
  const auto dir = resolve_platform(runcard.platform);
  const auto platform = load_platform(dir);
  DeviceTruth truth;
  try {
    truth = load_truth(dir);
  } catch (const IoError& e) {
    throw IoError(std::string("device connection failed: ") + e.what());
  }
  Device device(truth);
  return run(runcard, platform, device, out_dir, options);
}

RunOutput run(const Runcard& runcard, const PlatformConfig& platform, Device& device, const fs::path& out_dir,
              const RunOptions& options) {
  validate_runcard(runcard);
  prepare_output(out_dir, options.force);
  const bool full = options.mode == RunMode::kFull;
  RunOutput out;
  out.dir = out_dir;
  out.meta = {{"platform", platform.name},
              {"seed", options.seed},
              {"mode", full ? "full" : "acquire_only"},
              {"started", utc_timestamp()},
              {"runcard", runcard.to_json()},
              {"actions", json::array()}};
  write_platform(out_dir / "platform_start.json", platform);
  PlatformConfig config = platform;

  auto write_meta = [&] {
    out.meta["finished"] = utc_timestamp();
    write_json(out_dir / "meta.json", out.meta);
  };

  for (const auto& action : runcard.actions) {
    const Routine& routine = find_routine(action.operation);
    ActionOutcome outcome;
    outcome.id = action.id;
    outcome.operation = action.operation;
    const fs::path action_dir = out_dir / "data" / action.id;
    fs::create_directories(action_dir);
    std::string acquired_at;
    try {
      outcome.targets = resolve_targets(routine, config, action, runcard.targets);
      sync_biases(config, device);
      device.reseed(action_seed(options.seed, action.id));
      Data data = routine.acquire(config, outcome.targets, action.parameters, device);
      acquired_at = utc_timestamp();
      write_json(action_dir / "parameters.json",
                 {{"operation", action.operation}, {"targets", outcome.targets}, {"parameters", data.parameters},
                  {"update", action.update}});
      write_json(action_dir / "data.json", data.to_json());
      if (full) {
        fit_and_update(routine, data, action, true, action_dir, config, outcome);
      } else {
        // Updates still chain between acquisitions; only data is written.
        if (action.update) config = apply_updates_leniently(config, routine.update(routine.fit(data), config), nullptr, nullptr);
        outcome.status = "acquired";
        write_json(action_dir / "status.json", status_json(outcome, nullptr));
      }
    } catch (const IoError&) {
      write_meta();
      throw;
    } catch (const Error& e) {
      outcome.status = "error";
      outcome.message = e.what();
      write_json(action_dir / "status.json", status_json(outcome, nullptr));
    }
    out.meta["actions"].push_back(
        {{"id", action.id}, {"operation", action.operation}, {"status", outcome.status}, {"acquired", acquired_at}});
    out.actions.push_back(std::move(outcome));
  }
  if (full) {
    write_platform(out_dir / "platform_final.json", config);
    out.final_platform = config;
  }
  write_meta();
  return out;
}

RunOutput fit_run(const fs::path& dir, bool update) {
  if (!fs::exists(dir / "meta.json")) throw IoError("not a run directory (meta.json missing): " + dir.string());
  RunOutput out;
  out.dir = dir;
  out.meta = read_json_file(dir / "meta.json");
  const Runcard runcard = Runcard::from_json(out.meta.at("runcard"));
  PlatformConfig config = read_platform(dir / "platform_start.json");
  bool any_data = false;
  for (const auto& action : runcard.actions) {
    const Routine& routine = find_routine(action.operation);
    ActionOutcome outcome;
    outcome.id = action.id;
    outcome.operation = action.operation;
    const fs::path action_dir = dir / "data" / action.id;
    if (!fs::exists(action_dir / "data.json")) {
      outcome.status = "error";
      outcome.message = "missing data.json";
      if (fs::exists(action_dir)) write_json(action_dir / "status.json", status_json(outcome, nullptr));
      out.actions.push_back(std::move(outcome));
      continue;
    }
    try {
      const Data data = Data::from_json(read_json_file(action_dir / "data.json"));
      any_data = true;
      for (const auto& [t, set] : data.targets) outcome.targets.push_back(t);
      fit_and_update(routine, data, action, update, action_dir, config, outcome);
    } catch (const std::exception& e) {
      outcome.status = "error";
      outcome.message = std::string("cannot fit stored data: ") + e.what();
      write_json(action_dir / "status.json", status_json(outcome, nullptr));
    }
    out.actions.push_back(std::move(outcome));
  }
  if (!any_data) throw IoError("no acquired data found in " + dir.string());
  if (update) {
    write_platform(dir / "platform_final.json", config);
    out.final_platform = config;
  }
  return out;
}

// ---- script executor -------------------------------------------------------

ScriptExecutor::ScriptExecutor(std::string platform, fs::path out_dir, std::uint64_t seed)
    : platform_name_(std::move(platform)), out_dir_(std::move(out_dir)), seed_(seed) {
  platform_ = load_platform(resolve_platform(platform_name_));
  start_ = platform_;
  started_ = utc_timestamp();
}

ScriptExecutor::ScriptExecutor(PlatformConfig platform, DeviceTruth truth, fs::path out_dir, std::uint64_t seed)
    : platform_name_(platform.name),
      platform_(std::move(platform)),
      truth_(std::move(truth)),
      out_dir_(std::move(out_dir)),
      seed_(seed) {
  start_ = platform_;
  started_ = utc_timestamp();
}

void ScriptExecutor::connect() {
  if (device_) return;
  if (!truth_) {
    try {
      truth_ = load_truth(resolve_platform(platform_name_));
    } catch (const IoError& e) {
      throw IoError(std::string("device connection failed: ") + e.what());
    }
  }
  device_.emplace(*truth_);
}

void ScriptExecutor::disconnect() { device_.reset(); }

Device& ScriptExecutor::device() {
  if (!device_) throw Error("executor is not connected; call connect() first");
  return *device_;
}

Results ScriptExecutor::run_protocol(const std::string& name, const std::vector<std::string>& targets,
                                     const json& parameters, const ProtocolCall& call) {
  if (!device_) throw Error("executor is not connected; call connect() first");
  const Routine& routine = find_routine(name);
  std::vector<std::string> taken;
  for (const auto& r : records_) taken.push_back(r.id);
  const std::string id = call.id.empty() ? unique_id(taken, name) : call.id;
  if (call.record && std::find(taken.begin(), taken.end(), id) != taken.end())
    throw ValidationError("id", "duplicate action id '" + id + "'");
  Action action;
  action.id = id;
  action.operation = name;
  if (!targets.empty()) action.targets = targets;
  const auto resolved = resolve_targets(routine, platform_, action, std::nullopt);
  sync_biases(platform_, *device_);
  device_->reseed(action_seed(seed_, call.seed_key.empty() ? id : call.seed_key));
  Data data = routine.acquire(platform_, resolved, parameters, *device_);
  data.timestamp = utc_timestamp();
  Results results = routine.fit(data);
  if (call.record) records_.push_back({id, name, resolved, std::move(data), results, {}, {}});
  return results;
}

std::vector<FieldUpdate> ScriptExecutor::apply_updates(const Results& results) {
  const Routine& routine = find_routine(results.protocol);
  const auto updates = routine.update(results, platform_);
  std::vector<FieldUpdate> applied;
  std::vector<std::string> rejected;
  platform_ = apply_updates_leniently(platform_, updates, &applied, &rejected);
  const json wanted = results.to_json();
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    if (it->operation == results.protocol && it->results.to_json() == wanted) {
      it->applied.insert(it->applied.end(), applied.begin(), applied.end());
      it->rejected.insert(it->rejected.end(), rejected.begin(), rejected.end());
      break;
    }
  }
  return applied;
}

#define QCAL_SCRIPT_METHOD(name)                                                              \
  Results ScriptExecutor::name(const std::vector<std::string>& targets, const json& p) {      \
    return run_protocol(#name, targets, p);                                                   \
  }
QCAL_SCRIPT_METHOD(resonator_spectroscopy)
QCAL_SCRIPT_METHOD(resonator_punchout)
QCAL_SCRIPT_METHOD(readout_frequency_optimization)
QCAL_SCRIPT_METHOD(qubit_spectroscopy)
QCAL_SCRIPT_METHOD(qubit_flux_dependence)
QCAL_SCRIPT_METHOD(rabi)
QCAL_SCRIPT_METHOD(ramsey)
QCAL_SCRIPT_METHOD(coherence_decay)
QCAL_SCRIPT_METHOD(flipping)
QCAL_SCRIPT_METHOD(drag_tuning)
QCAL_SCRIPT_METHOD(single_shot_classification)
QCAL_SCRIPT_METHOD(standard_rb)
QCAL_SCRIPT_METHOD(avoided_crossing)
QCAL_SCRIPT_METHOD(chevron)
QCAL_SCRIPT_METHOD(cz_virtual_phase)
#undef QCAL_SCRIPT_METHOD

fs::path ScriptExecutor::save() {
  if (saved_) throw Error("save() may be called once per executor");
  if (records_.empty()) throw Error("nothing to save: no protocol was run");
  prepare_output(out_dir_, false);
  Runcard rc;
  rc.platform = platform_name_;
  json actions = json::array();
  for (const auto& r : records_) {
    Action a;
    a.id = r.id;
    a.operation = r.operation;
    a.targets = r.targets;
    a.parameters = r.data.parameters;
    a.update = !r.applied.empty() || !r.rejected.empty();
    rc.actions.push_back(a);
    ActionOutcome o{r.id, r.operation, r.targets, outcome_status(r.results), "", r.applied, r.rejected};
    const fs::path dir = out_dir_ / "data" / r.id;
    fs::create_directories(dir);
    write_json(dir / "parameters.json", {{"operation", r.operation}, {"targets", r.targets},
                                         {"parameters", r.data.parameters}, {"update", a.update}});
    write_json(dir / "data.json", r.data.to_json());
    write_json(dir / "results.json", r.results.to_json());
    write_json(dir / "status.json", status_json(o, &r.results));
    actions.push_back({{"id", r.id}, {"operation", r.operation}, {"status", o.status}, {"acquired", r.data.timestamp}});
  }
  json meta = {{"platform", platform_name_}, {"seed", seed_},       {"mode", "script"},
               {"started", started_},        {"finished", utc_timestamp()}, {"runcard", rc.to_json()},
               {"actions", actions}};
  if (device_) meta["saved_while_connected"] = true;
  write_json(out_dir_ / "meta.json", meta);
  write_platform(out_dir_ / "platform_start.json", start_);
  write_platform(out_dir_ / "platform_final.json", platform_);
  saved_ = true;
  return out_dir_;
}

// ---- pulse optimization ----------------------------------------------------

OptimizeResult optimize_pulse(ScriptExecutor& executor, const std::string& qubit, const OptimizeOptions& options) {
  if (!executor.connected()) throw Error("executor is not connected; call connect() first");
  const auto& start = executor.platform().qubit(qubit);
  Eigen::VectorXd x0(2), step(2);
  x0 << options.initial_amplitude.value_or(start.pi_pulse_amplitude), options.initial_beta.value_or(start.drag_beta);
  step << options.amplitude_step * x0[0], options.beta_step;
  OptimizeResult result;
  auto objective = [&](const Eigen::VectorXd& x) {
    OptimizeEvaluation e{x[0], x[1], 1.0};
    auto& q = executor.platform().qubits.at(qubit);
    q.pi_pulse_amplitude = x[0];
    q.drag_beta = x[1];
    if (x[0] > 0 && x[0] <= 1) {
      try {
        const auto res = executor.run_protocol("standard_rb", {qubit}, options.rb_parameters,
                                               {"", "optimize_pulse:" + qubit, false});
        const auto& t = res.targets.at(qubit);
        if (t.quality != FitQuality::kFailed && t.values.count("decay")) e.objective = 1 - t.values.at("decay");
      } catch (const Error&) {
      }
    }
    result.history.push_back(e);
    return e.objective;
  };
  const auto nm = numerics::nelder_mead<double>(objective, x0, step, options.max_evals, options.tol);
  result.best_amplitude = nm.x_best[0];
  result.best_beta = nm.x_best[1];
  result.best_objective = nm.f_best;
  auto& q = executor.platform().qubits.at(qubit);
  q.pi_pulse_amplitude = result.best_amplitude;
  q.drag_beta = result.best_beta;
  return result;
}

// ---- monitoring ------------------------------------------------------------

std::size_t monitor(const Runcard& runcard, const fs::path& out_dir, const MonitorOptions& options,
                    const std::function<void(const std::string&)>& log) {
  if (options.repeat < 1) throw PreconditionError("repeat must be >= 1");
  if (options.interval_s < 0) throw PreconditionError("interval must be >= 0");
  fs::create_directories(out_dir);
  const fs::path metrics = out_dir / "metrics.jsonl";
  std::size_t written = 0;
  for (int i = 1; i <= options.repeat; ++i) {
    if (i > 1 && options.interval_s > 0)
      std::this_thread::sleep_for(std::chrono::duration<double>(options.interval_s));
    char name[32];
    std::snprintf(name, sizeof name, "iter_%03d", i);
    const fs::path dir = out_dir / name;
    try {
      RunOptions ro;
      ro.seed = splitmix(options.seed ^ std::uint64_t(i));
      ro.force = true;
      const auto output = run(runcard, dir, ro);
      std::vector<MetricsRecord> records;
      for (const auto& a : output.actions) {
        const fs::path results_path = dir / "data" / a.id / "results.json";
        if (!fs::exists(results_path)) {
          if (log) log(std::string(name) + ": action " + a.id + " produced no results: " + a.message);
          continue;
        }
        const auto results = Results::from_json(read_json_file(results_path));
        for (const auto& [target, r] : results.targets) {
          if (r.quality == FitQuality::kFailed) {
            if (log) log(std::string(name) + ": " + a.id + " failed on " + target + ": " + r.message);
            continue;
          }
          for (const auto& [metric, value] : r.values) {
            std::string m = metric;
            if (a.operation == "standard_rb" && metric == "fidelity") m = "rb_fidelity";
            if (a.operation == "single_shot_classification" && metric == "assignment_fidelity")
              m = "readout_fidelity";
            records.push_back({utc_timestamp(), target, m, value, dir.string(), a.operation});
          }
        }
      }
      write_report(dir);
      append_metrics(metrics, records);
      written += records.size();
      if (log) log(std::string(name) + ": " + std::to_string(records.size()) + " metrics records");
    } catch (const Error& e) {
      if (log) log(std::string(name) + " failed: " + e.what());
    }
  }
  return written;
}

}  // namespace qcal
