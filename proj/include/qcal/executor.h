#ifndef QCAL_EXECUTOR_H_
#define QCAL_EXECUTOR_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qcal/device.h"
#include "qcal/error.h"
#include "qcal/platform.h"
#include "qcal/protocols.h"

namespace qcal {

// The output directory already holds files and replacing them was not requested.
class OutputExistsError : public Error {
 public:
  using Error::Error;
};

struct Action {
  std::string id;
  std::string operation;
  std::optional<std::vector<std::string>> targets;
  json parameters = json::object();
  bool update = true;
};

struct Runcard {
  std::string platform;
  std::optional<std::vector<std::string>> targets;
  std::vector<Action> actions;

  json to_json() const;
  static Runcard from_json(const json& doc);
};

// Parses YAML and validates against the protocol registry. Errors carry "line N" locations.
Runcard parse_runcard(const std::string& yaml_text, const std::string& source = "runcard");
Runcard load_runcard(const std::filesystem::path& path);

// Action.targets, then Runcard.targets, then every qubit or pair of the platform. Qubit
// names given to a pair protocol select the pairs containing them, and pair keys given to a
// qubit protocol select both qubits.
std::vector<std::string> resolve_targets(const Routine& routine, const PlatformConfig& config, const Action& action,
                                         const std::optional<std::vector<std::string>>& runcard_targets);

// Per-action RNG seed derived from the run seed and the action id.
std::uint64_t action_seed(std::uint64_t seed, const std::string& id);

enum class RunMode { kFull, kAcquireOnly };

struct RunOptions {
  RunMode mode = RunMode::kFull;
  std::uint64_t seed = 0;
  bool force = false;  // replace an existing non-empty output directory
};

struct ActionOutcome {
  std::string id;
  std::string operation;
  std::vector<std::string> targets;
  std::string status;  // acquired, completed, failed, error
  std::string message;
  std::vector<FieldUpdate> applied;
  std::vector<std::string> rejected;  // "path: reason"
};

struct RunOutput {
  std::filesystem::path dir;
  json meta;
  std::vector<ActionOutcome> actions;
  std::optional<PlatformConfig> final_platform;
};

// Reads the platform and device truth from QCAL_PLATFORMS/<runcard.platform>.
RunOutput run(const Runcard& runcard, const std::filesystem::path& out_dir, const RunOptions& options);
// Same as run() with an explicit platform and device.
RunOutput run(const Runcard& runcard, const PlatformConfig& platform, Device& device,
              const std::filesystem::path& out_dir, const RunOptions& options);
// Fits every acquired action of a run directory; with `update`, writes platform_final.json.
RunOutput fit_run(const std::filesystem::path& dir, bool update);

// Applies the whole list when it validates, otherwise each update on its own.
PlatformConfig apply_updates_leniently(const PlatformConfig& config, const std::vector<FieldUpdate>& updates,
                                       std::vector<FieldUpdate>* applied, std::vector<std::string>* rejected);

struct ProtocolCall {
  std::string id;        // defaults to the protocol name, then name_2, name_3, ...
  std::string seed_key;  // defaults to the id; equal keys replay the same random stream
  bool record = true;    // false keeps the call out of the saved run
};

// Programmatic counterpart of a runcard: protocol calls return Results immediately and
// updates are applied only through apply_updates().
class ScriptExecutor {
 public:
  ScriptExecutor(std::string platform, std::filesystem::path out_dir, std::uint64_t seed = 0);
  ScriptExecutor(PlatformConfig platform, DeviceTruth truth, std::filesystem::path out_dir, std::uint64_t seed = 0);

  void connect();
  void disconnect();
  bool connected() const { return device_.has_value(); }

  Results run_protocol(const std::string& name, const std::vector<std::string>& targets = {},
                       const json& parameters = json::object(), const ProtocolCall& call = {});
  std::vector<FieldUpdate> apply_updates(const Results& results);

  Results resonator_spectroscopy(const std::vector<std::string>& targets = {}, const json& p = json::object());
  Results resonator_punchout(const std::vector<std::string>& targets = {}, const json& p = json::object());
  Results readout_frequency_optimization(const std::vector<std::string>& targets = {}, const json& p = json::object());
  Results qubit_spectroscopy(const std::vector<std::string>& targets = {}, const json& p = json::object());
  Results qubit_flux_dependence(const std::vector<std::string>& targets = {}, const json& p = json::object());
  Results rabi(const std::vector<std::string>& targets = {}, const json& p = json::object());
  Results ramsey(const std::vector<std::string>& targets = {}, const json& p = json::object());
  Results coherence_decay(const std::vector<std::string>& targets = {}, const json& p = json::object());
  Results flipping(const std::vector<std::string>& targets = {}, const json& p = json::object());
  Results drag_tuning(const std::vector<std::string>& targets = {}, const json& p = json::object());
  Results single_shot_classification(const std::vector<std::string>& targets = {}, const json& p = json::object());
  Results standard_rb(const std::vector<std::string>& targets = {}, const json& p = json::object());
  Results avoided_crossing(const std::vector<std::string>& targets = {}, const json& p = json::object());
  Results chevron(const std::vector<std::string>& targets = {}, const json& p = json::object());
  Results cz_virtual_phase(const std::vector<std::string>& targets = {}, const json& p = json::object());

  PlatformConfig& platform() { return platform_; }
  const PlatformConfig& platform() const { return platform_; }
  // The simulated QPU, e.g. to inject flux drift. Requires connect().
  Device& device();

  // Writes the run directory in the same layout as run(); allowed once.
  std::filesystem::path save();

 private:
  struct Record {
    std::string id;
    std::string operation;
    std::vector<std::string> targets;
    Data data;
    Results results;
    std::vector<FieldUpdate> applied;
    std::vector<std::string> rejected;
  };

  std::string platform_name_;
  PlatformConfig platform_;
  PlatformConfig start_;
  std::optional<DeviceTruth> truth_;
  std::optional<Device> device_;
  std::filesystem::path out_dir_;
  std::uint64_t seed_;
  std::vector<Record> records_;
  std::string started_;
  bool saved_ = false;
};

struct OptimizeOptions {
  std::optional<double> initial_amplitude;  // default: the configured pi amplitude
  std::optional<double> initial_beta;       // default: the configured DRAG beta
  double amplitude_step = 0.05;             // relative to the initial amplitude
  double beta_step = 0.05;
  int max_evals = 25;
  double tol = 1e-5;
  json rb_parameters = json::object();  // forwarded to standard_rb
};

struct OptimizeEvaluation {
  double amplitude = 0;
  double beta = 0;
  double objective = 1;  // 1 - fitted decay; 1 for failed fits
};

struct OptimizeResult {
  double best_amplitude = 0;
  double best_beta = 0;
  double best_objective = 1;
  std::vector<OptimizeEvaluation> history;
};

// Nelder-Mead over (pi amplitude, DRAG beta) minimising 1 - p from standard_rb. Every
// evaluation replays the same random stream. The best point is written to the config.
OptimizeResult optimize_pulse(ScriptExecutor& executor, const std::string& qubit, const OptimizeOptions& options = {});

struct MonitorOptions {
  double interval_s = 1800;
  int repeat = 1;
  std::uint64_t seed = 0;
};

// Runs the runcard `repeat` times into iter_001, iter_002, ... and appends every scalar result
// to <out_dir>/metrics.jsonl. Returns the number of records written.
std::size_t monitor(const Runcard& runcard, const std::filesystem::path& out_dir, const MonitorOptions& options,
                    const std::function<void(const std::string&)>& log = {});

}  // namespace qcal

#endif  // QCAL_EXECUTOR_H_
