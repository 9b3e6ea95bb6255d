#include <cstdint>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>

#include "CLI11.hpp"
#include "qcal/device.h"
#include "qcal/error.h"
#include "qcal/executor.h"
#include "qcal/platform.h"
#include "qcal/report.h"

namespace fs = std::filesystem;
using namespace qcal;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kExecution = 2;

std::uint64_t entropy_seed() {
  std::random_device rd;
  return (std::uint64_t(rd()) << 32) ^ rd();
}

fs::path default_output(const fs::path& runcard) {
  std::string stamp = utc_timestamp().substr(0, 19);
  for (char& c : stamp)
    if (c == ':') c = '-';
  return runcard.stem().string() + "_" + stamp;
}

int print_output(const fs::path& path) {
  std::cout << "OUTPUT: " << path.string() << std::endl;
  return kOk;
}

int cmd_run(const fs::path& runcard_path, fs::path output, bool force, std::optional<std::uint64_t> seed,
            RunMode mode) {
  const Runcard runcard = load_runcard(runcard_path);
  if (output.empty()) output = default_output(runcard_path);
  RunOptions options;
  options.mode = mode;
  options.force = force;
  options.seed = seed.value_or(entropy_seed());
  const auto out = run(runcard, output, options);
  for (const auto& a : out.actions)
    std::cerr << a.id << ": " << a.status << (a.message.empty() ? "" : " (" + a.message + ")") << "\n";
  if (mode == RunMode::kFull) write_report(output);
  return print_output(output);
}

int cmd_fit(const fs::path& dir, bool update) {
  const auto out = fit_run(dir, update);
  for (const auto& a : out.actions)
    std::cerr << a.id << ": " << a.status << (a.message.empty() ? "" : " (" + a.message + ")") << "\n";
  write_report(dir);
  return print_output(dir);
}

int cmd_update(const fs::path& dir) {
  const fs::path final_path = dir / "platform_final.json";
  if (!fs::exists(final_path)) throw IoError("no platform_final.json in " + dir.string() + "; run fit --update first");
  const PlatformConfig config = platform_from_json(read_json_file(final_path));
  const fs::path target = resolve_platform(config.name);
  const fs::path installed = target / "platform.json";
  std::string stamp = utc_timestamp();
  for (char& c : stamp)
    if (c == ':') c = '-';
  const fs::path backup = target / ("platform.json." + stamp + ".bak");
  fs::copy_file(installed, backup, fs::copy_options::overwrite_existing);
  save_platform(config, target);
  std::cerr << "backup written to " << backup.string() << "\n";
  return print_output(installed);
}

int cmd_init(const std::string& name) {
  const fs::path dir = platforms_root() / name;
  if (fs::exists(dir / "platform.json")) throw OutputExistsError("platform " + name + " already exists at " + dir.string());
  fs::create_directories(dir);
  const auto truth = default_truth();
  save_truth(truth, dir);
  save_platform(calibrated_platform(truth, name), dir);
  return print_output(dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qcal: calibration runs on a simulated transmon device"};
  app.require_subcommand(1);

  fs::path runcard, output, dir, dir_b, archive;
  bool force = false, update = false;
  std::optional<std::uint64_t> seed;
  double interval = 1800;
  int repeat = 1;
  std::string name;

  auto* run_cmd = app.add_subcommand("run", "Acquire, fit and update for every action of a runcard");
  run_cmd->add_option("runcard", runcard, "Runcard YAML file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("-o,--output", output, "Output directory");
  run_cmd->add_flag("-f,--force", force, "Replace a non-empty output directory");
  run_cmd->add_option("-s,--seed", seed, "Global RNG seed (default: drawn from entropy)");

  auto* acquire_cmd = app.add_subcommand("acquire", "Acquire data only; fit later with 'fit'");
  acquire_cmd->add_option("runcard", runcard, "Runcard YAML file")->required()->check(CLI::ExistingFile);
  acquire_cmd->add_option("-o,--output", output, "Output directory");
  acquire_cmd->add_flag("-f,--force", force, "Replace a non-empty output directory");
  acquire_cmd->add_option("-s,--seed", seed, "Global RNG seed (default: drawn from entropy)");

  auto* fit_cmd = app.add_subcommand("fit", "Fit the data of an acquired run directory");
  fit_cmd->add_option("dir", dir, "Run directory")->required();
  fit_cmd->add_flag("-u,--update", update, "Apply updates in action order and write platform_final.json");

  auto* report_cmd = app.add_subcommand("report", "Regenerate report.html of a run directory");
  report_cmd->add_option("dir", dir, "Run directory")->required();

  auto* compare_cmd = app.add_subcommand("compare", "Combined report of two runs");
  compare_cmd->add_option("dir_a", dir, "First run directory")->required();
  compare_cmd->add_option("dir_b", dir_b, "Second run directory")->required();
  compare_cmd->add_option("-o,--output", output, "Directory receiving compare.html")->required();

  auto* update_cmd = app.add_subcommand("update", "Install a run's platform_final.json under QCAL_PLATFORMS");
  update_cmd->add_option("dir", dir, "Run directory")->required();

  auto* monitor_cmd = app.add_subcommand("monitor", "Run a runcard repeatedly and log metrics.jsonl");
  monitor_cmd->add_option("runcard", runcard, "Runcard YAML file")->required()->check(CLI::ExistingFile);
  monitor_cmd->add_option("-i,--interval", interval, "Seconds between iterations")->capture_default_str();
  monitor_cmd->add_option("-n,--repeat", repeat, "Number of iterations")->capture_default_str();
  monitor_cmd->add_option("-o,--output", output, "Output directory")->required();
  monitor_cmd->add_option("-s,--seed", seed, "Global RNG seed (default: drawn from entropy)");

  auto* archive_cmd = app.add_subcommand("archive", "Write a deterministic tar archive of a run directory");
  archive_cmd->add_option("dir", dir, "Run directory")->required();
  archive_cmd->add_option("-o,--output", archive, "Archive file")->required();

  auto* extract_cmd = app.add_subcommand("extract", "Unpack an archive written by 'archive'");
  extract_cmd->add_option("archive", archive, "Archive file")->required()->check(CLI::ExistingFile);
  extract_cmd->add_option("-o,--output", output, "Destination directory")->required();

  auto* init_cmd = app.add_subcommand("init", "Create a platform with the default simulated device");
  init_cmd->add_option("name", name, "Platform name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*run_cmd) return cmd_run(runcard, output, force, seed, RunMode::kFull);
    if (*acquire_cmd) return cmd_run(runcard, output, force, seed, RunMode::kAcquireOnly);
    if (*fit_cmd) return cmd_fit(dir, update);
    if (*report_cmd) return print_output(write_report(dir));
    if (*compare_cmd) {
      fs::create_directories(output);
      const fs::path path = output / "compare.html";
      write_text_file(path, render_compare(dir, dir_b));
      return print_output(path);
    }
    if (*update_cmd) return cmd_update(dir);
    if (*monitor_cmd) {
      MonitorOptions options;
      options.interval_s = interval;
      options.repeat = repeat;
      options.seed = seed.value_or(entropy_seed());
      const auto n = monitor(load_runcard(runcard), output, options,
                             [](const std::string& line) { std::cerr << line << "\n"; });
      std::cerr << n << " metrics records written\n";
      return print_output(output / "metrics.jsonl");
    }
    if (*archive_cmd) {
      export_archive(dir, archive);
      return print_output(archive);
    }
    if (*extract_cmd) {
      extract_archive(archive, output);
      return print_output(output);
    }
    if (*init_cmd) return cmd_init(name);
  } catch (const OutputExistsError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExecution;
  }
  return kUsage;
}
