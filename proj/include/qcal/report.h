#ifndef QCAL_REPORT_H_
#define QCAL_REPORT_H_

#include <filesystem>
#include <string>
#include <vector>

#include "qcal/json_io.h"

namespace qcal {

// UTC time as RFC 3339 with millisecond precision, e.g. 2024-01-31T12:00:00.000Z.
std::string utc_timestamp();

// Self-contained XHTML report of a run directory: header with the platform diff, then one
// <section> per action in execution order.
std::string render_report(const std::filesystem::path& run_dir);
std::filesystem::path write_report(const std::filesystem::path& run_dir);

// Overlays actions sharing (operation, target). Throws Error when the runs share none.
std::string render_compare(const std::filesystem::path& run_a, const std::filesystem::path& run_b);

struct MetricsRecord {
  std::string timestamp;
  std::string qubit;
  std::string metric;
  double value = 0;
  std::string run;
  std::string operation;

  json to_json() const;
  static MetricsRecord from_json(const json& doc);
};

// Appends one JSON line per record with a single write; creates the file if absent.
void append_metrics(const std::filesystem::path& log, const std::vector<MetricsRecord>& records);
std::vector<MetricsRecord> read_metrics(const std::filesystem::path& log);

// Uncompressed ustar archive of a run directory with sorted entries and zeroed times and owners.
void export_archive(const std::filesystem::path& run_dir, const std::filesystem::path& dest);
void extract_archive(const std::filesystem::path& archive, const std::filesystem::path& dest);

}  // namespace qcal

#endif  // QCAL_REPORT_H_
