#include "qcal/report.h"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "qcal/error.h"
#include "qcal/platform.h"
#include "qcal/plot.h"
#include "qcal/protocols.h"

namespace qcal {
namespace fs = std::filesystem;
namespace {

std::string esc(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20 && c != '\n' && c != '\t') continue;
        out += c;
    }
  }
  return out;
}

std::string fmt(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string fmt_json(const json& v) {
  if (v.is_number()) return fmt(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

const char* kStyle =
    "body{font-family:sans-serif;margin:2em;color:#222}"
    "table{border-collapse:collapse;margin:0.5em 0}"
    "td,th{border:1px solid #bbb;padding:2px 8px;text-align:left;font-size:90%}"
    "section{border-top:2px solid #444;margin-top:2em;padding-top:0.5em}"
    ".status-completed{color:#2a7a2a}.status-failed,.status-error{color:#b22222}"
    ".flags{color:#a0522d}.figure{display:inline-block;margin:0.5em}";

std::string document(const std::string& title, const std::string& body) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<!DOCTYPE html>\n"
         "<html xmlns=\"http://www.w3.org/1999/xhtml\" lang=\"en\">\n<head>\n<meta charset=\"UTF-8\"/>\n<title>" +
         esc(title) + "</title>\n<style>" + kStyle + "</style>\n</head>\n<body>\n" + body + "</body>\n</html>\n";
}

std::string table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows,
                  const std::string& cls = "") {
  std::string out = "<table" + (cls.empty() ? "" : " class=\"" + cls + "\"") + "><tr>";
  for (const auto& h : header) out += "<th>" + esc(h) + "</th>";
  out += "</tr>";
  for (const auto& row : rows) {
    out += "<tr>";
    for (const auto& c : row) out += "<td>" + esc(c) + "</td>";
    out += "</tr>";
  }
  return out + "</table>\n";
}

std::string figure_html(const Figure& f) { return "<div class=\"figure\">" + render_svg(f) + "</div>\n"; }

std::optional<json> read_optional(const fs::path& path) {
  if (!fs::exists(path)) return std::nullopt;
  try {
    return read_json_file(path);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

// Stored pieces of one action of a run directory.
struct StoredAction {
  std::string id;
  std::string operation;
  json status = json::object();
  std::optional<Data> data;
  std::optional<Results> results;
  std::string load_error;
};

std::vector<StoredAction> load_actions(const fs::path& run_dir, json* meta_out) {
  const fs::path meta_path = run_dir / "meta.json";
  if (!fs::exists(meta_path)) throw IoError("not a run directory (meta.json missing): " + run_dir.string());
  const json meta = read_json_file(meta_path);
  if (meta_out) *meta_out = meta;
  std::vector<StoredAction> out;
  for (const auto& a : meta.at("runcard").at("actions")) {
    StoredAction s;
    s.id = a.at("id").get<std::string>();
    s.operation = a.at("operation").get<std::string>();
    const fs::path dir = run_dir / "data" / s.id;
    if (auto st = read_optional(dir / "status.json")) s.status = *st;
    try {
      if (fs::exists(dir / "data.json")) s.data = Data::from_json(read_json_file(dir / "data.json"));
      if (fs::exists(dir / "results.json")) s.results = Results::from_json(read_json_file(dir / "results.json"));
    } catch (const std::exception& e) {
      s.load_error = e.what();
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string status_of(const StoredAction& a) {
  if (a.status.contains("status")) return a.status["status"].get<std::string>();
  if (a.results) return "completed";
  return a.data ? "acquired" : "missing";
}

std::vector<Figure> figures_for(const Routine& routine, const std::string& target, const ArraySet& set,
                                const TargetResult* result, std::string* error) {
  try {
    return routine.figures(target, set, result);
  } catch (const std::exception& e) {
    if (error) *error = e.what();
    return {};
  }
}

std::vector<std::vector<std::string>> value_rows(const TargetResult& r) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& [k, v] : r.values) rows.push_back({k, fmt(v)});
  return rows;
}

std::string action_section(const StoredAction& a) {
  const Routine* routine = nullptr;
  try {
    routine = &find_routine(a.operation);
  } catch (const Error&) {
  }
  const std::string status = status_of(a);
  std::string s = "<section id=\"action-" + esc(a.id) + "\">\n<h2>" + esc(a.id) + " (" +
                  esc(routine ? routine->title : a.operation) + ")</h2>\n";
  s += "<p>Status: <span class=\"status-" + esc(status) + "\">" + esc(status) + "</span></p>\n";
  if (a.status.contains("message") && !a.status["message"].get<std::string>().empty())
    s += "<p>" + esc(a.status["message"].get<std::string>()) + "</p>\n";
  if (!a.load_error.empty()) s += "<p>Stored data could not be read: " + esc(a.load_error) + "</p>\n";
  if (a.data && routine) {
    for (const auto& [target, set] : a.data->targets) {
      s += "<h3>" + esc(target) + "</h3>\n";
      const TargetResult* result = nullptr;
      if (a.results && a.results->targets.count(target)) result = &a.results->targets.at(target);
      if (result) {
        s += "<p>Fit quality: " + esc(to_string(result->quality)) + "</p>\n";
        if (!result->message.empty()) s += "<p>" + esc(result->message) + "</p>\n";
        if (!result->flags.empty()) {
          std::string flags;
          for (const auto& f : result->flags) flags += (flags.empty() ? "" : ", ") + f;
          s += "<p class=\"flags\">Flags: " + esc(flags) + "</p>\n";
        }
      }
      std::string err;
      const bool ok_fit = result && result->quality != FitQuality::kFailed;
      for (const auto& f : figures_for(*routine, target, set, ok_fit ? result : nullptr, &err)) s += figure_html(f);
      if (!err.empty()) s += "<p>Plot unavailable: " + esc(err) + "</p>\n";
      if (ok_fit) {
        s += table({"result", "value"}, value_rows(*result), "results");
        if (routine->custom_html) s += routine->custom_html(target, set, *result) + "\n";
      }
    }
  }
  if (a.status.contains("updates_applied") && !a.status["updates_applied"].empty()) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& u : a.status["updates_applied"]) rows.push_back({u["path"].get<std::string>(), fmt_json(u["value"])});
    s += "<h3>Applied updates</h3>\n" + table({"field", "new value"}, rows, "updates");
  }
  if (a.status.contains("updates_rejected") && !a.status["updates_rejected"].empty()) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& u : a.status["updates_rejected"]) rows.push_back({u.get<std::string>()});
    s += "<h3>Rejected updates</h3>\n" + table({"reason"}, rows, "rejected");
  }
  return s + "</section>\n";
}

}  // namespace

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec, int(ms));
  return buf;
}

std::string render_report(const fs::path& run_dir) {
  json meta;
  const auto actions = load_actions(run_dir, &meta);
  if (actions.empty()) throw Error("run has no actions: " + run_dir.string());
  const std::string platform = meta.value("platform", std::string("?"));
  std::string body = "<header>\n<h1>Calibration report: " + esc(platform) + "</h1>\n";
  body += table({"platform", "started", "finished", "seed", "mode"},
                {{platform, meta.value("started", std::string()), meta.value("finished", std::string()),
                  meta.contains("seed") ? meta["seed"].dump() : "", meta.value("mode", std::string())}},
                "meta");
  const auto start_path = run_dir / "platform_start.json", final_path = run_dir / "platform_final.json";
  if (fs::exists(start_path) && fs::exists(final_path)) {
    const auto changes = diff_platforms(platform_from_json(read_json_file(start_path)),
                                        platform_from_json(read_json_file(final_path)));
    std::vector<std::vector<std::string>> rows;
    for (const auto& c : changes) rows.push_back({c.path, fmt_json(c.old_value), fmt_json(c.new_value)});
    body += "<h2>Platform changes</h2>\n";
    body += rows.empty() ? std::string("<p>No platform changes.</p>\n")
                         : table({"field", "before", "after"}, rows, "platform-diff");
  } else {
    body += "<p>No final platform recorded for this run.</p>\n";
  }
  std::vector<std::vector<std::string>> summary;
  for (const auto& a : actions) summary.push_back({a.id, a.operation, status_of(a)});
  body += table({"action", "operation", "status"}, summary, "summary") + "</header>\n";
  for (const auto& a : actions) body += action_section(a);
  return document("Report " + platform, body);
}

fs::path write_report(const fs::path& run_dir) {
  const auto path = run_dir / "report.html";
  write_text_file(path, render_report(run_dir));
  return path;
}

std::string render_compare(const fs::path& run_a, const fs::path& run_b) {
  json meta_a, meta_b;
  const auto actions_a = load_actions(run_a, &meta_a);
  const auto actions_b = load_actions(run_b, &meta_b);
  using Key = std::pair<std::string, std::string>;  // operation, target
  struct Entry {
    const StoredAction* action;
    const ArraySet* set;
    const TargetResult* result;
  };
  auto index = [](const std::vector<StoredAction>& actions, std::vector<Key>* order) {
    std::map<Key, Entry> out;
    for (const auto& a : actions) {
      if (!a.data) continue;
      for (const auto& [t, set] : a.data->targets) {
        const Key k{a.operation, t};
        if (out.count(k)) continue;
        const TargetResult* r = a.results && a.results->targets.count(t) ? &a.results->targets.at(t) : nullptr;
        out.emplace(k, Entry{&a, &set, r});
        if (order) order->push_back(k);
      }
    }
    return out;
  };
  std::vector<Key> order_a, order_b;
  const auto ia = index(actions_a, &order_a);
  const auto ib = index(actions_b, &order_b);
  std::vector<Key> shared;
  for (const auto& k : order_a)
    if (ib.count(k)) shared.push_back(k);
  std::sort(shared.begin(), shared.end());
  if (shared.empty()) throw Error("the two runs share no (operation, target) pair; nothing to compare");

  const std::string color_a = palette()[0], color_b = palette()[1];
  std::string body = "<header>\n<h1>Run comparison</h1>\n";
  body += table({"", "run", "platform", "started"},
                {{"A", run_a.string(), meta_a.value("platform", std::string()), meta_a.value("started", std::string())},
                 {"B", run_b.string(), meta_b.value("platform", std::string()), meta_b.value("started", std::string())}},
                "runs");
  body += "</header>\n";
  for (const auto& key : shared) {
    const auto& [op, target] = key;
    const Entry& a = ia.at(key);
    const Entry& b = ib.at(key);
    const Routine& routine = find_routine(op);
    body += "<section id=\"compare-" + esc(op) + "-" + esc(target) + "\">\n<h2>" + esc(routine.title) + " on " +
            esc(target) + "</h2>\n<p>A: " + esc(a.action->id) + ", B: " + esc(b.action->id) + "</p>\n";
    auto usable = [](const TargetResult* r) { return r && r->quality != FitQuality::kFailed ? r : nullptr; };
    std::string err;
    const auto fa = figures_for(routine, target, *a.set, usable(a.result), &err);
    const auto fb = figures_for(routine, target, *b.set, usable(b.result), &err);
    for (std::size_t i = 0; i < std::max(fa.size(), fb.size()); ++i) {
      const bool both = i < fa.size() && i < fb.size();
      if (both && !fa[i].heatmap && !fb[i].heatmap) {
        Figure merged{fa[i].title, fa[i].x_label, fa[i].y_label, {}, {}};
        for (auto s : fa[i].series) {
          s.label = "A " + s.label;
          s.color = color_a;
          merged.series.push_back(s);
        }
        for (auto s : fb[i].series) {
          s.label = "B " + s.label;
          s.color = color_b;
          merged.series.push_back(s);
        }
        body += figure_html(merged);
      } else {
        if (i < fa.size()) {
          auto f = fa[i];
          f.title = "A: " + f.title;
          body += figure_html(f);
        }
        if (i < fb.size()) {
          auto f = fb[i];
          f.title = "B: " + f.title;
          body += figure_html(f);
        }
      }
    }
    if (!err.empty()) body += "<p>Plot unavailable: " + esc(err) + "</p>\n";
    std::set<std::string> names;
    for (const auto* r : {a.result, b.result})
      if (r)
        for (const auto& [k, v] : r->values) names.insert(k);
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"fit quality", a.result ? to_string(a.result->quality) : "-",
                    b.result ? to_string(b.result->quality) : "-"});
    for (const auto& n : names) {
      auto cell = [&n](const TargetResult* r) {
        return r && r->values.count(n) ? fmt(r->values.at(n)) : std::string("-");
      };
      rows.push_back({n, cell(a.result), cell(b.result)});
    }
    body += table({"result", "A", "B"}, rows, "results") + "</section>\n";
  }
  std::vector<std::vector<std::string>> unshared;
  for (const auto& k : order_a)
    if (!ib.count(k)) unshared.push_back({"A", k.first, k.second});
  for (const auto& k : order_b)
    if (!ia.count(k)) unshared.push_back({"B", k.first, k.second});
  std::sort(unshared.begin(), unshared.end(),
            [](const auto& x, const auto& y) { return std::tie(x[1], x[2], x[0]) < std::tie(y[1], y[2], y[0]); });
  body += "<h2>Unshared actions</h2>\n";
  body += unshared.empty() ? std::string("<p>None.</p>\n") : table({"run", "operation", "target"}, unshared, "unshared");
  return document("Comparison", body);
}

// ---- metrics ---------------------------------------------------------------

json MetricsRecord::to_json() const {
  return {{"timestamp", timestamp}, {"qubit", qubit},  {"metric", metric},
          {"value", encode_double(value)}, {"run", run}, {"operation", operation}};
}

MetricsRecord MetricsRecord::from_json(const json& doc) {
  MetricsRecord r;
  r.timestamp = doc.at("timestamp").get<std::string>();
  r.qubit = doc.at("qubit").get<std::string>();
  r.metric = doc.at("metric").get<std::string>();
  r.value = decode_double(doc.at("value"));
  r.run = doc.value("run", std::string());
  r.operation = doc.value("operation", std::string());
  return r;
}

void append_metrics(const fs::path& log, const std::vector<MetricsRecord>& records) {
  for (const auto& r : records)
    if (r.metric.empty() || r.timestamp.empty()) throw ValidationError("metrics", "record needs a timestamp and metric");
  std::string payload;
  for (const auto& r : records) payload += r.to_json().dump() + "\n";
  std::error_code ec;
  if (log.has_parent_path()) fs::create_directories(log.parent_path(), ec);
  const int fd = ::open(log.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw IoError("cannot open " + log.string() + ": " + std::strerror(errno));
  std::size_t done = 0;
  while (done < payload.size()) {
    const ssize_t n = ::write(fd, payload.data() + done, payload.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      const int err = errno;
      ::close(fd);
      throw IoError("cannot write " + log.string() + ": " + std::strerror(err));
    }
    done += std::size_t(n);
  }
  if (::close(fd) != 0) throw IoError("cannot close " + log.string());
}

std::vector<MetricsRecord> read_metrics(const fs::path& log) {
  std::ifstream in(log);
  if (!in) throw IoError("cannot read " + log.string());
  std::vector<MetricsRecord> out;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(MetricsRecord::from_json(json::parse(line)));
  return out;
}

// ---- archive ---------------------------------------------------------------

namespace {

constexpr std::size_t kBlock = 512;

void put_octal(char* field, std::size_t width, std::uint64_t value) {
  std::snprintf(field, width, "%0*llo", int(width - 1), static_cast<unsigned long long>(value));
}

std::string tar_header(const std::string& name, std::uint64_t size, bool directory) {
  std::string h(kBlock, '\0');
  std::string base = name, prefix;
  if (base.size() > 100) {
    const auto cut = base.rfind('/', base.size() - 1 > 155 ? 155 : base.size() - 1);
    if (cut == std::string::npos || base.size() - cut - 1 > 100 || cut > 155)
      throw IoError("path too long for the archive format: " + name);
    prefix = base.substr(0, cut);
    base = base.substr(cut + 1);
  }
  std::memcpy(&h[0], base.data(), base.size());
  put_octal(&h[100], 8, directory ? 0755 : 0644);
  put_octal(&h[108], 8, 0);
  put_octal(&h[116], 8, 0);
  put_octal(&h[124], 12, size);
  put_octal(&h[136], 12, 0);
  std::memset(&h[148], ' ', 8);
  h[156] = directory ? '5' : '0';
  std::memcpy(&h[257], "ustar", 6);
  std::memcpy(&h[263], "00", 2);
  std::memcpy(&h[345], prefix.data(), prefix.size());
  unsigned sum = 0;
  for (char c : h) sum += static_cast<unsigned char>(c);
  std::snprintf(&h[148], 8, "%06o", sum);
  h[155] = ' ';
  return h;
}

std::uint64_t parse_octal(const char* field, std::size_t width) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < width && field[i]; ++i) {
    if (field[i] == ' ') continue;
    if (field[i] < '0' || field[i] > '7') throw IoError("corrupt archive header");
    v = v * 8 + std::uint64_t(field[i] - '0');
  }
  return v;
}

}  // namespace

void export_archive(const fs::path& run_dir, const fs::path& dest) {
  if (!fs::is_directory(run_dir)) throw IoError("not a directory: " + run_dir.string());
  std::vector<std::pair<std::string, bool>> entries;
  for (const auto& e : fs::recursive_directory_iterator(run_dir)) {
    const std::string rel = fs::relative(e.path(), run_dir).generic_string();
    if (e.is_directory()) entries.push_back({rel + "/", true});
    else if (e.is_regular_file()) entries.push_back({rel, false});
  }
  if (std::none_of(entries.begin(), entries.end(), [](const auto& e) { return !e.second; }))
    throw IoError("run directory is empty: " + run_dir.string());
  std::sort(entries.begin(), entries.end());
  std::string out;
  for (const auto& [name, dir] : entries) {
    if (dir) {
      out += tar_header(name, 0, true);
      continue;
    }
    const std::string content = read_text_file(run_dir / name);
    out += tar_header(name, content.size(), false);
    out += content;
    out.append((kBlock - content.size() % kBlock) % kBlock, '\0');
  }
  out.append(2 * kBlock, '\0');
  write_text_file(dest, out);
}

void extract_archive(const fs::path& archive, const fs::path& dest) {
  const std::string data = read_text_file(archive);
  if (data.size() % kBlock != 0) throw IoError("corrupt archive: size is not a multiple of 512");
  fs::create_directories(dest);
  std::size_t pos = 0;
  while (pos + kBlock <= data.size()) {
    const char* h = data.data() + pos;
    if (std::all_of(h, h + kBlock, [](char c) { return c == '\0'; })) break;
    if (std::memcmp(h + 257, "ustar", 5) != 0) throw IoError("corrupt archive: not a ustar header");
    std::string name(h, strnlen(h, 100));
    const std::string prefix(h + 345, strnlen(h + 345, 155));
    if (!prefix.empty()) name = prefix + "/" + name;
    const fs::path rel(name);
    if (rel.is_absolute() || name.find("..") != std::string::npos) throw IoError("unsafe path in archive: " + name);
    const std::uint64_t size = parse_octal(h + 124, 12);
    pos += kBlock;
    if (h[156] == '5') {
      fs::create_directories(dest / rel);
    } else {
      if (pos + size > data.size()) throw IoError("corrupt archive: truncated entry " + name);
      fs::create_directories((dest / rel).parent_path());
      write_text_file(dest / rel, data.substr(pos, size));
      pos += (size + kBlock - 1) / kBlock * kBlock;
    }
  }
}

}  // namespace qcal
