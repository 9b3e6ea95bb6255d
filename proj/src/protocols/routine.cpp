#include <algorithm>
#include <cmath>
#include <set>

#include "catalog.h"
#include "common.h"
#include "qcal/error.h"
#include "qcal/protocols.h"

namespace qcal {
namespace {

json encode_values(const std::map<std::string, double>& values) {
  json out = json::object();
  for (const auto& [k, v] : values) out[k] = encode_double(v);
  return out;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

std::string to_string(FitQuality quality) {
  switch (quality) {
    case FitQuality::kGood: return "good";
    case FitQuality::kPoor: return "poor";
    case FitQuality::kFailed: return "failed";
  }
  return "failed";
}

FitQuality fit_quality_from_string(const std::string& text) {
  if (text == "good") return FitQuality::kGood;
  if (text == "poor") return FitQuality::kPoor;
  if (text == "failed") return FitQuality::kFailed;
  throw ValidationError("fit_quality", "unknown value '" + text + "'");
}

bool TargetResult::has_flag(const std::string& flag) const {
  return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

json TargetResult::to_json() const {
  json doc;
  doc["fit_quality"] = to_string(quality);
  doc["values"] = encode_values(values);
  doc["vectors"] = json::object();
  for (const auto& [k, v] : vectors) {
    json arr = json::array();
    for (double x : v) arr.push_back(encode_double(x));
    doc["vectors"][k] = arr;
  }
  doc["flags"] = flags;
  doc["message"] = message;
  doc["fit"] = {{"converged", fit.converged},
                {"cost", encode_double(fit.cost)},
                {"iterations", fit.iterations},
                {"diagnostic", fit.diagnostic}};
  doc["updates"] = updates;
  return doc;
}

TargetResult TargetResult::from_json(const json& doc) {
  TargetResult r;
  r.quality = fit_quality_from_string(doc.at("fit_quality").get<std::string>());
  for (auto it = doc.at("values").begin(); it != doc.at("values").end(); ++it)
    r.values[it.key()] = decode_double(it.value());
  for (auto it = doc.at("vectors").begin(); it != doc.at("vectors").end(); ++it) {
    std::vector<double> v;
    for (const auto& x : it.value()) v.push_back(decode_double(x));
    r.vectors[it.key()] = v;
  }
  r.flags = doc.at("flags").get<std::vector<std::string>>();
  r.message = doc.at("message").get<std::string>();
  const auto& fit = doc.at("fit");
  r.fit.converged = fit.at("converged").get<bool>();
  r.fit.cost = decode_double(fit.at("cost"));
  r.fit.iterations = fit.at("iterations").get<int>();
  r.fit.diagnostic = fit.at("diagnostic").get<std::string>();
  r.updates = doc.at("updates");
  return r;
}

json Results::to_json() const {
  json doc;
  doc["protocol"] = protocol;
  doc["targets"] = json::object();
  for (const auto& [t, r] : targets) doc["targets"][t] = r.to_json();
  return doc;
}

Results Results::from_json(const json& doc) {
  try {
    Results r;
    r.protocol = doc.at("protocol").get<std::string>();
    for (auto it = doc.at("targets").begin(); it != doc.at("targets").end(); ++it)
      r.targets[it.key()] = TargetResult::from_json(it.value());
    return r;
  } catch (const json::exception& e) {
    throw ValidationError("results", std::string("malformed results document: ") + e.what());
  }
}

json Data::to_json() const {
  json doc;
  doc["protocol"] = protocol;
  doc["parameters"] = parameters;
  doc["targets"] = json::object();
  for (const auto& [t, set] : targets) doc["targets"][t] = set.to_json();
  return doc;
}

Data Data::from_json(const json& doc) {
  try {
    Data d;
    d.protocol = doc.at("protocol").get<std::string>();
    d.parameters = doc.at("parameters");
    for (auto it = doc.at("targets").begin(); it != doc.at("targets").end(); ++it)
      d.targets[it.key()] = ArraySet::from_json(it.value());
    return d;
  } catch (const json::exception& e) {
    throw ValidationError("data", std::string("malformed data document: ") + e.what());
  }
}

double Params::number(const std::string& key) const {
  if (!values_.contains(key) || !values_.at(key).is_number())
    throw ValidationError("parameters." + key, "expected a number");
  return values_.at(key).get<double>();
}

int Params::integer(const std::string& key) const {
  const double v = number(key);
  if (v != std::floor(v) || std::abs(v) > 2e9) throw ValidationError("parameters." + key, "expected an integer");
  return static_cast<int>(v);
}

std::string Params::text(const std::string& key) const {
  if (!values_.contains(key) || !values_.at(key).is_string())
    throw ValidationError("parameters." + key, "expected a string");
  return values_.at(key).get<std::string>();
}

std::vector<double> Params::numbers(const std::string& key) const {
  if (!values_.contains(key) || !values_.at(key).is_array())
    throw ValidationError("parameters." + key, "expected a list of numbers");
  std::vector<double> out;
  for (const auto& v : values_.at(key)) {
    if (!v.is_number()) throw ValidationError("parameters." + key, "expected a list of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

Params Routine::resolve(const json& overrides) const {
  json merged = defaults;
  if (overrides.is_null()) return Params(merged);
  if (!overrides.is_object()) throw ValidationError("parameters", "expected a mapping");
  for (auto it = overrides.begin(); it != overrides.end(); ++it) {
    if (!defaults.contains(it.key())) {
      std::string known;
      for (auto d = defaults.begin(); d != defaults.end(); ++d) known += (known.empty() ? "" : ", ") + d.key();
      throw ValidationError("parameters." + it.key(), "unknown parameter for " + name + " (known: " + known + ")");
    }
    merged[it.key()] = it.value();
  }
  return Params(merged);
}

std::string Routine::field_prefix(const std::string& target) const {
  return (target_kind == TargetKind::kQubit ? "qubits." : "pairs.") + target + ".";
}

bool Routine::owns(const std::string& field) const {
  for (const auto& pattern : owned_fields) {
    if (pattern == field) return true;
    if (pattern.size() > 2 && pattern.ends_with(".*") && field.starts_with(pattern.substr(0, pattern.size() - 1)))
      return true;
  }
  return false;
}

Data Routine::acquire(const PlatformConfig& config, const std::vector<std::string>& targets, const json& params,
                      Device& device) const {
  check_targets(*this, config, targets);
  const Params p = resolve(params);
  Data data;
  data.protocol = name;
  data.parameters = p.values();
  for (const auto& t : targets) data.targets[t] = acquire_target(config, t, p, device);
  return data;
}

Results Routine::fit(const Data& data) const {
  Results results;
  results.protocol = name;
  Params p;
  try {
    p = resolve(data.parameters);
  } catch (const Error& e) {
    for (const auto& [t, set] : data.targets) results.targets[t] = protocols::failed(e.what());
    return results;
  }
  for (const auto& [t, set] : data.targets) {
    if (!set.all_finite()) {
      results.targets[t] = protocols::failed("non-finite values in acquired data");
      continue;
    }
    try {
      TargetResult r = fit_target(set, p);
      if (r.quality == FitQuality::kFailed) r.updates = json::object();
      results.targets[t] = std::move(r);
    } catch (const std::exception& e) {
      results.targets[t] = protocols::failed(e.what());
    }
  }
  return results;
}

std::vector<FieldUpdate> Routine::update(const Results& results, const PlatformConfig& config) const {
  std::vector<FieldUpdate> out;
  for (const auto& [t, r] : results.targets) {
    if (r.quality == FitQuality::kFailed) continue;
    if (target_kind == TargetKind::kQubit ? !config.qubits.count(t) : !config.pairs.count(t)) continue;
    for (auto it = r.updates.begin(); it != r.updates.end(); ++it) {
      if (!owns(it.key())) throw Error(name + " proposed an update to a field it does not own: " + it.key());
      out.push_back({field_prefix(t) + it.key(), it.value()});
    }
  }
  return out;
}

const std::vector<Routine>& routines() {
  static const std::vector<Routine> all = [] {
    using namespace protocols;
    std::vector<Routine> v = {resonator_spectroscopy(), resonator_punchout(), readout_frequency_optimization(),
                              qubit_spectroscopy(),     qubit_flux_dependence(), rabi(),
                              ramsey(),                 coherence_decay(),       flipping(),
                              drag_tuning(),            single_shot_classification(), standard_rb(),
                              avoided_crossing(),       chevron(),               cz_virtual_phase()};
    return v;
  }();
  return all;
}

const Routine& find_routine(const std::string& name) {
  for (const auto& r : routines())
    if (r.name == name) return r;
  std::vector<std::pair<std::size_t, std::string>> ranked;
  for (const auto& r : routines()) ranked.push_back({edit_distance(name, r.name), r.name});
  std::sort(ranked.begin(), ranked.end());
  std::string hint;
  for (std::size_t i = 0; i < std::min<std::size_t>(3, ranked.size()); ++i)
    hint += (i ? ", " : "") + ranked[i].second;
  throw ValidationError("operation", "unknown operation '" + name + "'; nearest: " + hint);
}

std::vector<std::string> routine_names() {
  std::vector<std::string> out;
  for (const auto& r : routines()) out.push_back(r.name);
  return out;
}

void check_targets(const Routine& routine, const PlatformConfig& config, const std::vector<std::string>& targets) {
  if (targets.empty()) throw ValidationError("targets", "no targets selected for " + routine.name);
  std::set<std::string> seen;
  for (const auto& t : targets) {
    if (!seen.insert(t).second) throw ValidationError("targets", "duplicate target '" + t + "'");
    const bool ok = routine.target_kind == TargetKind::kQubit ? config.qubits.count(t) != 0 : config.pairs.count(t) != 0;
    if (!ok)
      throw ValidationError("targets", "'" + t + "' is not a " +
                                           (routine.target_kind == TargetKind::kQubit ? "qubit" : "pair") +
                                           " of platform " + config.name);
  }
}

std::vector<std::string> default_targets(const Routine& routine, const PlatformConfig& config) {
  std::vector<std::string> out;
  if (routine.target_kind == TargetKind::kQubit)
    for (const auto& [id, q] : config.qubits) out.push_back(id);
  else
    for (const auto& [key, p] : config.pairs) out.push_back(key);
  return out;
}

}  // namespace qcal
