#include "qcal/array_set.h"

#include <cmath>
#include <functional>
#include <numeric>

#include "qcal/error.h"

namespace qcal {
namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

// Builds nested arrays for dims[depth..]; `inner` is 1 for real and 2 for complex pairs.
json nest(const std::vector<double>& values, const std::vector<std::size_t>& shape, std::size_t depth,
          std::size_t& cursor, std::size_t inner) {
  json out = json::array();
  if (depth == shape.size()) {
    if (inner == 1) return values[cursor++];
    out.push_back(values[cursor++]);
    out.push_back(values[cursor++]);
    return out;
  }
  for (std::size_t i = 0; i < shape[depth]; ++i) out.push_back(nest(values, shape, depth + 1, cursor, inner));
  return out;
}

void unnest(const json& node, const std::vector<std::size_t>& shape, std::size_t depth, std::vector<double>& out,
            std::size_t inner, const std::string& name) {
  if (depth == shape.size()) {
    if (inner == 1) {
      out.push_back(decode_double(node));
    } else {
      if (!node.is_array() || node.size() != 2) throw ValidationError(name, "complex entries must be [re, im]");
      out.push_back(decode_double(node[0]));
      out.push_back(decode_double(node[1]));
    }
    return;
  }
  if (!node.is_array() || node.size() != shape[depth]) throw ValidationError(name, "data does not match declared shape");
  for (const auto& child : node) unnest(child, shape, depth + 1, out, inner, name);
}

json encode_values(const std::vector<double>& values) {
  json out = json::array();
  for (double v : values) out.push_back(encode_double(v));
  return out;
}

}  // namespace

std::size_t NamedArray::size() const { return product(shape); }

void ArraySet::add_real(const std::string& name, std::vector<std::size_t> shape, std::vector<double> values) {
  if (arrays_.count(name)) throw PreconditionError("duplicate array name '" + name + "'");
  if (product(shape) != values.size()) throw PreconditionError("array '" + name + "' shape does not match length");
  arrays_[name] = NamedArray{DType::kFloat64, std::move(shape), std::move(values)};
}

void ArraySet::add_complex(const std::string& name, std::vector<std::size_t> shape,
                           const std::vector<std::complex<double>>& values) {
  if (arrays_.count(name)) throw PreconditionError("duplicate array name '" + name + "'");
  if (product(shape) != values.size()) throw PreconditionError("array '" + name + "' shape does not match length");
  std::vector<double> flat;
  flat.reserve(values.size() * 2);
  for (const auto& c : values) {
    flat.push_back(c.real());
    flat.push_back(c.imag());
  }
  arrays_[name] = NamedArray{DType::kComplex128, std::move(shape), std::move(flat)};
}

const NamedArray& ArraySet::at(const std::string& name) const {
  auto it = arrays_.find(name);
  if (it == arrays_.end()) throw ValidationError(name, "array not present");
  return it->second;
}

NamedArray& ArraySet::at(const std::string& name) {
  auto it = arrays_.find(name);
  if (it == arrays_.end()) throw ValidationError(name, "array not present");
  return it->second;
}

const std::vector<double>& ArraySet::real(const std::string& name) const {
  const auto& a = at(name);
  if (a.dtype != DType::kFloat64) throw ValidationError(name, "expected a float64 array");
  return a.values;
}

std::vector<std::complex<double>> ArraySet::complex(const std::string& name) const {
  const auto& a = at(name);
  if (a.dtype != DType::kComplex128) throw ValidationError(name, "expected a complex128 array");
  std::vector<std::complex<double>> out(a.values.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {a.values[2 * i], a.values[2 * i + 1]};
  return out;
}

double ArraySet::meta_number(const std::string& key) const {
  auto it = metadata_.find(key);
  if (it == metadata_.end()) throw ValidationError(key, "metadata entry missing");
  return decode_double(it->second);
}

bool ArraySet::all_finite() const {
  for (const auto& [name, a] : arrays_)
    for (double v : a.values)
      if (!std::isfinite(v)) return false;
  return true;
}

json ArraySet::to_json() const {
  json doc;
  doc["arrays"] = json::object();
  for (const auto& [name, a] : arrays_) {
    json j;
    j["dtype"] = a.dtype == DType::kFloat64 ? "float64" : "complex128";
    j["shape"] = a.shape;
    std::size_t cursor = 0;
    if (a.shape.empty()) {
      j["data"] = encode_values(a.values);
    } else {
      // nest() stores raw doubles; non-finite values need the string encoding.
      bool finite = true;
      for (double v : a.values) finite = finite && std::isfinite(v);
      if (finite) {
        j["data"] = nest(a.values, a.shape, 0, cursor, a.dtype == DType::kFloat64 ? 1 : 2);
      } else {
        json nested = nest(a.values, a.shape, 0, cursor, a.dtype == DType::kFloat64 ? 1 : 2);
        std::function<void(json&)> fix = [&](json& n) {
          if (n.is_array()) {
            for (auto& c : n) fix(c);
          } else if (n.is_number()) {
            n = encode_double(n.get<double>());
          } else if (n.is_null()) {
            n = "nan";
          }
        };
        fix(nested);
        j["data"] = nested;
      }
    }
    doc["arrays"][name] = std::move(j);
  }
  doc["metadata"] = json::object();
  for (const auto& [k, v] : metadata_) doc["metadata"][k] = v;
  return doc;
}

ArraySet ArraySet::from_json(const json& doc) {
  ArraySet set;
  if (!doc.is_object() || !doc.contains("arrays")) throw ValidationError("arrays", "missing");
  for (auto it = doc["arrays"].begin(); it != doc["arrays"].end(); ++it) {
    const auto& j = it.value();
    NamedArray a;
    const std::string dtype = j.at("dtype").get<std::string>();
    if (dtype == "float64") a.dtype = DType::kFloat64;
    else if (dtype == "complex128") a.dtype = DType::kComplex128;
    else throw ValidationError(it.key(), "unknown dtype '" + dtype + "'");
    a.shape = j.at("shape").get<std::vector<std::size_t>>();
    const std::size_t inner = a.dtype == DType::kFloat64 ? 1 : 2;
    if (a.shape.empty()) {
      for (const auto& v : j.at("data")) a.values.push_back(decode_double(v));
    } else {
      a.values.reserve(product(a.shape) * inner);
      unnest(j.at("data"), a.shape, 0, a.values, inner, it.key());
    }
    set.arrays_[it.key()] = std::move(a);
  }
  if (doc.contains("metadata")) {
    for (auto it = doc["metadata"].begin(); it != doc["metadata"].end(); ++it) set.metadata_[it.key()] = it.value();
  }
  return set;
}

bool ArraySet::operator==(const ArraySet& other) const {
  if (metadata_ != other.metadata_ || arrays_.size() != other.arrays_.size()) return false;
  for (const auto& [name, a] : arrays_) {
    auto it = other.arrays_.find(name);
    if (it == other.arrays_.end()) return false;
    const auto& b = it->second;
    if (a.dtype != b.dtype || a.shape != b.shape || a.values.size() != b.values.size()) return false;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
      const double x = a.values[i], y = b.values[i];
      if (!(x == y || (std::isnan(x) && std::isnan(y)))) return false;
    }
  }
  return true;
}

}  // namespace qcal
