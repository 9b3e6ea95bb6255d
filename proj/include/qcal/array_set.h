#ifndef QCAL_ARRAY_SET_H_
#define QCAL_ARRAY_SET_H_

#include <complex>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "qcal/json_io.h"

namespace qcal {

enum class DType { kFloat64, kComplex128 };

// Dense row-major array. Complex arrays store interleaved (re, im) pairs in `values`.
struct NamedArray {
  DType dtype = DType::kFloat64;
  std::vector<std::size_t> shape;
  std::vector<double> values;

  std::size_t size() const;  // product of the shape
};

// Named arrays plus scalar metadata; the unit of raw acquisition output.
class ArraySet {
 public:
  void add_real(const std::string& name, std::vector<std::size_t> shape, std::vector<double> values);
  void add_complex(const std::string& name, std::vector<std::size_t> shape,
                   const std::vector<std::complex<double>>& values);

  bool has(const std::string& name) const { return arrays_.count(name) != 0; }
  const NamedArray& at(const std::string& name) const;
  NamedArray& at(const std::string& name);
  const std::vector<double>& real(const std::string& name) const;
  std::vector<std::complex<double>> complex(const std::string& name) const;

  const std::map<std::string, NamedArray>& arrays() const { return arrays_; }
  std::map<std::string, NamedArray>& arrays() { return arrays_; }
  std::map<std::string, json>& metadata() { return metadata_; }
  const std::map<std::string, json>& metadata() const { return metadata_; }
  double meta_number(const std::string& key) const;

  bool all_finite() const;

  json to_json() const;
  static ArraySet from_json(const json& doc);

  bool operator==(const ArraySet& other) const;

 private:
  std::map<std::string, NamedArray> arrays_;
  std::map<std::string, json> metadata_;
};

}  // namespace qcal

#endif  // QCAL_ARRAY_SET_H_
