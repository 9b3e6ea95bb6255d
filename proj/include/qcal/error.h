#ifndef QCAL_ERROR_H_
#define QCAL_ERROR_H_

#include <stdexcept>
#include <string>

namespace qcal {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Document failed schema or invariant checks. `field()` is the dotted path of
// the offending leaf (e.g. "qubits.q0.t2_ramsey_ns").
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& message)
      : Error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Violated operation precondition (bad sweep, too few points, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

}  // namespace qcal

#endif  // QCAL_ERROR_H_
