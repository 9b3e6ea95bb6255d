#include "qcal/clifford.h"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace qcal {

using namespace std::complex_literals;

Matrix2c rz(double theta) {
  Matrix2c m = Matrix2c::Zero();
  m(0, 0) = std::exp(-0.5i * theta);
  m(1, 1) = std::exp(0.5i * theta);
  return m;
}

Matrix2c rx(double theta) { return equatorial_rotation(theta, 0.0); }

Matrix2c equatorial_rotation(double theta, double axis_phase) {
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  Matrix2c m;
  m(0, 0) = c;
  m(1, 1) = c;
  m(0, 1) = -1i * s * std::exp(-1i * axis_phase);
  m(1, 0) = -1i * s * std::exp(1i * axis_phase);
  return m;
}

bool equal_up_to_phase(const Matrix2c& u, const Matrix2c& v, double tol) {
  return std::abs(std::abs((u.adjoint() * v).trace()) - 2.0) < tol;
}

CliffordGroup::CliffordGroup() {
  constexpr double kHalfPi = std::numbers::pi / 2;
  const double angles[] = {0.0, kHalfPi, std::numbers::pi, -kHalfPi};
  const Matrix2c x90 = rx(kHalfPi);
  for (double a : angles) {
    for (double b : angles) {
      for (double c : angles) {
        const Matrix2c u = rz(a) * x90 * rz(b) * x90 * rz(c);
        if (find(u) < 0) elements_.push_back({u, a, b, c});
      }
    }
  }
  if (static_cast<int>(elements_.size()) != kOrder) throw std::logic_error("Clifford enumeration did not close");
  for (int i = 0; i < kOrder; ++i) {
    if (equal_up_to_phase(elements_[i].unitary, Matrix2c::Identity())) {
      std::swap(elements_[0], elements_[i]);
      break;
    }
  }
  for (int i = 0; i < kOrder; ++i) {
    for (int j = 0; j < kOrder; ++j) {
      const int k = find(elements_[j].unitary * elements_[i].unitary);
      if (k < 0) throw std::logic_error("Clifford table not closed under composition");
      compose_[i][j] = k;
      if (k == 0) inverse_[i] = j;
    }
  }
}

int CliffordGroup::find(const Matrix2c& u) const {
  for (std::size_t i = 0; i < elements_.size(); ++i)
    if (equal_up_to_phase(elements_[i].unitary, u, 1e-6)) return static_cast<int>(i);
  return -1;
}

int CliffordGroup::compose_sequence(const std::vector<int>& sequence) const {
  int acc = identity();
  for (int g : sequence) acc = compose(acc, g);
  return acc;
}

const CliffordGroup& clifford_table() {
  static const CliffordGroup table;
  return table;
}

}  // namespace qcal
