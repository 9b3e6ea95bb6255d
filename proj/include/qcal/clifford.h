#ifndef QCAL_CLIFFORD_H_
#define QCAL_CLIFFORD_H_

#include <Eigen/Dense>
#include <array>
#include <vector>

namespace qcal {

using Matrix2c = Eigen::Matrix2cd;

Matrix2c rz(double theta);
Matrix2c rx(double theta);
// Rotation by `theta` about the equatorial axis (cos(axis_phase), sin(axis_phase), 0).
Matrix2c equatorial_rotation(double theta, double axis_phase);

// True when the two unitaries agree up to a global phase.
bool equal_up_to_phase(const Matrix2c& u, const Matrix2c& v, double tol = 1e-9);

// Single-qubit Clifford with its virtual-Z decomposition
// U = RZ(a) RX(pi/2) RZ(b) RX(pi/2) RZ(c), angles in multiples of pi/2.
struct CliffordElement {
  Matrix2c unitary;
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

class CliffordGroup {
 public:
  static constexpr int kOrder = 24;

  CliffordGroup();

  int size() const { return kOrder; }
  int identity() const { return 0; }
  const CliffordElement& operator[](int i) const { return elements_[i]; }
  const std::vector<CliffordElement>& elements() const { return elements_; }

  // Element equal to applying `first` and then `second` (unitary second * first).
  int compose(int first, int second) const { return compose_[first][second]; }
  int inverse(int i) const { return inverse_[i]; }
  // Index of a unitary in the table, or -1.
  int find(const Matrix2c& u) const;

  // Composes a sequence applied left to right.
  int compose_sequence(const std::vector<int>& sequence) const;

 private:
  std::vector<CliffordElement> elements_;
  std::array<std::array<int, kOrder>, kOrder> compose_{};
  std::array<int, kOrder> inverse_{};
};

const CliffordGroup& clifford_table();

}  // namespace qcal

#endif  // QCAL_CLIFFORD_H_
