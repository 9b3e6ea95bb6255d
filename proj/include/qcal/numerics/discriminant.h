#ifndef QCAL_NUMERICS_DISCRIMINANT_H_
#define QCAL_NUMERICS_DISCRIMINANT_H_

#include <Eigen/Dense>
#include <vector>

#include "qcal/platform.h"

namespace qcal::numerics {

// One IQ point per row: column 0 is I, column 1 is Q.
using IqPoints = Eigen::Matrix<double, Eigen::Dynamic, 2>;

struct Discriminant {
  ClassifierParams params;
  bool degenerate = false;  // class means coincide; fidelity pinned to 0.5
};

// Rotated-I projection used by the classifier: I cos(a) - Q sin(a).
Eigen::VectorXd project(const IqPoints& shots, double angle_rad);

// Rotates the IQ plane so the |0> -> |1> mean difference lies along +I, then picks the
// midpoint between adjacent sorted projections that maximises the assignment fidelity
// F = 1 - (P(1|0) + P(0|1)) / 2.
Discriminant train_linear_discriminant(const IqPoints& shots0, const IqPoints& shots1);

// 1 iff the projection is strictly above the threshold.
std::vector<int> classify(const IqPoints& shots, const ClassifierParams& params);

// Assignment fidelity of a classifier on labelled shots.
double assignment_fidelity(const IqPoints& shots0, const IqPoints& shots1, const ClassifierParams& params);

}  // namespace qcal::numerics

#endif  // QCAL_NUMERICS_DISCRIMINANT_H_
