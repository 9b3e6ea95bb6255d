#include "qcal/numerics/discriminant.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qcal/error.h"

namespace qcal::numerics {

Eigen::VectorXd project(const IqPoints& shots, double angle_rad) {
  return shots.col(0) * std::cos(angle_rad) - shots.col(1) * std::sin(angle_rad);
}

Discriminant train_linear_discriminant(const IqPoints& shots0, const IqPoints& shots1) {
  if (shots0.rows() < 2 || shots1.rows() < 2) throw PreconditionError("need at least 2 shots per class");
  const Eigen::RowVector2d mean0 = shots0.colwise().mean();
  const Eigen::RowVector2d mean1 = shots1.colwise().mean();
  const Eigen::RowVector2d delta = mean1 - mean0;

  Discriminant out;
  if (delta.norm() < 1e-12) {
    out.degenerate = true;
    out.params.angle_rad = 0.0;
    out.params.threshold = 0.5 * (mean0[0] + mean1[0]);
    out.params.assignment_fidelity = 0.5;
    return out;
  }
  double angle = -std::atan2(delta[1], delta[0]);
  if (angle <= -std::numbers::pi) angle += 2 * std::numbers::pi;
  out.params.angle_rad = angle;

  const Eigen::VectorXd p0 = project(shots0, angle);
  const Eigen::VectorXd p1 = project(shots1, angle);
  struct Item {
    double value;
    int label;
  };
  std::vector<Item> items;
  items.reserve(p0.size() + p1.size());
  for (Eigen::Index i = 0; i < p0.size(); ++i) items.push_back({p0[i], 0});
  for (Eigen::Index i = 0; i < p1.size(); ++i) items.push_back({p1[i], 1});
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.value < b.value; });

  const double n0 = double(p0.size()), n1 = double(p1.size());
  // Walking the threshold up: everything at or below it reads 0.
  double zeros_below = 0, ones_below = 0;
  double best_f = -1.0, best_t = items.front().value - 1.0;
  for (std::size_t i = 0; i + 1 < items.size(); ++i) {
    (items[i].label == 0 ? zeros_below : ones_below) += 1;
    if (items[i + 1].value == items[i].value) continue;
    const double err0 = (n0 - zeros_below) / n0;  // |0> read as 1
    const double err1 = ones_below / n1;          // |1> read as 0
    const double f = 1.0 - 0.5 * (err0 + err1);
    if (f > best_f) {
      best_f = f;
      best_t = 0.5 * (items[i].value + items[i + 1].value);
    }
  }
  if (best_f < 0) {
    // Every projection identical along the separation axis.
    best_t = items.front().value;
    best_f = 0.5;
  }
  out.params.threshold = best_t;
  out.params.assignment_fidelity = best_f;
  return out;
}

std::vector<int> classify(const IqPoints& shots, const ClassifierParams& params) {
  const Eigen::VectorXd p = project(shots, params.angle_rad);
  std::vector<int> bits(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) bits[i] = p[i] > params.threshold ? 1 : 0;
  return bits;
}

double assignment_fidelity(const IqPoints& shots0, const IqPoints& shots1, const ClassifierParams& params) {
  const auto b0 = classify(shots0, params);
  const auto b1 = classify(shots1, params);
  double e0 = 0, e1 = 0;
  for (int b : b0) e0 += b;
  for (int b : b1) e1 += 1 - b;
  return 1.0 - 0.5 * (e0 / double(b0.size()) + e1 / double(b1.size()));
}

}  // namespace qcal::numerics
