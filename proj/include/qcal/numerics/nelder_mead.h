#ifndef QCAL_NUMERICS_NELDER_MEAD_H_
#define QCAL_NUMERICS_NELDER_MEAD_H_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "qcal/error.h"

namespace qcal::numerics {

template <typename Scalar = double>
struct NelderMeadResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x_best;
  Scalar f_best = std::numeric_limits<Scalar>::infinity();
  int evaluations = 0;
  bool converged = false;  // spread fell below tol (false when the budget ran out)
};

// Nelder-Mead simplex with reflection 1, expansion 2, contraction 0.5 and shrink 0.5.
// The initial simplex is x0 plus x0 + step_i e_i. Stops when max f - min f over the
// simplex drops below `tol` or after `max_evals` objective calls.
template <typename Scalar, typename Objective>
NelderMeadResult<Scalar> nelder_mead(Objective&& objective, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x0,
                                     const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& step, int max_evals,
                                     Scalar tol) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  constexpr Scalar kReflect = 1, kExpand = 2, kContract = 0.5, kShrink = 0.5;
  const Eigen::Index dim = x0.size();
  if (step.size() != dim) throw PreconditionError("step has wrong dimension");
  for (Eigen::Index i = 0; i < dim; ++i)
    if (step[i] == Scalar(0)) throw PreconditionError("simplex step entries must be non-zero");
  if (max_evals < dim + 1) throw PreconditionError("max_evals must be at least dim + 1");

  NelderMeadResult<Scalar> result;
  std::vector<Vec> pts;
  std::vector<Scalar> vals;
  auto eval = [&](const Vec& x) {
    ++result.evaluations;
    Scalar f = objective(x);
    if (!std::isfinite(f)) f = std::numeric_limits<Scalar>::infinity();
    if (f < result.f_best) {
      result.f_best = f;
      result.x_best = x;
    }
    return f;
  };

  pts.push_back(x0);
  for (Eigen::Index i = 0; i < dim; ++i) {
    Vec v = x0;
    v[i] += step[i];
    pts.push_back(v);
  }
  result.x_best = x0;
  for (const auto& p : pts) {
    ++result.evaluations;
    const Scalar f = objective(p);
    if (!std::isfinite(f)) throw Error("objective is not finite at an initial simplex vertex");
    vals.push_back(f);
  }
  // Ties keep the earlier vertex, so x0 wins among equals.
  const auto first_best = std::min_element(vals.begin(), vals.end()) - vals.begin();
  result.f_best = vals[first_best];
  result.x_best = pts[first_best];

  std::vector<std::size_t> order(pts.size());
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    std::vector<Vec> p2;
    std::vector<Scalar> v2;
    for (auto i : order) {
      p2.push_back(pts[i]);
      v2.push_back(vals[i]);
    }
    pts = std::move(p2);
    vals = std::move(v2);
  };

  while (true) {
    sort_simplex();
    if (vals.back() - vals.front() < tol) {
      result.converged = true;
      break;
    }
    if (result.evaluations >= max_evals) break;

    const std::size_t worst = pts.size() - 1;
    Vec centroid = Vec::Zero(dim);
    for (std::size_t i = 0; i < worst; ++i) centroid += pts[i];
    centroid /= Scalar(dim);

    const Vec xr = centroid + kReflect * (centroid - pts[worst]);
    const Scalar fr = eval(xr);
    if (fr < vals[0]) {
      if (result.evaluations >= max_evals) {
        pts[worst] = xr;
        vals[worst] = fr;
        continue;
      }
      const Vec xe = centroid + kExpand * (xr - centroid);
      const Scalar fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        vals[worst] = fe;
      } else {
        pts[worst] = xr;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[worst - 1]) {
      pts[worst] = xr;
      vals[worst] = fr;
      continue;
    }
    if (result.evaluations >= max_evals) break;
    bool contracted = false;
    if (fr < vals[worst]) {
      const Vec xc = centroid + kContract * (xr - centroid);
      const Scalar fc = eval(xc);
      if (fc <= fr) {
        pts[worst] = xc;
        vals[worst] = fc;
        contracted = true;
      }
    } else {
      const Vec xc = centroid + kContract * (pts[worst] - centroid);
      const Scalar fc = eval(xc);
      if (fc < vals[worst]) {
        pts[worst] = xc;
        vals[worst] = fc;
        contracted = true;
      }
    }
    if (contracted) continue;
    for (std::size_t i = 1; i < pts.size(); ++i) {
      if (result.evaluations >= max_evals) break;
      pts[i] = pts[0] + kShrink * (pts[i] - pts[0]);
      vals[i] = eval(pts[i]);
    }
  }
  return result;
}

}  // namespace qcal::numerics

#endif  // QCAL_NUMERICS_NELDER_MEAD_H_
