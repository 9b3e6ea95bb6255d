#ifndef QCAL_NUMERICS_LEAST_SQUARES_H_
#define QCAL_NUMERICS_LEAST_SQUARES_H_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <type_traits>
#include <vector>

#include "qcal/error.h"

namespace qcal::numerics {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
struct Bounds {
  Scalar lo = -std::numeric_limits<Scalar>::infinity();
  Scalar hi = std::numeric_limits<Scalar>::infinity();
};

// Residual problem: residuals(params) has length n_residuals. Bounds are optional (empty or one per param).
template <typename Scalar = double>
struct ModelSpec {
  std::function<Vector<Scalar>(const Vector<Scalar>&)> residuals;
  Eigen::Index n_params = 0;
  Eigen::Index n_residuals = 0;
  std::vector<Bounds<Scalar>> bounds;
};

// y = eval(x, params); turned into a ModelSpec by curve_problem().
template <typename Scalar = double>
struct CurveModel {
  std::string name;
  std::vector<std::string> param_names;
  std::function<Scalar(Scalar, const Vector<Scalar>&)> eval;

  Eigen::Index n_params() const { return static_cast<Eigen::Index>(param_names.size()); }
  Scalar operator()(Scalar x, const Vector<Scalar>& p) const { return eval(x, p); }
};

template <typename Scalar = double>
struct FitResult {
  Vector<Scalar> params;
  Vector<Scalar> std_errors;  // +inf where the normal matrix is singular
  Scalar cost = 0;            // sum of squared residuals
  bool converged = false;
  int iterations = 0;
  std::vector<Scalar> cost_history;  // cost after each accepted step, starting at x0
  std::string diagnostic;
};

struct LmOptions {
  int max_iterations = 500;
  double initial_damping = 1e-3;
  double max_damping = 1e16;
  double relative_tolerance = 1e-10;
  double gradient_tolerance = 1e-12;
};

template <typename Scalar>
Vector<Scalar> clamp_to_bounds(const Vector<Scalar>& x, const std::vector<Bounds<Scalar>>& bounds) {
  if (bounds.empty()) return x;
  Vector<Scalar> out = x;
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = std::clamp(out[i], bounds[i].lo, bounds[i].hi);
  return out;
}

// Forward differences, h_j = 1e-6 * max(|x_j|, 1); steps backwards when the forward point leaves the box.
template <typename Scalar>
Matrix<Scalar> forward_jacobian(const ModelSpec<Scalar>& model, const Vector<Scalar>& x, const Vector<Scalar>& r0) {
  Matrix<Scalar> jac(r0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Scalar h = Scalar(1e-6) * std::max<Scalar>(std::abs(x[j]), Scalar(1));
    if (!model.bounds.empty() && x[j] + h > model.bounds[j].hi) h = -h;
    Vector<Scalar> xp = x;
    xp[j] += h;
    jac.col(j) = (model.residuals(xp) - r0) / h;
  }
  return jac;
}

template <typename Scalar>
Matrix<Scalar> forward_jacobian(const ModelSpec<Scalar>& model, const Vector<Scalar>& x) {
  return forward_jacobian(model, x, model.residuals(x));
}

namespace detail {

// Parameter standard errors from J at the solution. Columns are normalised first so the
// rank decision does not depend on parameter units.
template <typename Scalar>
Vector<Scalar> standard_errors(const Matrix<Scalar>& jac, Scalar cost, bool* singular) {
  const Eigen::Index m = jac.rows(), n = jac.cols();
  const Scalar inf = std::numeric_limits<Scalar>::infinity();
  Vector<Scalar> scale(n);
  for (Eigen::Index j = 0; j < n; ++j) scale[j] = jac.col(j).norm();
  Vector<Scalar> out = Vector<Scalar>::Constant(n, inf);
  *singular = false;
  Matrix<Scalar> js = jac;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (scale[j] > 0) js.col(j) /= scale[j];
    else *singular = true;
  }
  Eigen::JacobiSVD<Matrix<Scalar>> svd(js, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const Scalar tol = Scalar(1e-9) * (sv.size() ? sv[0] : Scalar(0));
  const Scalar variance = m > n ? cost / Scalar(m - n) : Scalar(0);
  std::vector<bool> in_null(n, false);
  for (Eigen::Index k = 0; k < sv.size(); ++k) {
    if (sv[k] <= tol) {
      *singular = true;
      for (Eigen::Index j = 0; j < n; ++j)
        if (std::abs(svd.matrixV()(j, k)) > Scalar(1e-8)) in_null[j] = true;
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (scale[j] == 0 || in_null[j]) continue;
    Scalar acc = 0;
    for (Eigen::Index k = 0; k < sv.size(); ++k) {
      if (sv[k] <= tol) continue;
      const Scalar v = svd.matrixV()(j, k) / sv[k];
      acc += v * v;
    }
    out[j] = std::sqrt(acc * variance) / scale[j];
  }
  return out;
}

}  // namespace detail

// Damped Gauss-Newton (Marquardt scaling). Damping starts at 1e-3 and moves by x10 / /10 on
// rejected / accepted steps; parameters are clamped into their bounds after each step.
template <typename Scalar>
FitResult<Scalar> levenberg_marquardt(const ModelSpec<Scalar>& model, const std::type_identity_t<Vector<Scalar>>& x0,
                                      const LmOptions& options = {}) {
  if (x0.size() != model.n_params) throw PreconditionError("initial guess has wrong dimension");
  if (model.n_residuals < model.n_params)
    throw PreconditionError("fewer data points (" + std::to_string(model.n_residuals) + ") than parameters (" +
                            std::to_string(model.n_params) + ")");
  if (!model.bounds.empty()) {
    if (static_cast<Eigen::Index>(model.bounds.size()) != model.n_params)
      throw PreconditionError("bounds must be given for every parameter");
    for (const auto& b : model.bounds)
      if (!(b.lo < b.hi)) throw PreconditionError("bounds need lo < hi");
  }

  FitResult<Scalar> result;
  Vector<Scalar> x = clamp_to_bounds(x0, model.bounds);
  Vector<Scalar> r = model.residuals(x);
  if (r.size() != model.n_residuals) throw PreconditionError("residual length does not match data length");
  if (!r.allFinite()) throw PreconditionError("non-finite residuals at the initial guess");
  Scalar cost = r.squaredNorm();
  result.cost_history.push_back(cost);
  Scalar damping = Scalar(options.initial_damping);
  bool solve_failed = false;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    result.iterations = iter + 1;
    if (cost == Scalar(0)) {
      result.converged = true;
      break;
    }
    const Matrix<Scalar> jac = forward_jacobian(model, x, r);
    if (!jac.allFinite()) {
      result.diagnostic = "non-finite Jacobian";
      break;
    }
    Vector<Scalar> grad = jac.transpose() * r;
    Matrix<Scalar> normal = jac.transpose() * jac;
    // Parameters pinned at a bound by the descent direction are held fixed for this step.
    std::vector<bool> pinned(static_cast<std::size_t>(x.size()), false);
    for (Eigen::Index j = 0; j < x.size() && !model.bounds.empty(); ++j) {
      const auto& b = model.bounds[static_cast<std::size_t>(j)];
      if ((x[j] <= b.lo && grad[j] > 0) || (x[j] >= b.hi && grad[j] < 0)) {
        pinned[static_cast<std::size_t>(j)] = true;
        grad[j] = 0;
        normal.row(j).setZero();
        normal.col(j).setZero();
      }
    }
    if (grad.norm() < Scalar(options.gradient_tolerance)) {
      result.converged = true;
      break;
    }
    Vector<Scalar> diag = normal.diagonal();
    const Scalar floor = std::max(diag.maxCoeff() * Scalar(1e-15), std::numeric_limits<Scalar>::min());
    for (Eigen::Index i = 0; i < diag.size(); ++i) diag[i] = std::max(diag[i], floor);
    for (Eigen::Index j = 0; j < x.size(); ++j)
      if (pinned[static_cast<std::size_t>(j)]) normal(j, j) = diag[j];

    bool accepted = false;
    bool stop = false;
    solve_failed = true;
    while (damping <= Scalar(options.max_damping)) {
      Matrix<Scalar> lhs = normal;
      lhs.diagonal() += damping * diag;
      Eigen::LDLT<Matrix<Scalar>> ldlt(lhs);
      Vector<Scalar> step = ldlt.solve(-grad);
      if (ldlt.info() != Eigen::Success || !step.allFinite()) {
        damping *= 10;
        continue;
      }
      solve_failed = false;
      const Vector<Scalar> x_new = clamp_to_bounds<Scalar>(x + step, model.bounds);
      const Vector<Scalar> r_new = model.residuals(x_new);
      const Scalar cost_new = r_new.squaredNorm();
      if (r_new.allFinite() && cost_new < cost) {
        const Scalar relative = (cost - cost_new) / cost;
        x = x_new;
        r = r_new;
        cost = cost_new;
        result.cost_history.push_back(cost);
        damping = std::max(damping / 10, Scalar(1e-15));
        accepted = true;
        if (relative < Scalar(options.relative_tolerance)) {
          result.converged = true;
          stop = true;
        }
        break;
      }
      damping *= 10;
    }
    if (!accepted) {
      // No descent within the smallest trust region: a minimum to working precision,
      // unless the damped system could never be solved.
      if (solve_failed) {
        result.diagnostic = "singular normal equations persisted after damping escalation";
      } else {
        result.converged = true;
      }
      break;
    }
    if (stop) break;
  }

  result.params = x;
  result.cost = cost;
  bool singular = false;
  const Matrix<Scalar> jac = forward_jacobian(model, x, r);
  result.std_errors = jac.allFinite() ? detail::standard_errors<Scalar>(jac, cost, &singular)
                                      : Vector<Scalar>::Constant(x.size(), std::numeric_limits<Scalar>::infinity());
  if (singular && result.cost > Scalar(0)) {
    result.converged = false;
    if (result.diagnostic.empty()) result.diagnostic = "singular normal equations at the solution";
  }
  if (!result.converged && result.diagnostic.empty()) result.diagnostic = "iteration limit reached";
  return result;
}

template <typename Scalar>
ModelSpec<Scalar> curve_problem(const CurveModel<Scalar>& model, const std::type_identity_t<Vector<Scalar>>& x,
                                const std::type_identity_t<Vector<Scalar>>& y,
                                std::vector<Bounds<Scalar>> bounds = {}) {
  if (x.size() != y.size()) throw PreconditionError("x and y lengths differ");
  ModelSpec<Scalar> spec;
  spec.n_params = model.n_params();
  spec.n_residuals = x.size();
  spec.bounds = std::move(bounds);
  spec.residuals = [model, x, y](const Vector<Scalar>& p) {
    Vector<Scalar> r(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) r[i] = model.eval(x[i], p) - y[i];
    return r;
  };
  return spec;
}

template <typename Scalar>
FitResult<Scalar> fit_curve(const CurveModel<Scalar>& model, const std::type_identity_t<Vector<Scalar>>& x,
                            const std::type_identity_t<Vector<Scalar>>& y, const std::type_identity_t<Vector<Scalar>>& x0, std::vector<Bounds<Scalar>> bounds = {},
                            const LmOptions& options = {}) {
  return levenberg_marquardt(curve_problem(model, x, y, std::move(bounds)), x0, options);
}

}  // namespace qcal::numerics

#endif  // QCAL_NUMERICS_LEAST_SQUARES_H_
