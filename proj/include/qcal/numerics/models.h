#ifndef QCAL_NUMERICS_MODELS_H_
#define QCAL_NUMERICS_MODELS_H_

#include <cmath>
#include <numbers>

#include "qcal/numerics/least_squares.h"

namespace qcal::numerics {

// Wraps an angle into (-pi, pi].
template <typename Scalar>
Scalar wrap_angle(Scalar a) {
  constexpr Scalar kPi = std::numbers::pi_v<Scalar>;
  Scalar w = std::remainder(a, 2 * kPi);
  if (w <= -kPi) w += 2 * kPi;
  return w;
}

// B + A / (1 + 4 (x - f0)^2 / w^2); w is the full width at half maximum.
template <typename Scalar = double>
CurveModel<Scalar> lorentzian() {
  return {"lorentzian", {"A", "f0", "w", "B"}, [](Scalar x, const Vector<Scalar>& p) {
            const Scalar u = 2 * (x - p[1]) / p[2];
            return p[3] + p[0] / (1 + u * u);
          }};
}

// B + A exp(-x / T)
template <typename Scalar = double>
CurveModel<Scalar> exp_decay() {
  return {"exp_decay", {"A", "T", "B"},
          [](Scalar x, const Vector<Scalar>& p) { return p[2] + p[0] * std::exp(-x / p[1]); }};
}

// B + A cos(2 pi f x + phi) exp(-x / T)
template <typename Scalar = double>
CurveModel<Scalar> damped_cos() {
  return {"damped_cos", {"A", "f", "phi", "T", "B"}, [](Scalar x, const Vector<Scalar>& p) {
            constexpr Scalar kTwoPi = 2 * std::numbers::pi_v<Scalar>;
            return p[4] + p[0] * std::cos(kTwoPi * p[1] * x + p[2]) * std::exp(-x / p[3]);
          }};
}

// damped_cos with T = infinity.
template <typename Scalar = double>
CurveModel<Scalar> cosine() {
  return {"cosine", {"A", "f", "phi", "B"}, [](Scalar x, const Vector<Scalar>& p) {
            constexpr Scalar kTwoPi = 2 * std::numbers::pi_v<Scalar>;
            return p[3] + p[0] * std::cos(kTwoPi * p[1] * x + p[2]);
          }};
}

// c + a (x - x0)^2
template <typename Scalar = double>
CurveModel<Scalar> parabola() {
  return {"parabola", {"a", "x0", "c"}, [](Scalar x, const Vector<Scalar>& p) {
            const Scalar d = x - p[1];
            return p[2] + p[0] * d * d;
          }};
}

// Canonical branch of an oscillation: positive amplitude and frequency, phase in (-pi, pi].
template <typename Scalar>
void canonicalize_oscillation(Scalar& amplitude, Scalar& frequency, Scalar& phase) {
  if (frequency < 0) {
    frequency = -frequency;
    phase = -phase;
  }
  if (amplitude < 0) {
    amplitude = -amplitude;
    phase += std::numbers::pi_v<Scalar>;
  }
  phase = wrap_angle(phase);
}

}  // namespace qcal::numerics

#endif  // QCAL_NUMERICS_MODELS_H_
