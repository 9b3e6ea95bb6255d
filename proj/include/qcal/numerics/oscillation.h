#ifndef QCAL_NUMERICS_OSCILLATION_H_
#define QCAL_NUMERICS_OSCILLATION_H_

#include <span>

namespace qcal::numerics {

struct OscillationSeed {
  double frequency = 0.0;  // cycles per unit of x
  double amplitude = 0.0;
  double phase = 0.0;      // y ~ offset + amplitude cos(2 pi f x + phase)
  double offset = 0.0;
};

// Initial guess for sinusoidal fits from the dominant non-zero DFT bin of y - mean(y).
// The frequency is bin / (n dx). A constant trace returns amplitude 0 and the first bin.
// Throws PreconditionError for fewer than 8 points or non-uniform x.
OscillationSeed oscillation_seed(std::span<const double> x, std::span<const double> y);

}  // namespace qcal::numerics

#endif  // QCAL_NUMERICS_OSCILLATION_H_
