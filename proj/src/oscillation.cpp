#include "qcal/numerics/oscillation.h"

#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

#include "qcal/error.h"
#include "qcal/numerics/models.h"

namespace qcal::numerics {

OscillationSeed oscillation_seed(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size()) throw PreconditionError("x and y lengths differ");
  if (n < 8) throw PreconditionError("oscillation seed needs at least 8 points");
  const double dx = (x[n - 1] - x[0]) / double(n - 1);
  if (!(dx > 0)) throw PreconditionError("x must be increasing");
  for (std::size_t i = 1; i < n; ++i) {
    if (std::abs((x[i] - x[i - 1]) - dx) > 1e-6 * std::abs(dx))
      throw PreconditionError("x is not uniformly spaced");
  }
  OscillationSeed seed;
  seed.offset = std::accumulate(y.begin(), y.end(), 0.0) / double(n);
  const double span = dx * double(n);

  std::size_t best_bin = 1;
  std::complex<double> best{0.0, 0.0};
  double best_mag = -1.0;
  for (std::size_t k = 1; k <= n / 2; ++k) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t j = 0; j < n; ++j) {
      const double angle = -2.0 * std::numbers::pi * double(k) * double(j) / double(n);
      acc += (y[j] - seed.offset) * std::polar(1.0, angle);
    }
    if (std::abs(acc) > best_mag + 1e-12 * std::max(1.0, best_mag)) {
      best_mag = std::abs(acc);
      best = acc;
      best_bin = k;
    }
  }
  seed.frequency = double(best_bin) / span;
  const double norm = (2 * best_bin == n) ? double(n) : double(n) / 2.0;
  seed.amplitude = best_mag / norm;
  seed.phase = seed.amplitude > 0 ? wrap_angle(std::arg(best) - 2.0 * std::numbers::pi * seed.frequency * x[0]) : 0.0;
  return seed;
}

}  // namespace qcal::numerics
