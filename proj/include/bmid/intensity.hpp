#ifndef BMID_INTENSITY_HPP
#define BMID_INTENSITY_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "bmid/rng.hpp"

namespace bmid {

/// First passage of an integrated intensity over an exponential draw:
/// the unique t with
///     integral_0^t (base + |lambda0 + slope * s|) ds = target.
///
/// This is the clock inversion for a channel whose rate is an absolute
/// affine function of elapsed time. The kink where lambda0 + slope*s
/// changes sign is handled by splitting the integral; both branches use
/// cancellation-free quadratic roots. Returns +infinity only in the fully
/// degenerate case base = slope = lambda0 = 0.
inline double invert_integrated_intensity(double lambda0, double slope, double base,
                                          double target) {
  if (!(base >= 0.0)) throw std::invalid_argument("invert_integrated_intensity: base must be >= 0");
  if (!(target > 0.0)) throw std::invalid_argument("invert_integrated_intensity: target must be > 0");

  if (slope == 0.0) {
    const double rate = base + std::abs(lambda0);
    if (rate == 0.0) return std::numeric_limits<double>::infinity();
    return target / rate;
  }

  const double a = std::abs(slope);
  const double kink = -lambda0 / slope;  // where the affine part crosses zero

  if (kink <= 0.0) {
    // |lambda0 + slope*s| = |lambda0| + a*s on s >= 0.
    const double b = base + std::abs(lambda0);
    return 2.0 * target / (b + std::sqrt(b * b + 2.0 * a * target));
  }

  // Intensity decreases to base at the kink, then increases.
  const double before_kink = kink * (base + 0.5 * std::abs(lambda0));
  if (target <= before_kink) {
    const double b = base + std::abs(lambda0);
    const double disc = std::max(b * b - 2.0 * a * target, 0.0);
    return 2.0 * target / (b + std::sqrt(disc));
  }
  const double remaining = target - before_kink;
  const double tail = 2.0 * remaining / (base + std::sqrt(base * base + 2.0 * a * remaining));
  return kink + tail;
}

/// Event times of a constant-rate Poisson process on [0, t_max].
inline std::vector<double> sample_poisson_events(double rate, double t_max, RngStream& rng) {
  if (!(rate >= 0.0)) throw std::invalid_argument("sample_poisson_events: rate must be >= 0");
  if (!(t_max > 0.0)) throw std::invalid_argument("sample_poisson_events: t_max must be > 0");
  std::vector<double> events;
  if (rate == 0.0) return events;
  double t = rng.exponential(rate);
  while (t < t_max) {
    events.push_back(t);
    t += rng.exponential(rate);
  }
  return events;
}

/// Sum of a Geometric(p) number of independent Exp(lambda) draws.
/// Such a sum is itself exponential with rate p * lambda; provided as a
/// test utility for that distributional identity.
inline double geometric_exponential_sum(double p, double lambda, RngStream& rng) {
  if (!(p > 0.0) || p > 1.0)
    throw std::invalid_argument("geometric_exponential_sum: p must be in (0, 1]");
  if (!(lambda > 0.0))
    throw std::invalid_argument("geometric_exponential_sum: lambda must be > 0");
  const std::uint64_t count = rng.geometric(p);
  double sum = 0.0;
  for (std::uint64_t i = 0; i < count; ++i) sum += rng.exponential(lambda);
  return sum;
}

}  // namespace bmid

#endif  // BMID_INTENSITY_HPP
