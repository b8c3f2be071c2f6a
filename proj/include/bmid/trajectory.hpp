#ifndef BMID_TRAJECTORY_HPP
#define BMID_TRAJECTORY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace bmid {

/// Parameters of the lattice jump processes: spacing 2^-level, base walk
/// rate 2^(2*level) per direction, drift-rate scale 2^level.
struct LatticeParams {
  int level = 0;          // lattice exponent n
  double coupling = 0.0;  // K
  double velocity = 0.0;  // v; the velocity process starts at -v
  double horizon = 1.0;   // T

  void validate() const {
    if (level < 0) throw std::invalid_argument("LatticeParams: level must be >= 0");
    if (level > 30) throw std::invalid_argument("LatticeParams: level too large");
    if (!(coupling >= 0.0)) throw std::invalid_argument("LatticeParams: coupling must be >= 0");
    if (!(horizon > 0.0)) throw std::invalid_argument("LatticeParams: horizon must be > 0");
  }

  double spacing() const { return std::ldexp(1.0, -level); }       // 2^-n
  double walk_rate() const { return std::ldexp(1.0, 2 * level); }  // 2^(2n), per direction
  double drift_scale() const { return std::ldexp(1.0, level); }    // 2^n
};

/// Piecewise-constant cadlag path recorded as an event log: value_at(t) is
/// the value after the last event at or before t.
struct JumpTrajectory {
  double initial_value = 0.0;
  std::vector<double> times;   // strictly increasing event times
  std::vector<double> values;  // value immediately after each event

  std::size_t event_count() const { return times.size(); }

  double value_at(double t) const {
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return initial_value;
    return values[static_cast<std::size_t>(it - times.begin()) - 1];
  }

  double terminal() const { return values.empty() ? initial_value : values.back(); }

  void append(double t, double v) {
    if (!times.empty() && !(t > times.back()))
      throw std::invalid_argument("JumpTrajectory: event times must be strictly increasing");
    times.push_back(t);
    values.push_back(v);
  }
};

/// Continuous piecewise-linear path with nodes at the given times.
struct LinearTrajectory {
  std::vector<double> times;   // increasing, first node at 0
  std::vector<double> values;

  double value_at(double t) const {
    if (times.empty()) return 0.0;
    if (t <= times.front()) return values.front();
    if (t >= times.back()) return values.back();
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - times.begin());
    const std::size_t lo = hi - 1;
    const double span = times[hi] - times[lo];
    if (span <= 0.0) return values[hi];
    const double w = (t - times[lo]) / span;
    return values[lo] + w * (values[hi] - values[lo]);
  }

  void append(double t, double v) {
    times.push_back(t);
    values.push_back(v);
  }
};

/// Thrown when a single path exceeds its event budget, which signals a
/// runaway parameter choice rather than a recoverable condition.
class EventCapExceeded : public std::runtime_error {
 public:
  explicit EventCapExceeded(std::uint64_t cap)
      : std::runtime_error("event cap exceeded (" + std::to_string(cap) +
                           " events); parameters likely runaway") {}
};

}  // namespace bmid

#endif  // BMID_TRAJECTORY_HPP
