#ifndef BMID_CONTINUUM_HPP
#define BMID_CONTINUUM_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "bmid/grid.hpp"
#include "bmid/paths.hpp"

namespace bmid {

/// Parameters of the continuum constructions: drift coupling K >= 0,
/// initial-velocity parameter v, and time horizon.
struct ModelParams {
  double coupling = 0.0;  // K
  double velocity = 0.0;  // v
  double horizon = 1.0;   // T

  void validate() const {
    if (!(coupling >= 0.0)) throw std::invalid_argument("ModelParams: coupling must be >= 0");
    if (!(horizon > 0.0)) throw std::invalid_argument("ModelParams: horizon must be > 0");
  }
};

/// Output of the coupled Skorohod-type map: a path x = f + displacement
/// whose velocity v + K*m feeds back through the running minimum m of x.
struct WhiteMapOutput {
  GridPath x;             // f + displacement
  GridPath running_min;   // m, signed running minimum of x (m[0] = 0)
  GridPath displacement;  // integral of velocity, left-endpoint rule
  GridPath velocity;      // v + K * m
};

/// Forward-stepped solution of the coupled map.
///
/// Update order within a step is fixed (and tests depend on it): advance the
/// displacement with the old velocity, then x, then the running minimum,
/// then the velocity. With this order the push is exact at contact: whenever
/// m increases, x + m lands on 0 with no rounding.
inline WhiteMapOutput white_map(const GridPath& f, double coupling, double velocity) {
  if (!(coupling >= 0.0)) throw std::invalid_argument("white_map: coupling must be >= 0");
  const TimeGrid& grid = f.grid;
  const double dt = grid.dt();

  WhiteMapOutput out{GridPath(grid), GridPath(grid), GridPath(grid), GridPath(grid)};
  out.displacement.values[0] = 0.0;
  out.x.values[0] = f.values[0];
  out.running_min.values[0] = 0.0;
  out.velocity.values[0] = velocity;

  for (std::size_t k = 0; k < grid.num_steps; ++k) {
    const double disp = out.displacement.values[k] + out.velocity.values[k] * dt;
    const double x = f.values[k + 1] + disp;
    const double m = std::max(out.running_min.values[k], std::max(-x, 0.0));
    out.displacement.values[k + 1] = disp;
    out.x.values[k + 1] = x;
    out.running_min.values[k + 1] = m;
    out.velocity.values[k + 1] = velocity + coupling * m;
  }
  return out;
}

/// The inert-drift system driven by a path b:
///   u = b + integral of velocity,  velocity = -v + K * m,  m = running min of u,
/// and the reflected process x = u + m, which is the BMID path when b is
/// Brownian. Note the sign convention: velocity starts at -v here, while
/// white_map starts at +v.
struct BmidOutput {
  GridPath u;            // driving path plus drift
  GridPath running_min;  // m
  GridPath velocity;     // -v + K * m
  GridPath drift;        // integral of velocity
  GridPath x;            // u + m >= 0
};

inline BmidOutput bmid_from_path(const GridPath& b, double coupling, double velocity) {
  if (!(coupling >= 0.0)) throw std::invalid_argument("bmid_from_path: coupling must be >= 0");
  const TimeGrid& grid = b.grid;
  const double dt = grid.dt();

  BmidOutput out{GridPath(grid), GridPath(grid), GridPath(grid), GridPath(grid), GridPath(grid)};
  out.drift.values[0] = 0.0;
  out.u.values[0] = b.values[0];
  out.running_min.values[0] = 0.0;
  out.velocity.values[0] = -velocity;
  out.x.values[0] = out.u.values[0] + out.running_min.values[0];

  for (std::size_t k = 0; k < grid.num_steps; ++k) {
    const double drift = out.drift.values[k] + out.velocity.values[k] * dt;
    const double u = b.values[k + 1] + drift;
    const double m = std::max(out.running_min.values[k], std::max(-u, 0.0));
    out.drift.values[k + 1] = drift;
    out.u.values[k + 1] = u;
    out.running_min.values[k + 1] = m;
    out.velocity.values[k + 1] = -velocity + coupling * m;
    out.x.values[k + 1] = u + m;
  }
  return out;
}

/// Knight's three-process picture: a Brownian particle x reflecting above an
/// inert particle y whose velocity changes only through push at contact.
/// Built from the inert-drift system by x = b + m, y = -drift, v = -velocity.
/// The gap x - y reproduces the BMID path.
struct KnightSystem {
  GridPath x;           // reflecting particle
  GridPath y;           // inert particle
  GridPath velocity;    // inert particle velocity
  GridPath local_time;  // push process (running minimum of the free coordinate)
};

inline KnightSystem knight_system(const GridPath& b, double coupling, double velocity) {
  const BmidOutput sys = bmid_from_path(b, coupling, velocity);
  const TimeGrid& grid = b.grid;
  KnightSystem out{GridPath(grid), GridPath(grid), GridPath(grid), GridPath(grid)};
  for (std::size_t k = 0; k < grid.size(); ++k) {
    // x is assembled as y + gap with gap = u + m >= 0, so the ordering
    // x >= y survives rounding (monotone rounding of y + nonnegative).
    // Algebraically x = b + m.
    out.y.values[k] = -sys.drift.values[k];
    out.x.values[k] = out.y.values[k] + sys.x.values[k];
    out.velocity.values[k] = -sys.velocity.values[k];
    out.local_time.values[k] = sys.running_min.values[k];
  }
  return out;
}

/// Sup-norm distances between a coarse run and a fine run of the coupled map
/// restricted to the coarse grid, using the same driving randomness (the fine
/// driver subsampled). dist_x measures the pushed path x + m, which at K = 0
/// is the plain reflected path.
struct RefinementReport {
  std::size_t steps_coarse = 0;
  std::size_t steps_fine = 0;
  double dist_x = 0.0;
  double dist_m = 0.0;
  double dist_v = 0.0;
};

inline RefinementReport refine_and_compare(const GridPath& fine_driver, double coupling,
                                           double velocity, std::size_t steps_coarse) {
  const std::size_t steps_fine = fine_driver.grid.num_steps;
  if (steps_coarse == 0 || steps_fine % steps_coarse != 0)
    throw std::invalid_argument("refine_and_compare: fine steps must be a multiple of coarse steps");
  const std::size_t ratio = steps_fine / steps_coarse;

  const GridPath coarse_driver = subsample(fine_driver, steps_coarse);
  const WhiteMapOutput coarse = white_map(coarse_driver, coupling, velocity);
  const WhiteMapOutput fine = white_map(fine_driver, coupling, velocity);

  RefinementReport report;
  report.steps_coarse = steps_coarse;
  report.steps_fine = steps_fine;
  for (std::size_t k = 0; k <= steps_coarse; ++k) {
    const std::size_t j = k * ratio;
    const double pushed_c = coarse.x.values[k] + coarse.running_min.values[k];
    const double pushed_f = fine.x.values[j] + fine.running_min.values[j];
    report.dist_x = std::max(report.dist_x, std::abs(pushed_c - pushed_f));
    report.dist_m = std::max(report.dist_m,
                             std::abs(coarse.running_min.values[k] - fine.running_min.values[j]));
    report.dist_v = std::max(report.dist_v,
                             std::abs(coarse.velocity.values[k] - fine.velocity.values[j]));
  }
  return report;
}

}  // namespace bmid

#endif  // BMID_CONTINUUM_HPP
