#ifndef BMID_PATHS_HPP
#define BMID_PATHS_HPP

#include <algorithm>
#include <cmath>

#include "bmid/grid.hpp"
#include "bmid/rng.hpp"

namespace bmid {

/// Brownian path on a grid: values[0] = 0, independent N(0, dt) increments.
inline GridPath sample_brownian(const TimeGrid& grid, RngStream& rng) {
  GridPath b(grid);
  const double sdt = std::sqrt(grid.dt());
  b.values[0] = 0.0;
  for (std::size_t k = 0; k < grid.num_steps; ++k)
    b.values[k + 1] = b.values[k] + sdt * rng.normal();
  return b;
}

/// Signed running minimum below zero: m[k] = max over j <= k of (-q[j]) v 0.
///
/// The continuous-time definition takes the sup over an open interval; on a
/// grid the value at the left endpoint is included, which matters only when
/// q[0] < 0.
inline GridPath running_signed_min(const GridPath& q) {
  GridPath m(q.grid);
  double cur = std::max(0.0, -q.values[0]);
  m.values[0] = cur;
  for (std::size_t k = 1; k < q.size(); ++k) {
    cur = std::max(cur, -q.values[k]);
    m.values[k] = cur;
  }
  return m;
}

/// Result of the Skorohod reflection map: reflected = f + push >= 0,
/// push nondecreasing and flat off {reflected = 0}.
struct SkorohodDecomposition {
  GridPath reflected;  // x = f + m
  GridPath push;       // m, the signed running minimum of f
};

/// Skorohod map on grid paths. The classical statement assumes f[0] >= 0;
/// inputs with f[0] < 0 are accepted and handled by the same formula
/// (the push then starts at -f[0] instead of 0).
inline SkorohodDecomposition skorohod_map(const GridPath& f) {
  SkorohodDecomposition out;
  out.push = running_signed_min(f);
  out.reflected = GridPath(f.grid);
  for (std::size_t k = 0; k < f.size(); ++k)
    out.reflected.values[k] = f.values[k] + out.push.values[k];
  return out;
}

}  // namespace bmid

#endif  // BMID_PATHS_HPP
