#ifndef BMID_GRID_HPP
#define BMID_GRID_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace bmid {

/// Uniform time mesh on [0, t_max] with num_steps intervals.
struct TimeGrid {
  double t_max = 1.0;
  std::size_t num_steps = 1;

  TimeGrid() = default;
  TimeGrid(double t_max_, std::size_t num_steps_)
      : t_max(t_max_), num_steps(num_steps_) {
    if (!(t_max > 0.0)) throw std::invalid_argument("TimeGrid: t_max must be > 0");
    if (num_steps == 0) throw std::invalid_argument("TimeGrid: num_steps must be >= 1");
  }

  double dt() const { return t_max / static_cast<double>(num_steps); }
  std::size_t size() const { return num_steps + 1; }
  double time(std::size_t k) const { return static_cast<double>(k) * dt(); }

  bool operator==(const TimeGrid& other) const {
    return t_max == other.t_max && num_steps == other.num_steps;
  }
};

/// Real-valued path sampled on a uniform grid: values[k] = path at time k*dt.
struct GridPath {
  TimeGrid grid;
  std::vector<double> values;

  GridPath() = default;
  explicit GridPath(const TimeGrid& g) : grid(g), values(g.size(), 0.0) {}
  GridPath(const TimeGrid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.size())
      throw std::invalid_argument("GridPath: values length must equal grid size");
  }

  std::size_t size() const { return values.size(); }
  double front() const { return values.front(); }
  double back() const { return values.back(); }
  double operator[](std::size_t k) const { return values[k]; }
  double& operator[](std::size_t k) { return values[k]; }

  bool all_finite() const {
    for (double v : values)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

/// Keep every ratio-th point of a fine path, producing a path on the
/// matching coarse grid. num_steps of the fine grid must be divisible.
inline GridPath subsample(const GridPath& fine, std::size_t coarse_steps) {
  if (coarse_steps == 0 || fine.grid.num_steps % coarse_steps != 0)
    throw std::invalid_argument("subsample: incompatible grids");
  const std::size_t ratio = fine.grid.num_steps / coarse_steps;
  GridPath out(TimeGrid(fine.grid.t_max, coarse_steps));
  for (std::size_t k = 0; k <= coarse_steps; ++k) out.values[k] = fine.values[k * ratio];
  return out;
}

}  // namespace bmid

#endif  // BMID_GRID_HPP
