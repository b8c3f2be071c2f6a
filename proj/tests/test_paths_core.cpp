#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "bmid/paths.hpp"
#include "bmid/stats.hpp"

using namespace bmid;

namespace {

GridPath path_of(std::vector<double> values, double t_max = 1.0) {
  TimeGrid grid(t_max, values.size() - 1);
  return GridPath(grid, std::move(values));
}

GridPath random_walk_path(RngStream& rng, std::size_t steps) {
  GridPath p(TimeGrid(1.0, steps));
  p.values[0] = rng.normal();
  for (std::size_t k = 1; k <= steps; ++k)
    p.values[k] = p.values[k - 1] + 0.1 * rng.normal();
  return p;
}

}  // namespace

TEST_CASE("TimeGrid validation") {
  REQUIRE_THROWS_AS(TimeGrid(1.0, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(TimeGrid(0.0, 10), std::invalid_argument);
  TimeGrid g(2.0, 4);
  REQUIRE(g.dt() == 0.5);
  REQUIRE(g.size() == 5);
  REQUIRE(g.time(3) == Catch::Approx(1.5));
}

TEST_CASE("sample_brownian starts at zero and is deterministic per stream") {
  TimeGrid grid(1.0, 64);
  RngStream a(5, 3), b(5, 3);
  const GridPath pa = sample_brownian(grid, a);
  const GridPath pb = sample_brownian(grid, b);
  REQUIRE(pa.values[0] == 0.0);
  REQUIRE(pa.values == pb.values);
  REQUIRE(pa.all_finite());
}

TEST_CASE("single-step Brownian increment has variance dt") {
  TimeGrid grid(0.25, 1);
  const int n = 100000;
  double sumsq = 0.0;
  for (int r = 0; r < n; ++r) {
    RngStream rng(99, static_cast<std::uint64_t>(r));
    const GridPath p = sample_brownian(grid, rng);
    sumsq += p.values[1] * p.values[1];
  }
  REQUIRE(std::abs(sumsq / n - 0.25) < 0.25 * 0.02);
}

TEST_CASE("terminal variance of Brownian paths is T") {
  TimeGrid grid(1.0, 8);
  const int n = 100000;
  double sum = 0.0, sumsq = 0.0;
  for (int r = 0; r < n; ++r) {
    RngStream rng(1234, static_cast<std::uint64_t>(r));
    const double end = sample_brownian(grid, rng).back();
    sum += end;
    sumsq += end * end;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  REQUIRE(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("running_signed_min on hand-checked inputs") {
  const GridPath q = path_of({0.0, 1.0, -1.0, 0.5});
  const GridPath m = running_signed_min(q);
  REQUIRE(m.values == std::vector<double>{0.0, 0.0, 1.0, 1.0});

  const GridPath nonneg = path_of({0.3, 0.0, 2.0, 1.0});
  for (double v : running_signed_min(nonneg).values) REQUIRE(v == 0.0);

  // Pure down-drift: the minimum tracks the current value.
  TimeGrid grid(1.0, 10);
  GridPath drift(grid);
  for (std::size_t k = 0; k <= 10; ++k) drift.values[k] = -grid.time(k);
  const GridPath md = running_signed_min(drift);
  for (std::size_t k = 0; k <= 10; ++k) REQUIRE(md.values[k] == grid.time(k));
}

TEST_CASE("skorohod_map on hand-checked inputs") {
  const auto dec = skorohod_map(path_of({0.0, 1.0, -1.0, 0.5}));
  REQUIRE(dec.push.values == std::vector<double>{0.0, 0.0, 1.0, 1.0});
  REQUIRE(dec.reflected.values == std::vector<double>{0.0, 1.0, 0.0, 1.5});

  const GridPath f = path_of({0.0, 0.5, 0.2, 1.0});
  const auto dec2 = skorohod_map(f);
  REQUIRE(dec2.reflected.values == f.values);
  for (double v : dec2.push.values) REQUIRE(v == 0.0);
}

TEST_CASE("skorohod_map properties on random paths") {
  RngStream rng(17, 0);
  for (int rep = 0; rep < 200; ++rep) {
    const GridPath f = random_walk_path(rng, 128);
    const auto dec = skorohod_map(f);

    // Reflection: x = f + m >= 0.
    for (std::size_t k = 0; k < f.size(); ++k) {
      REQUIRE(dec.reflected.values[k] >= 0.0);
      REQUIRE(dec.reflected.values[k] == f.values[k] + dec.push.values[k]);
    }
    // Monotone, nonnegative push.
    for (std::size_t k = 1; k < f.size(); ++k)
      REQUIRE(dec.push.values[k] >= dec.push.values[k - 1]);
    REQUIRE(dec.push.values[0] >= 0.0);
    // Flatness: the push moves only when the reflected path sits at zero.
    for (std::size_t k = 1; k < f.size(); ++k)
      if (dec.push.values[k] > dec.push.values[k - 1])
        REQUIRE(dec.reflected.values[k] == 0.0);
    // Idempotence: reflecting an already nonnegative path changes nothing.
    const auto again = skorohod_map(dec.reflected);
    REQUIRE(again.reflected.values == dec.reflected.values);
    for (double v : again.push.values) REQUIRE(v == 0.0);
  }
}

TEST_CASE("reflected Brownian endpoint matches the half-normal law") {
  // Desk-scale version of the reflection identity; the full-scale run lives
  // in the acceptance suite. Threshold = grid bias at dt = 2^-12 plus the
  // KS null quantile at N = 2*10^4.
  const TimeGrid grid(1.0, 4096);
  const int n = 20000;
  std::vector<double> xs(n);
  for (int r = 0; r < n; ++r) {
    RngStream rng(4242, static_cast<std::uint64_t>(r));
    const GridPath b = sample_brownian(grid, rng);
    const auto dec = skorohod_map(b);
    xs[static_cast<std::size_t>(r)] = dec.reflected.back();
  }
  const auto ks = ks_one_sample(xs, [](double x) { return half_normal_cdf(x, 1.0); });
  REQUIRE(ks.statistic < 0.02);
}
