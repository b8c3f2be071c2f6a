#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "bmid/intensity.hpp"
#include "bmid/rng.hpp"
#include "bmid/stats.hpp"

using namespace bmid;

namespace {

// Independent oracle for the clock inversion: adaptive Simpson quadrature of
// the intensity plus bisection on the integrated intensity. Deliberately
// ignorant of the closed form and of the kink location.
double intensity_at(double lambda0, double slope, double base, double s) {
  return base + std::abs(lambda0 + slope * s);
}

double simpson(double lambda0, double slope, double base, double a, double b) {
  const double mid = 0.5 * (a + b);
  return (b - a) / 6.0 *
         (intensity_at(lambda0, slope, base, a) + 4.0 * intensity_at(lambda0, slope, base, mid) +
          intensity_at(lambda0, slope, base, b));
}

double adaptive_quad(double lambda0, double slope, double base, double a, double b, double whole,
                     double tol, int depth) {
  const double mid = 0.5 * (a + b);
  const double left = simpson(lambda0, slope, base, a, mid);
  const double right = simpson(lambda0, slope, base, mid, b);
  if (depth > 60 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_quad(lambda0, slope, base, a, mid, left, tol / 2.0, depth + 1) +
         adaptive_quad(lambda0, slope, base, mid, b, right, tol / 2.0, depth + 1);
}

double integrated(double lambda0, double slope, double base, double t) {
  if (t == 0.0) return 0.0;
  return adaptive_quad(lambda0, slope, base, 0.0, t, simpson(lambda0, slope, base, 0.0, t), 1e-13,
                       0);
}

double oracle_invert(double lambda0, double slope, double base, double target) {
  double hi = 1.0;
  while (integrated(lambda0, slope, base, hi) < target) hi *= 2.0;
  double lo = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (integrated(lambda0, slope, base, mid) < target)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-13 * (1.0 + hi)) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("clock inversion closed forms") {
  // Constant intensity.
  REQUIRE(invert_integrated_intensity(0.0, 0.0, 2.0, 3.0) == Catch::Approx(1.5).margin(1e-14));
  // Pure ramp: c * t^2 / 2 = target.
  REQUIRE(invert_integrated_intensity(0.0, 3.0, 0.0, 6.0) ==
          Catch::Approx(2.0).margin(1e-12));
  // Sign change of the affine part: split at s* = 1 and finish on the
  // quadratic branch, landing at sqrt(2).
  const double t = invert_integrated_intensity(-1.0, 1.0, 1.0, 2.0);
  REQUIRE(t == Catch::Approx(std::sqrt(2.0)).margin(1e-12));
  REQUIRE(t == Catch::Approx(oracle_invert(-1.0, 1.0, 1.0, 2.0)).margin(1e-10));
}

TEST_CASE("clock inversion degenerate and error cases") {
  REQUIRE(std::isinf(invert_integrated_intensity(0.0, 0.0, 0.0, 1.0)));
  REQUIRE_THROWS_AS(invert_integrated_intensity(1.0, 0.0, -1.0, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(invert_integrated_intensity(1.0, 0.0, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("clock inversion agrees with the quadrature oracle on random cases") {
  RngStream rng(314, 0);
  for (int rep = 0; rep < 1000; ++rep) {
    const double lambda0 = (rng.uniform() - 0.5) * 20.0;
    const double slope = (rng.uniform() - 0.5) * 10.0;
    const double base = rng.uniform() * 20.0;
    const double target = rng.uniform() * 50.0 + 1e-6;
    if (base == 0.0 && slope == 0.0 && lambda0 == 0.0) continue;
    const double closed = invert_integrated_intensity(lambda0, slope, base, target);
    const double quad = oracle_invert(lambda0, slope, base, target);
    REQUIRE(closed == Catch::Approx(quad).margin(1e-9));
  }
}

TEST_CASE("first-passage time is monotone in the intensity (dominance coupling)") {
  // Shared exponential target: the channel with the pointwise larger
  // intensity always fires first.
  RngStream rng(315, 0);
  for (int rep = 0; rep < 2000; ++rep) {
    const double lambda0 = (rng.uniform() - 0.5) * 8.0;
    const double slope = (rng.uniform() - 0.5) * 6.0;
    const double base = rng.uniform() * 5.0;
    const double extra = rng.uniform() * 4.0;
    const double target = -std::log(rng.uniform());
    const double slow = invert_integrated_intensity(lambda0, slope, base, target);
    const double fast = invert_integrated_intensity(lambda0, slope, base + extra, target);
    REQUIRE(fast <= slow + 1e-12);
  }
}

TEST_CASE("sample_poisson_events basics") {
  RngStream rng(99, 0);
  REQUIRE(sample_poisson_events(0.0, 1.0, rng).empty());
  REQUIRE_THROWS_AS(sample_poisson_events(-1.0, 1.0, rng), std::invalid_argument);

  // Walk-rate example at level 2: rate 2^4 = 16.
  const double rate = 16.0;
  const int reps = 10000;
  double total = 0.0;
  for (int r = 0; r < reps; ++r) {
    RngStream stream(7, static_cast<std::uint64_t>(r));
    const auto events = sample_poisson_events(rate, 1.0, stream);
    total += static_cast<double>(events.size());
    for (std::size_t i = 0; i < events.size(); ++i) {
      REQUIRE(events[i] > 0.0);
      REQUIRE(events[i] < 1.0);
      if (i > 0) REQUIRE(events[i] > events[i - 1]);
    }
  }
  const double mean = total / reps;
  REQUIRE(std::abs(mean - rate) < 3.0 * std::sqrt(rate / reps));
}

TEST_CASE("merged independent channels match a single channel at the summed rate") {
  // First-event times: min(Exp(a), Exp(b)) versus Exp(a + b).
  const double ra = 0.7, rb = 1.6;
  const int n = 100000;
  std::vector<double> merged(n), single(n);
  RngStream rng(2718, 0);
  for (int i = 0; i < n; ++i) {
    merged[static_cast<std::size_t>(i)] = std::min(rng.exponential(ra), rng.exponential(rb));
    single[static_cast<std::size_t>(i)] = rng.exponential(ra + rb);
  }
  RngStream perm(2718, 1);
  const auto ks = ks_two_sample(merged, single, perm, 199);
  REQUIRE(ks.p_value > 0.01);
}

TEST_CASE("geometric sum of exponentials is exponential") {
  RngStream rng(123, 0);
  // p = 1 collapses to a single draw's distribution: check the mean.
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += geometric_exponential_sum(1.0, 3.0, rng);
  REQUIRE(std::abs(sum / n - 1.0 / 3.0) < 4.0 * (1.0 / 3.0) / std::sqrt(static_cast<double>(n)));

  // Mean of the rate-p*lambda identity at (1/4, 8): 1/(p*lambda) = 0.5.
  double sum2 = 0.0;
  for (int i = 0; i < n; ++i) sum2 += geometric_exponential_sum(0.25, 8.0, rng);
  REQUIRE(std::abs(sum2 / n - 0.5) < 0.01);

  // Full distributional check at (1/2, 2) -> Exp(1).
  std::vector<double> draws(n);
  for (auto& d : draws) d = geometric_exponential_sum(0.5, 2.0, rng);
  const auto ks = ks_one_sample(draws, [](double x) { return exponential_cdf(x, 1.0); });
  REQUIRE(ks.statistic < 0.006);

  REQUIRE_THROWS_AS(geometric_exponential_sum(0.0, 1.0, rng), std::invalid_argument);
  REQUIRE_THROWS_AS(geometric_exponential_sum(0.5, 0.0, rng), std::invalid_argument);
}
