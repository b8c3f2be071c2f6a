#ifndef BMID_CHECKS_HPP
#define BMID_CHECKS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "bmid/ensemble.hpp"
#include "bmid/intensity.hpp"
#include "bmid/jump_engine.hpp"
#include "bmid/rng.hpp"
#include "bmid/stats.hpp"

namespace bmid {

// Desk-scale lemma checks shared by the lemma-suite experiment and the
// acceptance suite.

// ---------------------------------------------------------------------------

struct GeometricSumCheck {
  double p = 0.0;
  double lambda = 0.0;
  std::size_t draws = 0;
  double ks = 0.0;  // one-sample KS against Exp(p * lambda)
};

inline GeometricSumCheck check_geometric_sum(double p, double lambda, std::size_t draws,
                                             RngStream& rng) {
  std::vector<double> xs(draws);
  for (auto& x : xs) x = geometric_exponential_sum(p, lambda, rng);
  const double rate = p * lambda;
  const auto ks = ks_one_sample(xs, [rate](double x) { return exponential_cdf(x, rate); });
  return {p, lambda, draws, ks.statistic};
}

// ---------------------------------------------------------------------------

struct FunctionalLlnCheck {
  int level = 0;
  double alpha = 0.0;
  std::size_t runs = 0;
  double deviation_bound = 0.0;
  double fraction_within = 0.0;  // runs whose sup deviation stayed below the bound
  double max_sup = 0.0;
};

/// Scaled Poisson counts against the line: sup_t |2^-n N(t) - alpha t| over
/// [0, horizon], where N has intensity alpha * 2^n.
inline FunctionalLlnCheck check_functional_lln(int level, double alpha, double horizon,
                                               std::size_t runs, double deviation_bound,
                                               std::uint64_t seed, std::uint64_t stream_base,
                                               unsigned threads) {
  const double scale = std::ldexp(1.0, level);
  const double inv_scale = std::ldexp(1.0, -level);

  EnsembleSpec spec;
  spec.columns = {"sup"};
  spec.replicas = runs;
  spec.seed = seed;
  spec.stream_base = stream_base;
  spec.threads = threads;
  const auto data = run_ensemble(
      [&](std::uint64_t, RngStream& rng, std::span<double> out) {
        const auto events = sample_poisson_events(alpha * scale, horizon, rng);
        double sup = 0.0;
        for (std::size_t k = 0; k < events.size(); ++k) {
          const double t = events[k];
          sup = std::max(sup, std::abs(inv_scale * static_cast<double>(k) - alpha * t));
          sup = std::max(sup, std::abs(inv_scale * static_cast<double>(k + 1) - alpha * t));
        }
        sup = std::max(sup, std::abs(inv_scale * static_cast<double>(events.size()) -
                                     alpha * horizon));
        out[0] = sup;
      },
      spec);

  FunctionalLlnCheck out;
  out.level = level;
  out.alpha = alpha;
  out.runs = runs;
  out.deviation_bound = deviation_bound;
  std::size_t within = 0;
  for (const auto& row : data.rows) {
    out.max_sup = std::max(out.max_sup, row[0]);
    if (row[0] < deviation_bound) ++within;
  }
  out.fraction_within = static_cast<double>(within) / static_cast<double>(runs);
  return out;
}

// ---------------------------------------------------------------------------

namespace detail {

inline double check_intensity_at(double lambda0, double slope, double base, double s) {
  return base + std::abs(lambda0 + slope * s);
}

inline double check_simpson(double lambda0, double slope, double base, double a, double b) {
  const double mid = 0.5 * (a + b);
  return (b - a) / 6.0 *
         (check_intensity_at(lambda0, slope, base, a) +
          4.0 * check_intensity_at(lambda0, slope, base, mid) +
          check_intensity_at(lambda0, slope, base, b));
}

inline double check_adaptive_quad(double lambda0, double slope, double base, double a, double b,
                                  double whole, double tol, int depth) {
  const double mid = 0.5 * (a + b);
  const double left = check_simpson(lambda0, slope, base, a, mid);
  const double right = check_simpson(lambda0, slope, base, mid, b);
  if (depth > 60 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return check_adaptive_quad(lambda0, slope, base, a, mid, left, tol / 2.0, depth + 1) +
         check_adaptive_quad(lambda0, slope, base, mid, b, right, tol / 2.0, depth + 1);
}

/// Quadrature + bisection root-find for the integrated intensity; a
/// reference path that shares nothing with the closed-form inversion.
inline double quadrature_invert(double lambda0, double slope, double base, double target) {
  const auto integral = [&](double t) {
    if (t == 0.0) return 0.0;
    return check_adaptive_quad(lambda0, slope, base, 0.0, t,
                               check_simpson(lambda0, slope, base, 0.0, t), 1e-13, 0);
  };
  double hi = 1.0;
  while (integral(hi) < target) hi *= 2.0;
  double lo = 0.0;
  for (int i = 0; i < 200 && hi - lo > 1e-13 * (1.0 + hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (integral(mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

struct ClockInversionCheck {
  std::size_t cases = 0;
  double max_abs_error = 0.0;
};

inline ClockInversionCheck check_clock_inversion(std::size_t cases, RngStream& rng) {
  ClockInversionCheck out;
  out.cases = cases;
  for (std::size_t i = 0; i < cases; ++i) {
    const double lambda0 = (rng.uniform() - 0.5) * 20.0;
    const double slope = (rng.uniform() - 0.5) * 10.0;
    const double base = rng.uniform() * 20.0;
    const double target = rng.uniform() * 50.0 + 1e-6;
    const double closed = invert_integrated_intensity(lambda0, slope, base, target);
    const double reference = detail::quadrature_invert(lambda0, slope, base, target);
    out.max_abs_error = std::max(out.max_abs_error, std::abs(closed - reference));
  }
  return out;
}

// ---------------------------------------------------------------------------

struct RunningMinMomentCheck {
  int level = 0;
  std::size_t replicas = 0;
  double mean = 0.0;
  double halfwidth3 = 0.0;  // three standard errors
  double bound = 0.0;       // 2 sqrt(2T + T|v| sqrt(2T) + 2|v|T)
};

inline double running_min_moment_bound(double horizon, double velocity) {
  const double t = horizon;
  const double av = std::abs(velocity);
  return 2.0 * std::sqrt(2.0 * t + t * av * std::sqrt(2.0 * t) + 2.0 * av * t);
}

inline RunningMinMomentCheck check_running_min_moment(const LatticeParams& params,
                                                      std::size_t replicas, std::uint64_t seed,
                                                      std::uint64_t stream_base,
                                                      unsigned threads) {
  EnsembleSpec spec;
  spec.columns = {"running_min"};
  spec.replicas = replicas;
  spec.seed = seed;
  spec.stream_base = stream_base;
  spec.threads = threads;
  const auto data = run_ensemble(
      [&](std::uint64_t, RngStream& rng, std::span<double> out) {
        out[0] = simulate_szu(params, rng).final_state.running_min;
      },
      spec);
  const auto ci = mean_with_ci(data.column("running_min"), 3.0);
  RunningMinMomentCheck out;
  out.level = params.level;
  out.replicas = replicas;
  out.mean = ci.mean;
  out.halfwidth3 = ci.halfwidth;
  out.bound = running_min_moment_bound(params.horizon, params.velocity);
  return out;
}

}  // namespace bmid

#endif  // BMID_CHECKS_HPP
