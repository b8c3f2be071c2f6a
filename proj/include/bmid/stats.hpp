#ifndef BMID_STATS_HPP
#define BMID_STATS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bmid/rng.hpp"

namespace bmid {

// ---------------------------------------------------------------------------
// Reference distributions

inline double normal_cdf(double x, double mean = 0.0, double sd = 1.0) {
  return 0.5 * std::erfc(-(x - mean) / (sd * std::sqrt(2.0)));
}

/// CDF of |N(0, sigma^2)|.
inline double half_normal_cdf(double x, double sigma = 1.0) {
  if (x <= 0.0) return 0.0;
  return std::erf(x / (sigma * std::sqrt(2.0)));
}

inline double exponential_cdf(double x, double rate) {
  if (x <= 0.0) return 0.0;
  return -std::expm1(-rate * x);
}

/// Survival function of the Kolmogorov distribution (limit law of the
/// scaled KS statistic). Theta-series form for small arguments, the
/// alternating series otherwise.
inline double kolmogorov_survival(double x) {
  if (x <= 0.0) return 1.0;
  constexpr double pi = 3.14159265358979323846;
  if (x < 1.18) {
    const double t = std::exp(-pi * pi / (8.0 * x * x));
    const double cdf =
        std::sqrt(2.0 * pi) / x * (t + std::pow(t, 9) + std::pow(t, 25) + std::pow(t, 49));
    return 1.0 - cdf;
  }
  const double u = std::exp(-2.0 * x * x);
  return 2.0 * (u - std::pow(u, 4) + std::pow(u, 9) - std::pow(u, 16));
}

// ---------------------------------------------------------------------------
// Empirical samples

/// Provenance of an i.i.d. scalar sample: enough to regenerate it bit-exactly
/// on the same build.
struct SampleMeta {
  std::string functional;
  std::string fingerprint;  // hash of the generating configuration
  std::uint64_t seed = 0;
  std::uint64_t stream_first = 0;
  std::uint64_t stream_count = 0;
};

struct EmpiricalSample {
  std::vector<double> values;
  SampleMeta meta;
};

/// Right-continuous empirical CDF evaluator.
class Ecdf {
 public:
  explicit Ecdf(std::vector<double> values) : sorted_(std::move(values)) {
    if (sorted_.empty()) throw std::invalid_argument("Ecdf: empty sample");
    std::sort(sorted_.begin(), sorted_.end());
  }

  double operator()(double x) const {
    const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
    return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
  }

  const std::vector<double>& sorted() const { return sorted_; }

 private:
  std::vector<double> sorted_;
};

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov tests

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  bool degenerate = false;  // constant sample(s)
};

/// One-sample KS against a reference CDF; p-value from the asymptotic
/// Kolmogorov distribution with the usual finite-n correction.
inline KsResult ks_one_sample(const std::vector<double>& sample,
                              const std::function<double(double)>& cdf) {
  if (sample.empty()) throw std::invalid_argument("ks_one_sample: empty sample");
  std::vector<double> xs(sample);
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max(d, static_cast<double>(i + 1) / n - f);
    d = std::max(d, f - static_cast<double>(i) / n);
  }
  KsResult out;
  out.statistic = d;
  out.degenerate = xs.front() == xs.back();
  const double sn = std::sqrt(n);
  out.p_value = kolmogorov_survival(d * (sn + 0.12 + 0.11 / sn));
  return out;
}

namespace detail {

/// Two-sample KS statistic from pooled sorted values and 0/1 arm labels.
/// Ties are handled by evaluating the gap only where the pooled value
/// changes (right-continuous ECDF convention).
inline double ks_statistic_from_labels(const std::vector<double>& pooled,
                                       const std::vector<std::uint8_t>& labels,
                                       std::size_t n_a, std::size_t n_b) {
  double d = 0.0;
  std::size_t ca = 0, cb = 0;
  const std::size_t total = pooled.size();
  for (std::size_t i = 0; i < total; ++i) {
    if (labels[i] == 0)
      ++ca;
    else
      ++cb;
    if (i + 1 == total || pooled[i + 1] != pooled[i]) {
      const double gap = std::abs(static_cast<double>(ca) / static_cast<double>(n_a) -
                                  static_cast<double>(cb) / static_cast<double>(n_b));
      d = std::max(d, gap);
    }
  }
  return d;
}

}  // namespace detail

struct KsTwoResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t resamples = 0;
  bool degenerate = false;
};

/// Two-sample KS with a permutation p-value (label reshuffles of the pooled
/// sample). Reproducible for a fixed RngStream.
inline KsTwoResult ks_two_sample(const std::vector<double>& a, const std::vector<double>& b,
                                 RngStream& rng, std::size_t resamples = 999) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  const std::size_t n_a = a.size(), n_b = b.size();

  std::vector<std::pair<double, std::uint8_t>> tagged;
  tagged.reserve(n_a + n_b);
  for (double v : a) tagged.emplace_back(v, 0);
  for (double v : b) tagged.emplace_back(v, 1);
  std::sort(tagged.begin(), tagged.end());

  std::vector<double> pooled(tagged.size());
  std::vector<std::uint8_t> labels(tagged.size());
  for (std::size_t i = 0; i < tagged.size(); ++i) {
    pooled[i] = tagged[i].first;
    labels[i] = tagged[i].second;
  }

  KsTwoResult out;
  out.statistic = detail::ks_statistic_from_labels(pooled, labels, n_a, n_b);
  out.resamples = resamples;
  out.degenerate = pooled.front() == pooled.back();
  if (out.degenerate) {
    out.p_value = 1.0;
    return out;
  }

  std::size_t at_least = 0;
  for (std::size_t r = 0; r < resamples; ++r) {
    for (std::size_t i = labels.size() - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(rng.next_u64() % (i + 1));
      std::swap(labels[i], labels[j]);
    }
    const double d = detail::ks_statistic_from_labels(pooled, labels, n_a, n_b);
    if (d >= out.statistic - 1e-12) ++at_least;
  }
  out.p_value = static_cast<double>(1 + at_least) / static_cast<double>(resamples + 1);
  return out;
}

// ---------------------------------------------------------------------------
// Moments and distances

struct MeanCi {
  double mean = 0.0;
  double halfwidth = 0.0;
};

/// Sample mean with z * standard-error halfwidth.
inline MeanCi mean_with_ci(const std::vector<double>& sample, double z) {
  if (sample.size() < 2) throw std::invalid_argument("mean_with_ci: need at least 2 points");
  const double n = static_cast<double>(sample.size());
  double mean = 0.0;
  for (double v : sample) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : sample) ss += (v - mean) * (v - mean);
  const double var = ss / (n - 1.0);
  return {mean, z * std::sqrt(var / n)};
}

/// Exact empirical 1-Wasserstein distance: integral of |F_a - F_b| over the
/// merged support.
inline double wasserstein1(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("wasserstein1: empty sample");
  std::vector<double> sa(a), sb(b);
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double n_a = static_cast<double>(sa.size());
  const double n_b = static_cast<double>(sb.size());

  std::size_t i = 0, j = 0;
  double w = 0.0;
  double prev = std::min(sa.front(), sb.front());
  while (i < sa.size() || j < sb.size()) {
    const double x = (i < sa.size() && (j == sb.size() || sa[i] <= sb[j])) ? sa[i] : sb[j];
    w += std::abs(static_cast<double>(i) / n_a - static_cast<double>(j) / n_b) * (x - prev);
    while (i < sa.size() && sa[i] == x) ++i;
    while (j < sb.size() && sb[j] == x) ++j;
    prev = x;
  }
  return w;
}

}  // namespace bmid

#endif  // BMID_STATS_HPP
