#ifndef BMID_RNG_HPP
#define BMID_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace bmid {

/// Counter-based random stream (Philox-4x32-10).
///
/// A stream is addressed by (seed, stream_id). Streams with the same seed
/// and distinct stream_ids are statistically independent, so one master
/// seed can be partitioned into per-replica streams without coordination.
/// The draw sequence for a given (seed, stream_id) is identical on every
/// run of the same build.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}

  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_(stream_id) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

  std::uint32_t next_u32() {
    if (pos_ == 4) refill();
    return block_[pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  /// Uniform draw in (0, 1]. Never returns 0, so log() is always safe.
  double uniform() {
    const std::uint64_t bits = next_u64() >> 11;  // 53 bits
    return static_cast<double>(bits + 1) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; the paired draw is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * pi() * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  /// Exponential with the given rate; rate 0 yields +infinity.
  double exponential(double rate) {
    if (rate < 0.0) throw std::invalid_argument("exponential: negative rate");
    if (rate == 0.0) return std::numeric_limits<double>::infinity();
    return -std::log(uniform()) / rate;
  }

  bool bernoulli(double p) { return uniform() <= p; }

  /// Geometric on {1, 2, ...} with success probability p.
  std::uint64_t geometric(double p) {
    if (!(p > 0.0) || p > 1.0) throw std::invalid_argument("geometric: p outside (0,1]");
    if (p == 1.0) return 1;
    const double g = std::floor(std::log(uniform()) / std::log1p(-p));
    return 1 + static_cast<std::uint64_t>(g);
  }

  // UniformRandomBitGenerator interface.
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() { return next_u64(); }

 private:
  static constexpr double pi() { return 3.14159265358979323846; }

  static void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo,
                      std::uint32_t& hi) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    lo = static_cast<std::uint32_t>(p);
    hi = static_cast<std::uint32_t>(p >> 32);
  }

  void refill() {
    std::uint32_t c0 = static_cast<std::uint32_t>(counter_);
    std::uint32_t c1 = static_cast<std::uint32_t>(counter_ >> 32);
    std::uint32_t c2 = static_cast<std::uint32_t>(stream_);
    std::uint32_t c3 = static_cast<std::uint32_t>(stream_ >> 32);
    std::uint32_t k0 = static_cast<std::uint32_t>(seed_);
    std::uint32_t k1 = static_cast<std::uint32_t>(seed_ >> 32);
    for (int round = 0; round < 10; ++round) {
      std::uint32_t lo0, hi0, lo1, hi1;
      mulhilo(0xD2511F53u, c0, lo0, hi0);
      mulhilo(0xCD9E8D57u, c2, lo1, hi1);
      c0 = hi1 ^ c1 ^ k0;
      c1 = lo1;
      const std::uint32_t old_c3 = c3;
      c2 = hi0 ^ old_c3 ^ k1;
      c3 = lo0;
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    block_ = {c0, c1, c2, c3};
    ++counter_;
    pos_ = 0;
  }

  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int pos_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace bmid

#endif  // BMID_RNG_HPP
