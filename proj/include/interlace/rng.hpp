#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace interlace {

// Counter-based generator (Philox-4x32, 10 rounds). The key is the master
// seed, the upper half of the counter is the stream index, so every
// (master_seed, stream_index) pair owns an independent, reproducible stream.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream() = default;
  RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
      : seed_(master_seed), stream_(stream_index) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (buffered_ == 0) refill();
    --buffered_;
    return buffer_[buffered_];
  }

  /// Uniform double in (0, 1); never returns 0 or 1.
  double uniform() {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Lemire's multiply-shift with rejection.
    std::uint64_t x = (*this)();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        x = (*this)();
        m = static_cast<__uint128_t>(x) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  std::uint64_t master_seed() const { return seed_; }
  std::uint64_t stream_index() const { return stream_; }
  std::uint64_t blocks_used() const { return block_; }

 private:
  void refill();

  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
};

inline void RngStream::refill() {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
      static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
  std::uint32_t k0 = static_cast<std::uint32_t>(seed_);
  std::uint32_t k1 = static_cast<std::uint32_t>(seed_ >> 32);

  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ k0, static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ k1, static_cast<std::uint32_t>(p0)};
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  ++block_;
  buffer_[0] = (static_cast<std::uint64_t>(ctr[0]) << 32) | ctr[1];
  buffer_[1] = (static_cast<std::uint64_t>(ctr[2]) << 32) | ctr[3];
  buffered_ = 2;
}

// Poisson variate. Inversion for mean < 30; larger means are split into
// equal pieces below 30 and summed, which keeps the draw exact.
inline std::uint64_t sample_poisson(double mean, RngStream& rng) {
  if (!(mean > 0.0)) return 0;
  auto inversion = [&rng](double m) {
    const double u = rng.uniform();
    double p = std::exp(-m);
    double cdf = p;
    std::uint64_t k = 0;
    while (u > cdf) {
      ++k;
      p *= m / static_cast<double>(k);
      cdf += p;
      if (p < 1e-300 && static_cast<double>(k) > m) break;
    }
    return k;
  };
  if (mean < 30.0) return inversion(mean);
  const auto pieces = static_cast<std::uint64_t>(std::ceil(mean / 25.0));
  const double part = mean / static_cast<double>(pieces);
  std::uint64_t total = 0;
  for (std::uint64_t i = 0; i < pieces; ++i) total += inversion(part);
  return total;
}

}  // namespace interlace
