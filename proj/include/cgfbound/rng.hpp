#pragma once

#include <cstdint>
#include <limits>

namespace cgfbound {

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace detail

// Counter-based generator: output i of stream s under seed k is a pure
// function of (k, s, i). Two streams never share state, so work split
// across threads reproduces the sequential result bit for bit.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t start = 0) noexcept
      : key_(detail::splitmix64(seed ^ detail::splitmix64(stream + 0x632BE59BD9B4E019ULL))),
        counter_(start) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    // Two rounds of mixing decorrelate adjacent counters under nearby keys.
    return detail::splitmix64(detail::splitmix64(key_ + counter_++ * 0xD1B54A32D192ED03ULL) ^ key_);
  }

  /// Uniform double in the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace cgfbound
