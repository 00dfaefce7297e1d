#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace condu {

//! SplitMix64 finalizer.
constexpr std::uint64_t
mix64(std::uint64_t z) noexcept
{
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

//! Derives a child key from a parent key and a list of counters. Used to give
//! every (n, rep, cell) its own independent stream.
constexpr std::uint64_t
derive_key(std::uint64_t parent, std::initializer_list<std::uint64_t> path) noexcept
{
  std::uint64_t k = mix64(parent ^ 0x6a09e667f3bcc909ULL);
  for (std::uint64_t p : path)
    k = mix64(k ^ mix64(p + 0x9e3779b97f4a7c15ULL));
  return k;
}

//! Counter-based generator: draw i of stream `key` is mix64(key + i*gamma).
//! Identical sequences on every platform; distributions are implemented here
//! rather than through <random> for the same reason.
class CounterRng
{
public:
  explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0) noexcept
    : key_(key)
    , counter_(counter)
  {}

  std::uint64_t next_u64() noexcept
  {
    return mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL);
  }

  //! Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept
  {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  //! Uniform on (0, 1).
  double uniform_open() noexcept
  {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  //! Uniform integer in [0, bound) by rejection (no modulo bias).
  std::uint64_t below(std::uint64_t bound) noexcept
  {
    const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % bound;
    std::uint64_t r;
    do {
      r = next_u64();
    } while (r >= limit);
    return r % bound;
  }

  //! Standard normal via Box-Muller (consumes two draws).
  double normal() noexcept
  {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

} // namespace condu
