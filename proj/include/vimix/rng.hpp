#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace vimix {

// splitmix64 finalizer; the mixing core for all seed derivation.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(a) ^ b);
}

constexpr std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix64(mix64(a, b), c);
}

// Counter-mode generator: the i-th output is a pure function of (key, i), so
// streams can be derived, replayed, and sharded without shared state.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64() { return mix64(key_, counter_++); }

  // uniform in [0, 1) with 53 random bits
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // unbiased uniform in [0, bound) by rejection
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t zone = UINT64_MAX - (UINT64_MAX % bound);
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= zone);
    return x % bound;
  }

  // standard normal via inverse CDF (declared in stats.hpp, defined in stats.cpp)
  double next_normal();

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// In-place Fisher-Yates; unbiased given an unbiased next_below.
template <typename T>
void shuffle_in_place(std::span<T> items, CounterRng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(items[i - 1], items[j]);
  }
}

inline std::vector<std::uint32_t> random_permutation(std::size_t n, CounterRng& rng) {
  std::vector<std::uint32_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<std::uint32_t>(i);
  shuffle_in_place(std::span<std::uint32_t>(perm), rng);
  return perm;
}

}  // namespace vimix
