// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string_view>

namespace trustrl {

// splitmix64 generator. Hand-rolled instead of <random> so that every stream
// is bit-identical across platforms and standard library versions.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53 bits of precision.
  double next_real() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [0, n), unbiased via rejection.
  uint64_t next_below(uint64_t n) {
    if (n == 0) return 0;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

 private:
  uint64_t state_;
};

namespace detail {
inline uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

inline uint64_t seed_fold(uint64_t h, uint64_t v) {
  return detail::mix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

inline uint64_t seed_fold(uint64_t h, std::string_view s) {
  // FNV-1a over the bytes, then mixed into the running hash.
  uint64_t f = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    f ^= c;
    f *= 0x100000001b3ULL;
  }
  return seed_fold(h, f);
}

// Derives an independent stream seed from a root seed plus context parts
// (integers and strings). Same parts, same platform-independent result.
template <typename... Parts>
uint64_t derive_seed(uint64_t root, Parts&&... parts) {
  uint64_t h = detail::mix64(root ^ 0xd1b54a32d192ed03ULL);
  ((h = seed_fold(h, std::forward<Parts>(parts))), ...);
  return h;
}

}  // namespace trustrl
