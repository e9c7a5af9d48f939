#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace centra {

// SplitMix64 generator. Every seeded decision in this library (corpus
// generation, query sampling, shuffled serializations, projection matrices,
// adapter init, dropout masks, batch sampling, PCA start vectors) goes
// through this one generator, so any run can be replayed from scratch in a
// few lines of any language.
//
// Update rule, applied once per draw:
//   state += 0x9E3779B97F4A7C15
//   z  = state
//   z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
//   z ^= z >> 27;  z *= 0x94D049BB133111EB
//   return z ^ (z >> 31)
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // next_u64() % n, n > 0. The modulo bias is negligible at the desk-scale
  // ranges used here and keeps the recipe a one-liner.
  uint64_t next_below(uint64_t n) { return next_u64() % n; }

  // 53-bit draw, uniform in [0, 1): (next_u64() >> 11) * 2^-53.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Fisher-Yates: for i = n-1 down to 1, j = next_below(i + 1), swap v[i], v[j].
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(next_below(static_cast<uint64_t>(i)));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t state_;
};

}  // namespace centra
