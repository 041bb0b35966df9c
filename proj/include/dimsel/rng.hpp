#pragma once

#include <cstdint>
#include <string_view>

namespace dimsel {

// SplitMix64: tiny, fast, and identical on every platform, which is what the
// reproducibility contract needs (std:: distributions are not portable).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return (next() >> 11) * 0x1.0p-53; }
  float uniform_float() { return (next() >> 40) * 0x1.0p-24f; }

  // Uniform in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) { return next() % n; }

 private:
  std::uint64_t state_;
};

// Deterministically derives a per-stage seed from one root seed, so that
// e.g. training and subsampling never consume the same stream.
inline std::uint64_t stage_seed(std::uint64_t root, std::string_view tag,
                                std::uint64_t salt = 0) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  h ^= salt + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  SplitMix64 mix(root ^ h);
  return mix.next();
}

}  // namespace dimsel
