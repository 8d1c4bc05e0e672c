#pragma once

// Deterministic, platform-independent random streams. Streams are derived by
// hashing a master seed with name parts, so a draw depends only on what the
// stream was derived from, never on call interleaving elsewhere.

#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace adlens {

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t mix64(uint64_t h, uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  uint64_t s = h;
  return splitmix64(s);
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  static Rng derive(std::initializer_list<uint64_t> parts) {
    uint64_t h = 0x2545f4914f6cdd1dULL;
    for (uint64_t p : parts) h = mix64(h, p);
    return Rng(h);
  }

  uint64_t next() { return splitmix64(state_); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). Modulo bias is negligible for n << 2^64.
  uint64_t below(uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below(0)");
    return next() % n;
  }

  uint64_t range(uint64_t lo, uint64_t hi_inclusive) {
    return lo + below(hi_inclusive - lo + 1);
  }

  // Index drawn with probability weights[i] / sum(weights).
  size_t pick_weighted(std::span<const double> weights) {
    double total = 0;
    for (double w : weights) total += w;
    if (total <= 0) throw std::invalid_argument("pick_weighted: non-positive total");
    double r = uniform() * total;
    double acc = 0;
    for (size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (r < acc) return i;
    }
    return weights.size() - 1;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t state_;
};

}  // namespace adlens
