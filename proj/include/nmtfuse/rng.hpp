#pragma once

#include <cstdint>
#include <vector>

// Self-contained PRNG (splitmix64 core) so streams are identical across
// platforms and standard-library versions.

namespace nmtfuse {

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed ^ 0x6a09e667f3bcc909ULL) {
    // warm up so small seeds decorrelate
    splitmix64(state_);
    splitmix64(state_);
  }

  uint64_t next_u64() { return splitmix64(state_); }

  // [0,1)
  double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

  // [lo,hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // [0,n)
  uint64_t next_below(uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

  int next_int(int lo, int hi_inclusive) {
    return lo + static_cast<int>(next_below(static_cast<uint64_t>(hi_inclusive - lo + 1)));
  }

  // index into cumulative weights (unnormalized)
  int pick_weighted(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double r = next_double() * total;
    double acc = 0.0;
    for (size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (r < acc) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = next_below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // independent substream, e.g. per epoch or per sentence
  static uint64_t derive(uint64_t seed, uint64_t stream) {
    uint64_t s = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    splitmix64(s);
    return splitmix64(s);
  }

 private:
  uint64_t state_;
};

}  // namespace nmtfuse
