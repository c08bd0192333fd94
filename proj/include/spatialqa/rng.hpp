#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

namespace spatialqa {

// splitmix64 finalizer; used for seed mixing and stream derivation.
uint64_t mix64(uint64_t x);

// Derives an independent child seed from a master seed and a path of stream
// tags (stream kind, scene index, episode index, ...). Output depends only on
// the inputs, never on call order, so parallel workers produce identical
// streams regardless of scheduling.
uint64_t derive_seed(uint64_t master, std::initializer_list<uint64_t> path);

// Stream tags for derive_seed paths.
enum StreamTag : uint64_t {
  kSceneStream = 1,
  kEpisodeStream = 2,
  kShuffleStream = 3,
  kBalanceStream = 4,
  kSplitStream = 5,
  kEvalStream = 6,
};

// Deterministic RNG over a splitmix64 stream. Both the generator and the
// distributions are implemented here with pure integer/float math: standard
// library engines have documented seeding weaknesses for single-word seeds,
// the distribution objects are not bit-reproducible across implementations,
// and exported datasets must be.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(mix64(seed)) {}

  uint64_t next_u64() { return mix64(state_ += 0x9E3779B97F4A7C15ULL); }

  /// Uniform double in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi], inclusive, unbiased.
  int64_t uniform_int(int64_t lo, int64_t hi);

  bool bernoulli(double p) { return uniform() < p; }

  template <class T>
  const T& choice(const std::vector<T>& v) {
    return v[static_cast<size_t>(uniform_int(0, static_cast<int64_t>(v.size()) - 1))];
  }

  /// Fisher–Yates shuffle.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(0, static_cast<int64_t>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t bounded(uint64_t range);  // [0, range), rejection sampling

  uint64_t state_;
};

}  // namespace spatialqa
