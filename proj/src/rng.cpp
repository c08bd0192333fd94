#include "spatialqa/rng.hpp"

namespace spatialqa {

uint64_t mix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

uint64_t derive_seed(uint64_t master, std::initializer_list<uint64_t> path) {
  uint64_t h = mix64(master);
  for (uint64_t w : path) {
    h = mix64(h ^ mix64(w + 0x2545F4914F6CDD1DULL));
  }
  return h;
}

uint64_t Rng::bounded(uint64_t range) {
  // Classic unbiased modulo with rejection of the tail.
  uint64_t x, r;
  do {
    x = next_u64();
    r = x % range;
  } while (x - r > UINT64_MAX - (range - 1));
  return r;
}

int64_t Rng::uniform_int(int64_t lo, int64_t hi) {
  uint64_t range = static_cast<uint64_t>(hi - lo) + 1;
  if (range == 0) return static_cast<int64_t>(next_u64());  // full 64-bit span
  return lo + static_cast<int64_t>(bounded(range));
}

}  // namespace spatialqa
