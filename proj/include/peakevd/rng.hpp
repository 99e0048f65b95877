#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace peakevd {

// Derive an independent child seed from a master seed and a stream id
// (splitmix64 finalizer). Used to give folds/formulations their own streams
// so serial and parallel runs agree exactly.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

// Deterministic random source. std::mt19937_64 output is fixed by the
// standard; the helpers below avoid std::uniform_real_distribution and
// std::shuffle, whose results are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform in the open interval (0,1); cannot return 0 or 1, so it is safe
  // inside log(u) and log(1-u).
  double uniform01() { return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  std::uint64_t next_u64() { return gen_(); }

  // Integer in [0, n). Modulo bias is ~n/2^64, irrelevant at our sizes.
  std::uint64_t below(std::uint64_t n) { return gen_() % n; }

  // Fisher-Yates; deterministic across platforms, unlike std::shuffle.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace peakevd
