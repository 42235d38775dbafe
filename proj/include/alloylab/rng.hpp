#pragma once

#include <cstdint>
#include <random>

namespace alloy {

// splitmix64 finaliser; the fixed mixing function used for seed splitting.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed of the generator owned by trial `trial` (and sub-stream `stream`) of a
// run with master seed `master`.
constexpr std::uint64_t trial_seed(std::uint64_t master, std::uint64_t trial,
                                   std::uint64_t stream = 0) noexcept {
  return mix64(mix64(mix64(master) ^ trial) ^ (stream * 0xd1b54a32d192ed03ULL));
}

// mt19937_64 has a fully specified output sequence; the conversion to doubles
// is done here rather than through <random> distributions, whose algorithms
// are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t master, std::uint64_t trial, std::uint64_t stream = 0)
      : engine_(trial_seed(master, trial, stream)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace alloy
