#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace busdep {

/// Deterministic random stream. The engine (std::mt19937_64) has a
/// standard-specified output sequence; the distributions below are
/// hand-rolled because the standard library ones are free to differ
/// between implementations, which would break byte-identical reruns.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, bound), unbiased via rejection. bound > 0.
  std::uint64_t below(std::uint64_t bound);

  /// Box-Muller, spare value cached.
  double normal(double mean, double stddev);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Stage-keyed fan-out of a single user seed: every consumer of randomness
/// derives its own stream as derive_seed(base, "stage-name").
std::uint64_t derive_seed(std::uint64_t base, std::string_view stage);
std::uint64_t derive_seed(std::uint64_t base, std::string_view stage, std::uint64_t index);

}  // namespace busdep
