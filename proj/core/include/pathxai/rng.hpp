#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace pathxai {

/// xoshiro256** generator. Seeded through splitmix64 so that any 64-bit seed
/// (including 0) yields a valid state. Every draw helper below is defined in
/// terms of raw 64-bit outputs, so sequences are identical across standard
/// library implementations.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, bound). Uses rejection to stay unbiased.
  std::uint64_t below(std::uint64_t bound);
  /// Standard normal via Box-Muller (one value per call, no caching).
  double normal();

 private:
  std::array<std::uint64_t, 4> s_{};
};

std::uint64_t splitmix64(std::uint64_t& state);

/// Seed for a named sub-stream ("data", "init", "shuffle", ...) of a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream);

/// The sub-streams used by the end-to-end workflow.
struct SeedStreams {
  std::uint64_t data = 0;     // synthetic image generation
  std::uint64_t split = 0;    // train/test partition
  std::uint64_t init = 0;     // weight initialization
  std::uint64_t shuffle = 0;  // minibatch order

  static SeedStreams from(std::uint64_t master) {
    return {derive_seed(master, "data"), derive_seed(master, "split"), derive_seed(master, "init"),
            derive_seed(master, "shuffle")};
  }
};

/// In-place Fisher-Yates shuffle driven by `rng`.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace pathxai
