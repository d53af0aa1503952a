#pragma once

// Philox4x64-10 counter-based generator (Salmon et al., SC'11).
//
// Every random quantity in the library is a pure function of a (key, counter)
// pair, so results never depend on evaluation order or thread count.

#include <array>
#include <cstdint>

namespace qsense {

using Philox4x64Counter = std::array<std::uint64_t, 4>;
using Philox4x64Key = std::array<std::uint64_t, 2>;

/// Ten rounds of Philox4x64 on one block.
Philox4x64Counter philox4x64(Philox4x64Counter ctr, Philox4x64Key key) noexcept;

/// Maps a 64-bit word to a double in the open interval (0, 1).
double u64_to_open_unit(std::uint64_t x) noexcept;

/// Sequential stream keyed by (seed, stream). The counter starts at zero and
/// advances one block per four outputs.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept;

  std::uint64_t next_u64() noexcept;
  double uniform() noexcept;  // (0, 1)
  double normal() noexcept;   // standard normal, Box-Muller
  double laplace() noexcept;  // unit scale, variance 2
  /// Uniform integer in [0, bound); bound > 0.
  std::uint64_t below(std::uint64_t bound) noexcept;

 private:
  Philox4x64Key key_;
  Philox4x64Counter ctr_{0, 0, 0, 0};
  Philox4x64Counter buf_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Stream tags used to keep independent quantities on disjoint key spaces.
namespace stream {
inline constexpr std::uint64_t kSignal = 1;
inline constexpr std::uint64_t kNoise = 2;
inline constexpr std::uint64_t kRip = 4;
inline constexpr std::uint64_t kTrials = 5;
inline constexpr std::uint64_t kOrder = 6;
}  // namespace stream

/// Standard normal entry at (i, r, c) of the ensemble with the given seed and
/// tag. Random access: depends only on its arguments.
double gaussian_entry(std::uint64_t seed, std::uint64_t tag, std::uint64_t i, std::uint64_t r,
                      std::uint64_t c) noexcept;

}  // namespace qsense
