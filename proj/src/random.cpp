#include "qsense/random.hpp"

#include <cmath>
#include <numbers>

namespace qsense {

namespace {

__extension__ using u128 = unsigned __int128;

constexpr std::uint64_t kM0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kM1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kW0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kW1 = 0xBB67AE8584CAA73BULL;

// Fixed second key word for ensemble entries, distinct from any small stream id.
constexpr std::uint64_t kEnsembleKey = 0x51A7E11AB0C0FFEEULL;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                    std::uint64_t& lo) noexcept {
  const u128 p = static_cast<u128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

}  // namespace

Philox4x64Counter philox4x64(Philox4x64Counter c, Philox4x64Key k) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint64_t hi0, lo0, hi1, lo1;
    mulhilo(kM0, c[0], hi0, lo0);
    mulhilo(kM1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kW0;
    k[1] += kW1;
  }
  return c;
}

double u64_to_open_unit(std::uint64_t x) noexcept {
  return (static_cast<double>(x >> 12) + 0.5) * 0x1.0p-52;
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
    : key_{seed, stream} {}

std::uint64_t CounterRng::next_u64() noexcept {
  if (used_ == 4) {
    buf_ = philox4x64(ctr_, key_);
    for (auto& w : ctr_) {
      if (++w != 0) break;
    }
    used_ = 0;
  }
  return buf_[used_++];
}

double CounterRng::uniform() noexcept { return u64_to_open_unit(next_u64()); }

double CounterRng::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double th = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(th);
  has_spare_ = true;
  return r * std::cos(th);
}

double CounterRng::laplace() noexcept {
  const double u = uniform() - 0.5;
  return -std::copysign(std::log1p(-2.0 * std::abs(u)), u);
}

std::uint64_t CounterRng::below(std::uint64_t bound) noexcept {
  // Lemire's multiply-shift with rejection.
  std::uint64_t x = next_u64();
  u128 m = static_cast<u128>(x) * bound;
  std::uint64_t low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      x = next_u64();
      m = static_cast<u128>(x) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double gaussian_entry(std::uint64_t seed, std::uint64_t tag, std::uint64_t i, std::uint64_t r,
                      std::uint64_t c) noexcept {
  const auto out = philox4x64({c, r, i, tag}, {seed, kEnsembleKey});
  const double u1 = u64_to_open_unit(out[0]);
  const double u2 = u64_to_open_unit(out[1]);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace qsense
