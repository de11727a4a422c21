#include "tome/rng.hpp"

#include <cmath>
#include <numbers>

namespace tome {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

RngStream Rng::stream(RngPurpose purpose, std::uint64_t step, std::uint64_t layer,
                      std::uint64_t lane) const noexcept {
  std::uint64_t k = splitmix64(seed_);
  k = splitmix64(k ^ static_cast<std::uint64_t>(purpose));
  k = splitmix64(k ^ step);
  k = splitmix64(k ^ layer);
  k = splitmix64(k ^ lane);
  return RngStream(k);
}

std::uint64_t RngStream::next_u64() noexcept {
  return splitmix64(key_ + 0xd1b54a32d192ed03ull * ++counter_);
}

float RngStream::next_float() noexcept {
  return static_cast<float>(next_u64() >> 40) * 0x1.0p-24f;
}

std::size_t RngStream::next_index(std::size_t bound) noexcept {
  // Lemire's multiply-shift with rejection for an unbiased draw.
  const auto b = static_cast<std::uint64_t>(bound);
  std::uint64_t x = next_u64();
  __uint128_t m = static_cast<__uint128_t>(x) * b;
  auto low = static_cast<std::uint64_t>(m);
  if (low < b) {
    const std::uint64_t threshold = -b % b;
    while (low < threshold) {
      x = next_u64();
      m = static_cast<__uint128_t>(x) * b;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::size_t>(m >> 64);
}

float RngStream::next_normal() noexcept {
  // u1 in (0, 1] keeps log finite.
  const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  return static_cast<float>(std::sqrt(-2.0 * std::log(u1)) *
                            std::cos(2.0 * std::numbers::pi * u2));
}

}  // namespace tome
