#pragma once

#include <cstddef>
#include <cstdint>

namespace tome {

enum class RngPurpose : std::uint64_t {
  Weights = 1,
  Prompt = 2,
  Noise = 3,
  Partition = 4,
};

/// One deterministic value sequence. value(n) is a pure function of the
/// stream key and n, so streams can be recreated anywhere without sharing state.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) noexcept : key_(key) {}

  std::uint64_t next_u64() noexcept;
  /// Uniform in [0, 1) with 24 bits of resolution.
  float next_float() noexcept;
  /// Uniform in [0, bound); bound must be > 0.
  std::size_t next_index(std::size_t bound) noexcept;
  /// Standard normal (Box-Muller).
  float next_normal() noexcept;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t position() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Counter-based generator: every stream is keyed by (seed, purpose, step, layer, lane).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : seed_(seed) {}

  RngStream stream(RngPurpose purpose, std::uint64_t step = 0, std::uint64_t layer = 0,
                   std::uint64_t lane = 0) const noexcept;

  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace tome
