#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tome/rng.hpp"

namespace tome {

/// batch x height x width token layout; token index = y * width + x.
struct GridShape {
  std::size_t batch = 1;
  std::size_t height = 1;
  std::size_t width = 1;

  std::size_t tokens() const noexcept { return height * width; }
  bool operator==(const GridShape&) const = default;
};

namespace scheme {

/// dst = odd flat indices.
struct Alternating {
  bool operator==(const Alternating&) const = default;
};

/// dst = tokens with y % sy == 0 and x % sx == 0.
struct Strided {
  std::size_t sy = 2;
  std::size_t sx = 2;
  bool operator==(const Strided&) const = default;
};

/// dst = round(dst_fraction * N) tokens drawn without replacement.
struct Random {
  double dst_fraction = 0.25;
  bool operator==(const Random&) const = default;
};

/// One dst drawn uniformly inside every ty x tx tile; edge tiles may be smaller.
struct RandTile {
  std::size_t ty = 2;
  std::size_t tx = 2;
  bool operator==(const RandTile&) const = default;
};

}  // namespace scheme

using PartitionVariant =
    std::variant<scheme::Alternating, scheme::Strided, scheme::Random, scheme::RandTile>;

struct PartitionScheme {
  PartitionVariant variant = scheme::RandTile{2, 2};
  /// Draw randomness once per (step, layer) and reuse it for every batch element.
  bool batch_fix = true;

  bool is_random() const noexcept;
  bool operator==(const PartitionScheme&) const = default;
};

/// Parses the CLI spelling: alt | strided:SYxSX | rand:F | rand2x2 | randtile:TYxTX.
/// Bare `rand` means rand:0.25.
/// batch_fix is left at its default.
PartitionScheme parse_partition(std::string_view text);
/// Inverse of parse_partition (rand2x2 is printed as randtile:2x2).
std::string to_string(const PartitionVariant& v);

/// Checks the scheme's own parameters; throws PartitionError.
void validate(const PartitionScheme& s);

class PartitionPlan {
 public:
  PartitionPlan(GridShape shape, std::vector<std::vector<std::uint8_t>> dst_mask);

  const GridShape& shape() const noexcept { return shape_; }
  std::size_t tokens() const noexcept { return shape_.tokens(); }
  std::size_t dst_count() const noexcept { return dst_count_; }
  std::size_t src_count() const noexcept { return tokens() - dst_count_; }

  /// 1 = dst, 0 = src, one entry per token.
  const std::vector<std::uint8_t>& mask(std::size_t batch_index) const;
  std::vector<std::size_t> dst_indices(std::size_t batch_index) const;
  std::vector<std::size_t> src_indices(std::size_t batch_index) const;

  bool identical_across_batch() const noexcept;

 private:
  GridShape shape_;
  std::vector<std::vector<std::uint8_t>> mask_;
  std::size_t dst_count_ = 0;
};

/// Builds the src/dst split for (step, layer). Throws PartitionError when the
/// scheme is invalid or leaves src or dst empty.
PartitionPlan make_partition(const GridShape& shape, const PartitionScheme& scheme, const Rng& rng,
                             std::size_t step, std::size_t layer);

double dst_fraction(const PartitionPlan& plan) noexcept;

}  // namespace tome
