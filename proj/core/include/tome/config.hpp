#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "tome/partition.hpp"

namespace tome {

/// Token-merging policy. Defaults follow the best-quality settings: merge
/// only ahead of self-attention, only in top-scale blocks, at a constant
/// 50% ratio, with random 2x2 tiles drawn once per batch.
struct ToMeConfig {
  double ratio = 0.5;
  /// When both are set they override `ratio` with a linear schedule over steps.
  std::optional<double> ratio_start;
  std::optional<double> ratio_end;
  PartitionScheme partition{};
  bool apply_self = true;
  bool apply_cross = false;
  bool apply_mlp = false;
  /// Minimum tokens for a block to merge; unset means "top scale only".
  std::optional<std::size_t> min_tokens;
  std::uint64_t seed = 0;
  /// Zero out selected src tokens instead of merging them (comparison mode).
  bool prune = false;
  /// Reuse the first batch element's edges for every element.
  bool share_edges = false;

  bool any_component() const noexcept { return apply_self || apply_cross || apply_mlp; }
};

/// Per-block view of ToMeConfig with min_tokens resolved.
struct BlockConfig {
  bool apply_self = true;
  bool apply_cross = false;
  bool apply_mlp = false;
  std::size_t min_tokens = 1;
};

struct ScaleSpec {
  std::size_t height = 1;
  std::size_t width = 1;
  std::size_t blocks = 1;
  bool operator==(const ScaleSpec&) const = default;
};

/// Each scale halves height and width of the previous one.
struct UNetSpec {
  std::vector<ScaleSpec> scales{{32, 32, 2}, {16, 16, 2}, {8, 8, 2}};
  std::size_t channels = 64;
  std::size_t heads = 4;
  std::size_t prompt_tokens = 8;
  std::size_t mlp_ratio = 4;
  std::uint64_t weight_seed = 0;

  std::size_t top_tokens() const noexcept {
    return scales.empty() ? 0 : scales.front().height * scales.front().width;
  }
  std::size_t total_blocks() const noexcept;
  bool operator==(const UNetSpec&) const = default;
};

/// Throws ConfigError naming the offending field.
void validate(const UNetSpec& spec);
void validate(const ToMeConfig& tome);

BlockConfig block_config(const ToMeConfig& tome, const UNetSpec& spec);

}  // namespace tome
