#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tome/config.hpp"
#include "tome/unet.hpp"

namespace tome {

/// Multiply-add FLOPs (2 per MAC) of one component, split by how they scale
/// with the component's token count N: pairwise ~ N^2, linear ~ N, constant
/// independent of N (prompt-side projections).
struct FlopTerms {
  std::uint64_t pairwise = 0;
  std::uint64_t linear = 0;
  std::uint64_t constant = 0;

  std::uint64_t total() const noexcept { return pairwise + linear + constant; }
  FlopTerms& operator+=(const FlopTerms& o) noexcept;
  bool operator==(const FlopTerms&) const = default;
};

struct ComponentFlops {
  FlopTerms baseline;
  FlopTerms merged;
};

struct BlockFlops {
  std::size_t layer = 0;
  std::size_t scale = 0;
  std::size_t tokens = 0;
  std::size_t merged_tokens = 0;
  bool eligible = false;
  ComponentFlops components[kComponentCount];
  /// Similarity scoring for the merge plan (0 when not eligible).
  std::uint64_t matching = 0;
  /// Peak live token-matrix elements (memory proxy).
  std::uint64_t baseline_peak_elements = 0;
  std::uint64_t merged_peak_elements = 0;

  std::uint64_t baseline_total() const noexcept;
  std::uint64_t merged_total() const noexcept;
};

/// Closed-form FLOPs of one component run on `tokens` tokens. These are the
/// exact matmul counts issued by UNetModel's kernels for one batch element.
///   self-attn : pairwise 4 N^2 C, linear 8 N C^2
///   cross-attn: linear 4 N C^2 + 4 N M C, constant 4 M C^2
///   mlp       : linear 4 N C H          (H = mlp_ratio * C)
FlopTerms component_flops(Component c, std::size_t tokens, const UNetSpec& spec) noexcept;

/// Peak live elements of one component: residual stream N C plus the
/// component's working set at its (possibly reduced) token count.
std::uint64_t component_peak_elements(Component c, std::size_t full_tokens,
                                      std::size_t tokens, const UNetSpec& spec) noexcept;

/// Per-block breakdown for one batch element at the given ratio.
std::vector<BlockFlops> flop_count(const UNetSpec& spec, const ToMeConfig& tome, double ratio);

/// dst tokens each scheme produces on a grid (deterministic for every scheme).
std::size_t expected_dst_count(std::size_t height, std::size_t width, const PartitionScheme& s);

}  // namespace tome
