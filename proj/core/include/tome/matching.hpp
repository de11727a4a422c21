#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tome/partition.hpp"
#include "tome/tensor.hpp"

namespace tome {

/// One src token merged into one dst token (flat token indices).
struct Edge {
  std::size_t src = 0;
  std::size_t dst = 0;
  bool operator==(const Edge&) const = default;
  auto operator<=>(const Edge&) const = default;
};

/// Fraction of ALL tokens a block removes by merging.
struct RatioPolicy {
  double ratio = 0.0;
};

/// r = floor(ratio * tokens). A 1e-9 guard absorbs representation error so
/// that e.g. 0.29 * 100 yields 29 rather than 28.
std::size_t tokens_to_remove(double ratio, std::size_t tokens);

/// Immutable record of the selected edges plus the group bookkeeping needed
/// to merge and later unmerge one batch element.
class MergePlan {
 public:
  /// Validates the edges against the mask (src -> dst, each src at most once)
  /// and derives the groups. Throws IndexError/PartitionError on violations.
  MergePlan(std::vector<std::uint8_t> dst_mask, std::vector<Edge> edges);

  std::size_t tokens() const noexcept { return mask_.size(); }
  const std::vector<std::uint8_t>& dst_mask() const noexcept { return mask_; }
  /// Edges in selection order (most similar first).
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  /// Unmerged src tokens, ascending.
  const std::vector<std::size_t>& kept_src() const noexcept { return kept_src_; }
  std::size_t merged_token_count() const noexcept { return groups_.size(); }

  /// Merged row -> original members, ascending. Rows are ordered by their
  /// representative (the dst token, or the kept src token itself).
  const std::vector<std::vector<std::size_t>>& groups() const noexcept { return groups_; }
  /// Original token -> merged row.
  const std::vector<std::size_t>& token_to_row() const noexcept { return token_to_row_; }
  /// True for src tokens that appear in an edge.
  bool is_merged_src(std::size_t token) const noexcept { return merged_[token] != 0; }

  bool operator==(const MergePlan& other) const {
    return mask_ == other.mask_ && edges_ == other.edges_;
  }

 private:
  std::vector<std::uint8_t> mask_;
  std::vector<Edge> edges_;
  std::vector<std::uint8_t> merged_;
  std::vector<std::size_t> kept_src_;
  std::vector<std::vector<std::size_t>> groups_;
  std::vector<std::size_t> token_to_row_;
};

/// |src| x |dst| cosine similarities, clamped to [-1, 1]. Rows with zero norm
/// score 0 against everything.
Matrix cosine_similarity(const Matrix& src_feats, const Matrix& dst_feats);

/// Bipartite soft matching on block input `x` (tokens x channels). Each src
/// token's best edge is its most similar dst (lower dst index wins ties); the
/// r src tokens with the highest best-edge score are merged, ties going to the
/// lower src index. Throws RatioError if r exceeds the src count.
MergePlan build_merge_plan(const Matrix& x, std::span<const std::uint8_t> dst_mask,
                           RatioPolicy ratio);
MergePlan build_merge_plan(const Matrix& x, const PartitionPlan& partition,
                           std::size_t batch_index, RatioPolicy ratio);

/// Multiply-add FLOPs spent on similarity scoring for one plan.
std::uint64_t matching_flops(std::size_t src, std::size_t dst, std::size_t channels) noexcept;

}  // namespace tome
