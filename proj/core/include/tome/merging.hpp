#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "tome/matching.hpp"
#include "tome/tensor.hpp"

namespace tome {

enum class ReductionMode {
  Merge,  ///< src tokens average into their dst
  Prune,  ///< src tokens are dropped and come back as zeros
};

/// Reduced token set produced by apply_merge / apply_prune.
struct MergedTokens {
  Matrix values;                         ///< merged_token_count x channels
  std::vector<std::size_t> group_sizes;  ///< members per row (never fed into attention)
  std::shared_ptr<const MergePlan> origin;
  ReductionMode mode = ReductionMode::Merge;
  std::size_t original_tokens = 0;
};

/// Each group becomes the running mean of its members in ascending token
/// order, so groups of equal tokens reproduce that token exactly.
MergedTokens apply_merge(const Matrix& x, std::shared_ptr<const MergePlan> plan);
MergedTokens apply_merge(const Matrix& x, const MergePlan& plan);

/// Copies each row back to every original member position. In prune mode
/// the dropped src positions receive zeros.
Matrix apply_unmerge(const MergedTokens& m);

/// Unmerges per-row `values` (e.g. a component's output computed on the
/// reduced tokens) through `plan`.
Matrix unmerge_values(const MergePlan& plan, const Matrix& values, ReductionMode mode);

/// Prune-mode reduction: selected src rows are dropped, every dst keeps its
/// own value.
MergedTokens apply_prune_reduce(const Matrix& x, std::shared_ptr<const MergePlan> plan);

/// Round trip of the prune comparator: selected src rows zeroed, others untouched.
Matrix apply_prune(const Matrix& x, const MergePlan& plan);

/// Reduce with the given mode (merge or prune).
MergedTokens reduce_tokens(const Matrix& x, std::shared_ptr<const MergePlan> plan,
                           ReductionMode mode);

}  // namespace tome
