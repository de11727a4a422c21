#include "tome/merging.hpp"

#include <algorithm>
#include <string>

#include "tome/errors.hpp"

namespace tome {

namespace {

void require_plan_fits(const Matrix& x, const MergePlan& plan) {
  if (x.rows() != plan.tokens()) {
    throw ShapeError("merge plan built for " + std::to_string(plan.tokens()) +
                     " tokens applied to " + std::to_string(x.rows()));
  }
}

}  // namespace

MergedTokens apply_merge(const Matrix& x, std::shared_ptr<const MergePlan> plan) {
  require_plan_fits(x, *plan);
  const auto& groups = plan->groups();
  MergedTokens out;
  out.values = Matrix(groups.size(), x.cols());
  out.group_sizes.reserve(groups.size());
  out.original_tokens = x.rows();
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto acc = out.values.row(g);
    const auto& members = groups[g];
    std::copy_n(x.row(members.front()).data(), x.cols(), acc.data());
    for (std::size_t k = 1; k < members.size(); ++k) {
      const auto v = x.row(members[k]);
      const auto count = static_cast<float>(k + 1);
      for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += (v[c] - acc[c]) / count;
    }
    out.group_sizes.push_back(members.size());
  }
  out.origin = std::move(plan);
  out.mode = ReductionMode::Merge;
  return out;
}

MergedTokens apply_merge(const Matrix& x, const MergePlan& plan) {
  return apply_merge(x, std::make_shared<const MergePlan>(plan));
}

MergedTokens apply_prune_reduce(const Matrix& x, std::shared_ptr<const MergePlan> plan) {
  require_plan_fits(x, *plan);
  const auto& groups = plan->groups();
  MergedTokens out;
  out.values = Matrix(groups.size(), x.cols());
  out.original_tokens = x.rows();
  out.group_sizes.assign(groups.size(), 1);
  const auto& to_row = plan->token_to_row();
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (plan->is_merged_src(i)) continue;
    std::copy_n(x.row(i).data(), x.cols(), out.values.row(to_row[i]).data());
  }
  out.origin = std::move(plan);
  out.mode = ReductionMode::Prune;
  return out;
}

MergedTokens reduce_tokens(const Matrix& x, std::shared_ptr<const MergePlan> plan,
                           ReductionMode mode) {
  return mode == ReductionMode::Merge ? apply_merge(x, std::move(plan))
                                      : apply_prune_reduce(x, std::move(plan));
}

Matrix unmerge_values(const MergePlan& plan, const Matrix& values, ReductionMode mode) {
  if (values.rows() != plan.merged_token_count()) {
    throw ShapeError("unmerge: " + std::to_string(values.rows()) + " rows for a plan with " +
                     std::to_string(plan.merged_token_count()) + " merged tokens");
  }
  const auto& to_row = plan.token_to_row();
  Matrix out(plan.tokens(), values.cols());
  for (std::size_t i = 0; i < plan.tokens(); ++i) {
    if (mode == ReductionMode::Prune && plan.is_merged_src(i)) continue;
    std::copy_n(values.row(to_row[i]).data(), values.cols(), out.row(i).data());
  }
  return out;
}

Matrix apply_unmerge(const MergedTokens& m) {
  return unmerge_values(*m.origin, m.values, m.mode);
}

Matrix apply_prune(const Matrix& x, const MergePlan& plan) {
  return apply_unmerge(apply_prune_reduce(x, std::make_shared<const MergePlan>(plan)));
}

}  // namespace tome
