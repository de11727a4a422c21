#include "tome/matching.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tome/errors.hpp"

namespace tome {

namespace {

Matrix normalized_rows(const Matrix& a) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto in = a.row(r);
    float sq = 0.0f;
    for (float v : in) sq += v * v;
    const float norm = std::sqrt(sq);
    if (norm == 0.0f) continue;
    auto o = out.row(r);
    for (std::size_t c = 0; c < in.size(); ++c) o[c] = in[c] / norm;
  }
  return out;
}

}  // namespace

std::size_t tokens_to_remove(double ratio, std::size_t tokens) {
  if (!(ratio >= 0.0 && ratio < 1.0)) {
    throw RangeError("ratio " + std::to_string(ratio) + " outside [0, 1)");
  }
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(tokens) + 1e-9));
}

MergePlan::MergePlan(std::vector<std::uint8_t> dst_mask, std::vector<Edge> edges)
    : mask_(std::move(dst_mask)), edges_(std::move(edges)) {
  const std::size_t n = mask_.size();
  auto& merged = merged_;
  merged.assign(n, 0);
  for (const Edge& e : edges_) {
    if (e.src >= n || e.dst >= n) throw IndexError("merge edge index out of range");
    if (mask_[e.src] || !mask_[e.dst]) throw PartitionError("merge edge must run src -> dst");
    if (merged[e.src]) throw PartitionError("src token merged twice");
    merged[e.src] = 1;
  }

  // Representatives in ascending index order define the merged row order.
  token_to_row_.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (mask_[i] || !merged[i]) {
      token_to_row_[i] = groups_.size();
      groups_.push_back({i});
      if (!mask_[i]) kept_src_.push_back(i);
    }
  }
  for (const Edge& e : edges_) {
    const std::size_t row = token_to_row_[e.dst];
    token_to_row_[e.src] = row;
    groups_[row].push_back(e.src);
  }
  for (auto& g : groups_) std::sort(g.begin(), g.end());
}

Matrix cosine_similarity(const Matrix& src_feats, const Matrix& dst_feats) {
  if (src_feats.cols() != dst_feats.cols()) {
    throw ShapeError("cosine_similarity: channel mismatch " + std::to_string(src_feats.cols()) +
                     " vs " + std::to_string(dst_feats.cols()));
  }
  Matrix sim = matmul(normalized_rows(src_feats), transpose(normalized_rows(dst_feats)));
  for (float& v : sim.values()) v = std::clamp(v, -1.0f, 1.0f);
  return sim;
}

MergePlan build_merge_plan(const Matrix& x, std::span<const std::uint8_t> dst_mask,
                           RatioPolicy ratio) {
  const std::size_t n = dst_mask.size();
  if (x.rows() != n) {
    throw ShapeError("build_merge_plan: " + std::to_string(x.rows()) + " tokens vs mask of " +
                     std::to_string(n));
  }
  std::vector<std::size_t> src_idx;
  std::vector<std::size_t> dst_idx;
  for (std::size_t i = 0; i < n; ++i) (dst_mask[i] ? dst_idx : src_idx).push_back(i);

  const std::size_t r = tokens_to_remove(ratio.ratio, n);
  if (r > src_idx.size()) {
    throw RatioError("ratio " + std::to_string(ratio.ratio) + " removes " + std::to_string(r) +
                         " of " + std::to_string(n) + " tokens but only " +
                         std::to_string(src_idx.size()) + " src tokens exist (max ratio " +
                         std::to_string(static_cast<double>(src_idx.size()) /
                                        static_cast<double>(n)) +
                         ")",
                     r, src_idx.size());
  }
  std::vector<std::uint8_t> mask(dst_mask.begin(), dst_mask.end());
  if (r == 0) return MergePlan(std::move(mask), {});
  if (dst_idx.empty()) throw PartitionError("build_merge_plan: empty dst set");

  const Matrix sim = cosine_similarity(gather_rows(x, src_idx), gather_rows(x, dst_idx));

  struct Best {
    float score;
    std::size_t src_pos;
    std::size_t dst_pos;
  };
  std::vector<Best> best(src_idx.size());
  for (std::size_t s = 0; s < src_idx.size(); ++s) {
    const auto row = sim.row(s);
    // max_element keeps the first maximum, i.e. the lowest dst index.
    const auto it = std::max_element(row.begin(), row.end());
    best[s] = {*it, s, static_cast<std::size_t>(it - row.begin())};
  }
  std::partial_sort(best.begin(), best.begin() + static_cast<std::ptrdiff_t>(r), best.end(),
                    [](const Best& a, const Best& b) {
                      if (a.score != b.score) return a.score > b.score;
                      return a.src_pos < b.src_pos;
                    });

  std::vector<Edge> edges;
  edges.reserve(r);
  for (std::size_t i = 0; i < r; ++i) {
    edges.push_back({src_idx[best[i].src_pos], dst_idx[best[i].dst_pos]});
  }
  return MergePlan(std::move(mask), std::move(edges));
}

MergePlan build_merge_plan(const Matrix& x, const PartitionPlan& partition,
                           std::size_t batch_index, RatioPolicy ratio) {
  return build_merge_plan(x, partition.mask(batch_index), ratio);
}

std::uint64_t matching_flops(std::size_t src, std::size_t dst, std::size_t channels) noexcept {
  return 2ull * src * dst * channels;
}

}  // namespace tome
