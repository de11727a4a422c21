#include "tome/flops.hpp"

#include <algorithm>
#include <cmath>

#include "tome/matching.hpp"

namespace tome {

FlopTerms& FlopTerms::operator+=(const FlopTerms& o) noexcept {
  pairwise += o.pairwise;
  linear += o.linear;
  constant += o.constant;
  return *this;
}

std::uint64_t BlockFlops::baseline_total() const noexcept {
  std::uint64_t t = 0;
  for (const auto& c : components) t += c.baseline.total();
  return t;
}

std::uint64_t BlockFlops::merged_total() const noexcept {
  std::uint64_t t = matching;
  for (const auto& c : components) t += c.merged.total();
  return t;
}

FlopTerms component_flops(Component c, std::size_t tokens, const UNetSpec& spec) noexcept {
  const std::uint64_t n = tokens;
  const std::uint64_t ch = spec.channels;
  const std::uint64_t m = spec.prompt_tokens;
  const std::uint64_t hidden = ch * spec.mlp_ratio;
  FlopTerms t;
  switch (c) {
    case Component::SelfAttn:
      t.pairwise = 4 * n * n * ch;
      t.linear = 8 * n * ch * ch;
      break;
    case Component::CrossAttn:
      t.linear = 4 * n * ch * ch + 4 * n * m * ch;
      t.constant = 4 * m * ch * ch;
      break;
    case Component::Mlp:
      t.linear = 4 * n * ch * hidden;
      break;
  }
  return t;
}

std::uint64_t component_peak_elements(Component c, std::size_t full_tokens, std::size_t tokens,
                                      const UNetSpec& spec) noexcept {
  const std::uint64_t n = tokens;
  const std::uint64_t ch = spec.channels;
  const std::uint64_t m = spec.prompt_tokens;
  const std::uint64_t residual = static_cast<std::uint64_t>(full_tokens) * ch;
  switch (c) {
    case Component::SelfAttn:  // q, k, v, out + one head's score matrix
      return residual + 4 * n * ch + n * n;
    case Component::CrossAttn:
      return residual + 2 * n * ch + 2 * m * ch + n * m;
    case Component::Mlp:
      return residual + 2 * n * ch + n * ch * spec.mlp_ratio;
  }
  return residual;
}

std::size_t expected_dst_count(std::size_t height, std::size_t width, const PartitionScheme& s) {
  const std::size_t n = height * width;
  struct Visitor {
    std::size_t h, w, n;
    std::size_t operator()(const scheme::Alternating&) const { return n / 2; }
    std::size_t operator()(const scheme::Strided& st) const {
      return ((h + st.sy - 1) / st.sy) * ((w + st.sx - 1) / st.sx);
    }
    std::size_t operator()(const scheme::Random& r) const {
      return static_cast<std::size_t>(std::nearbyint(r.dst_fraction * static_cast<double>(n)));
    }
    std::size_t operator()(const scheme::RandTile& t) const {
      return ((h + t.ty - 1) / t.ty) * ((w + t.tx - 1) / t.tx);
    }
  };
  return std::visit(Visitor{height, width, n}, s.variant);
}

std::vector<BlockFlops> flop_count(const UNetSpec& spec, const ToMeConfig& tome, double ratio) {
  const BlockConfig cfg = block_config(tome, spec);
  const bool wrap_cfg[kComponentCount] = {cfg.apply_self, cfg.apply_cross, cfg.apply_mlp};
  const bool any = cfg.apply_self || cfg.apply_cross || cfg.apply_mlp;
  std::vector<BlockFlops> out;
  const auto layouts = block_layouts(spec);
  for (std::size_t l = 0; l < layouts.size(); ++l) {
    BlockFlops bf;
    bf.layer = l;
    bf.scale = layouts[l].scale;
    bf.tokens = layouts[l].tokens();
    bf.eligible = ratio > 0.0 && any && bf.tokens >= cfg.min_tokens;
    bf.merged_tokens = bf.eligible ? bf.tokens - tokens_to_remove(ratio, bf.tokens) : bf.tokens;
    if (bf.eligible) {
      const std::size_t dst = expected_dst_count(layouts[l].height, layouts[l].width, tome.partition);
      bf.matching = matching_flops(bf.tokens - dst, dst, spec.channels);
    }
    for (std::size_t c = 0; c < kComponentCount; ++c) {
      const auto comp = static_cast<Component>(c);
      const std::size_t active = bf.eligible && wrap_cfg[c] ? bf.merged_tokens : bf.tokens;
      bf.components[c].baseline = component_flops(comp, bf.tokens, spec);
      bf.components[c].merged = component_flops(comp, active, spec);
      bf.baseline_peak_elements = std::max(
          bf.baseline_peak_elements, component_peak_elements(comp, bf.tokens, bf.tokens, spec));
      bf.merged_peak_elements = std::max(bf.merged_peak_elements,
                                         component_peak_elements(comp, bf.tokens, active, spec));
    }
    out.push_back(bf);
  }
  return out;
}

}  // namespace tome
