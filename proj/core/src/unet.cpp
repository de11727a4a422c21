#include "tome/unet.hpp"

#include <cmath>
#include <memory>
#include <string>

#include "tome/errors.hpp"
#include "tome/matching.hpp"
#include "tome/merging.hpp"
#include "tome/rng.hpp"

namespace tome {

namespace {

Matrix random_matrix(RngStream rs, std::size_t rows, std::size_t cols, float stddev) {
  Matrix m(rows, cols);
  for (float& v : m.values()) v = rs.next_normal() * stddev;
  return m;
}

LayerNormWeights unit_norm(std::size_t c) {
  return {std::vector<float>(c, 1.0f), std::vector<float>(c, 0.0f)};
}

BlockWeights make_block(const UNetSpec& spec, std::size_t layer) {
  const Rng rng(spec.weight_seed);
  const std::size_t c = spec.channels;
  const std::size_t hidden = c * spec.mlp_ratio;
  const float in_std = 1.0f / std::sqrt(static_cast<float>(c));
  const float out_std = 0.5f / std::sqrt(static_cast<float>(c));
  const float hidden_std = 0.5f / std::sqrt(static_cast<float>(hidden));
  std::uint64_t id = 0;
  auto next = [&](std::size_t rows, std::size_t cols, float stddev) {
    return random_matrix(rng.stream(RngPurpose::Weights, layer, id++), rows, cols, stddev);
  };

  BlockWeights w;
  w.norm_self = unit_norm(c);
  w.norm_cross = unit_norm(c);
  w.norm_mlp = unit_norm(c);
  w.self_attn = {next(c, c, in_std), next(c, c, in_std), next(c, c, in_std), next(c, c, out_std)};
  w.cross_attn = {next(c, c, in_std), next(c, c, in_std), next(c, c, in_std), next(c, c, out_std)};
  w.mlp.w1 = next(c, hidden, in_std);
  w.mlp.b1.assign(hidden, 0.0f);
  w.mlp.w2 = next(hidden, c, hidden_std);
  w.mlp.b2.assign(c, 0.0f);
  return w;
}

Matrix normed(const Matrix& x, const LayerNormWeights& ln) {
  Matrix n = layernorm_rows(x);
  affine_columns(n, ln.gamma, ln.beta);
  return n;
}

/// Multi-head scaled dot-product attention without any token-size bias.
Matrix attention(const Matrix& queries, const Matrix& keys_values, const AttentionWeights& w,
                 std::size_t heads) {
  const Matrix q = matmul(queries, w.wq);
  const Matrix k = matmul(keys_values, w.wk);
  const Matrix v = matmul(keys_values, w.wv);
  const std::size_t d = q.cols() / heads;
  const float scale = 1.0f / std::sqrt(static_cast<float>(d));
  Matrix out(q.rows(), q.cols());
  for (std::size_t h = 0; h < heads; ++h) {
    Matrix scores = matmul(slice_columns(q, h * d, d), transpose(slice_columns(k, h * d, d)));
    scale_inplace(scores, scale);
    assign_columns(out, h * d, softmax_weighted_sum(scores, slice_columns(v, h * d, d)));
  }
  return matmul(out, w.wo);
}

Matrix mlp(const Matrix& x, const MlpWeights& w) {
  Matrix h = matmul(x, w.w1);
  add_row_bias(h, w.b1);
  gelu_inplace(h);
  Matrix o = matmul(h, w.w2);
  add_row_bias(o, w.b2);
  return o;
}

void add_time_embedding(TokenGrid& g, std::size_t step) {
  const std::size_t c = g.channels;
  std::vector<float> emb(c);
  for (std::size_t i = 0; i < c; ++i) {
    const double freq = std::pow(10000.0, -static_cast<double>(i / 2 * 2) / static_cast<double>(c));
    const double angle = static_cast<double>(step) * freq;
    emb[i] = static_cast<float>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
  }
  for (auto& m : g.values) add_row_bias(m, emb);
}

}  // namespace

const char* component_name(Component c) noexcept {
  switch (c) {
    case Component::SelfAttn: return "self_attn";
    case Component::CrossAttn: return "cross_attn";
    case Component::Mlp: return "mlp";
  }
  return "unknown";
}

std::size_t ForwardProbe::similarity_passes() const noexcept {
  std::size_t n = 0;
  for (const auto& t : traces) n += t.similarity_passes;
  return n;
}

TokenGrid TokenGrid::zeros(const GridShape& shape, std::size_t channels) {
  TokenGrid g;
  g.shape = shape;
  g.channels = channels;
  g.values.assign(shape.batch, Matrix(shape.tokens(), channels));
  return g;
}

TokenGrid TokenGrid::from_matrices(std::size_t height, std::size_t width,
                                   std::vector<Matrix> values) {
  if (values.empty()) throw ShapeError("token grid needs at least one batch element");
  TokenGrid g;
  g.shape = {values.size(), height, width};
  g.channels = values.front().cols();
  for (const auto& m : values) {
    if (m.rows() != height * width || m.cols() != g.channels) {
      throw ShapeError("token grid element does not match " + std::to_string(height) + "x" +
                       std::to_string(width) + "x" + std::to_string(g.channels));
    }
  }
  g.values = std::move(values);
  return g;
}

std::vector<BlockLayout> block_layouts(const UNetSpec& spec) {
  std::vector<BlockLayout> out;
  const std::size_t last = spec.scales.size() - 1;
  auto push = [&](std::size_t s, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i)
      out.push_back({s, spec.scales[s].height, spec.scales[s].width});
  };
  for (std::size_t s = 0; s < last; ++s) push(s, (spec.scales[s].blocks + 1) / 2);
  push(last, spec.scales[last].blocks);
  for (std::size_t s = last; s-- > 0;) push(s, spec.scales[s].blocks / 2);
  return out;
}

TokenGrid downsample(const TokenGrid& g) {
  const std::size_t h = g.shape.height / 2;
  const std::size_t w = g.shape.width / 2;
  TokenGrid out = TokenGrid::zeros({g.shape.batch, h, w}, g.channels);
  for (std::size_t b = 0; b < g.batch(); ++b) {
    const Matrix& in = g.values[b];
    Matrix& o = out.values[b];
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        auto dst = o.row(y * w + x);
        const auto a = in.row((2 * y) * g.shape.width + 2 * x);
        const auto bb = in.row((2 * y) * g.shape.width + 2 * x + 1);
        const auto c = in.row((2 * y + 1) * g.shape.width + 2 * x);
        const auto d = in.row((2 * y + 1) * g.shape.width + 2 * x + 1);
        for (std::size_t k = 0; k < g.channels; ++k)
          dst[k] = (((a[k] + bb[k]) + c[k]) + d[k]) * 0.25f;
      }
    }
  }
  return out;
}

TokenGrid upsample(const TokenGrid& g, std::size_t height, std::size_t width) {
  TokenGrid out = TokenGrid::zeros({g.shape.batch, height, width}, g.channels);
  for (std::size_t b = 0; b < g.batch(); ++b) {
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) {
        const std::size_t sy = std::min(y * g.shape.height / height, g.shape.height - 1);
        const std::size_t sx = std::min(x * g.shape.width / width, g.shape.width - 1);
        const auto src = g.values[b].row(sy * g.shape.width + sx);
        std::copy(src.begin(), src.end(), out.values[b].row(y * width + x).begin());
      }
    }
  }
  return out;
}

UNetModel::UNetModel(UNetSpec spec) : spec_(std::move(spec)) {
  validate(spec_);
  layouts_ = block_layouts(spec_);
  blocks_.reserve(layouts_.size());
  for (std::size_t l = 0; l < layouts_.size(); ++l) blocks_.push_back(make_block(spec_, l));
  for (std::size_t s = 0; s + 1 < spec_.scales.size(); ++s) {
    down_blocks_.push_back((spec_.scales[s].blocks + 1) / 2);
    up_blocks_.push_back(spec_.scales[s].blocks / 2);
  }
  const Rng rng(spec_.weight_seed);
  prompt_ = random_matrix(rng.stream(RngPurpose::Prompt), spec_.prompt_tokens, spec_.channels,
                          1.0f);
  norm_out_ = unit_norm(spec_.channels);
  w_out_ = random_matrix(rng.stream(RngPurpose::Weights, 0, 1u << 20), spec_.channels,
                         spec_.channels, 1.0f / std::sqrt(static_cast<float>(spec_.channels)));
}

UNetModel init_unet(const UNetSpec& spec) { return UNetModel(spec); }

bool UNetModel::weights_equal(const UNetModel& other) const {
  return spec_ == other.spec_ && blocks_ == other.blocks_ && prompt_ == other.prompt_ &&
         norm_out_ == other.norm_out_ && w_out_ == other.w_out_;
}

TokenGrid UNetModel::block_forward(std::size_t layer, const TokenGrid& x,
                                   const std::vector<Matrix>& prompts, const BlockConfig& cfg,
                                   const ToMeConfig* tome, std::size_t step,
                                   ForwardProbe* probe) const {
  const BlockLayout& lay = layout(layer);
  if (x.shape.height != lay.height || x.shape.width != lay.width ||
      x.channels != spec_.channels || x.batch() != x.shape.batch || x.batch() == 0) {
    throw ShapeError("block " + std::to_string(layer) + " expects a " +
                     std::to_string(lay.height) + "x" + std::to_string(lay.width) + "x" +
                     std::to_string(spec_.channels) + " grid");
  }
  if (prompts.size() != x.batch()) throw ShapeError("one prompt per batch element required");
  for (const auto& p : prompts) {
    if (p.rows() != spec_.prompt_tokens || p.cols() != spec_.channels) {
      throw ShapeError("prompt must be " + std::to_string(spec_.prompt_tokens) + "x" +
                       std::to_string(spec_.channels));
    }
  }

  const BlockWeights& w = blocks_[layer];
  const std::size_t n = x.tokens();
  const bool any = cfg.apply_self || cfg.apply_cross || cfg.apply_mlp;
  const bool eligible = tome != nullptr && tome->ratio > 0.0 && any && n >= cfg.min_tokens;

  BlockTrace trace;
  trace.step = step;
  trace.layer = layer;
  trace.tokens = n;
  trace.eligible = eligible;
  trace.ratio = tome ? tome->ratio : 0.0;
  trace.merged_tokens = n;

  // Similarity is computed once, from the block input, and shared by every
  // wrapped component below.
  std::vector<std::shared_ptr<const MergePlan>> plans;
  ReductionMode mode = ReductionMode::Merge;
  if (eligible) {
    mode = tome->prune ? ReductionMode::Prune : ReductionMode::Merge;
    const PartitionPlan partition =
        make_partition(x.shape, tome->partition, Rng(tome->seed), step, layer);
    plans.resize(x.batch());
    for (std::size_t b = 0; b < x.batch(); ++b) {
      if (tome->share_edges && b > 0) {
        plans[b] = plans[0];
      } else {
        plans[b] = std::make_shared<const MergePlan>(
            build_merge_plan(x.values[b], partition, b, RatioPolicy{tome->ratio}));
      }
    }
    trace.similarity_passes = 1;
    trace.masks_identical = partition.identical_across_batch();
    trace.removed = n - plans[0]->merged_token_count();
    trace.merged_tokens = plans[0]->merged_token_count();
    if (probe && probe->keep_masks) {
      for (std::size_t b = 0; b < x.batch(); ++b) trace.masks.push_back(partition.mask(b));
      trace.plans = plans;
    }
  }

  const bool wrap[kComponentCount] = {eligible && cfg.apply_self, eligible && cfg.apply_cross,
                                      eligible && cfg.apply_mlp};
  for (std::size_t c = 0; c < kComponentCount; ++c)
    trace.component_tokens[c] = wrap[c] ? trace.merged_tokens : n;

  TokenGrid out = x;
  for (std::size_t b = 0; b < x.batch(); ++b) {
    Matrix& h = out.values[b];
    // Merge the normalized input, run the component on the reduced set,
    // unmerge, then add to the residual stream at full resolution.
    auto run = [&](Component comp, const LayerNormWeights& ln, auto&& fn) {
      const auto ci = static_cast<std::size_t>(comp);
      const Matrix input = normed(h, ln);
      Matrix delta;
      if (wrap[ci]) {
        const MergedTokens reduced = reduce_tokens(input, plans[b], mode);
        const FlopTally tally;
        Matrix y = fn(reduced.values);
        trace.measured_flops[ci] += tally.elapsed();
        delta = unmerge_values(*plans[b], y, mode);
      } else {
        const FlopTally tally;
        delta = fn(input);
        trace.measured_flops[ci] += tally.elapsed();
      }
      add_inplace(h, delta);
    };
    run(Component::SelfAttn, w.norm_self,
        [&](const Matrix& t) { return attention(t, t, w.self_attn, spec_.heads); });
    run(Component::CrossAttn, w.norm_cross,
        [&](const Matrix& t) { return attention(t, prompts[b], w.cross_attn, spec_.heads); });
    run(Component::Mlp, w.norm_mlp, [&](const Matrix& t) { return mlp(t, w.mlp); });
  }

  if (probe) probe->traces.push_back(std::move(trace));
  return out;
}

TokenGrid UNetModel::forward(const TokenGrid& x, const std::vector<Matrix>& prompts,
                             const ToMeConfig* tome, std::size_t step, ForwardProbe* probe) const {
  const auto& top = spec_.scales.front();
  if (x.shape.height != top.height || x.shape.width != top.width ||
      x.channels != spec_.channels) {
    throw ShapeError("input grid must be " + std::to_string(top.height) + "x" +
                     std::to_string(top.width) + "x" + std::to_string(spec_.channels));
  }
  const BlockConfig cfg = tome ? block_config(*tome, spec_) : BlockConfig{};

  TokenGrid h = x;
  add_time_embedding(h, step);
  std::size_t layer = 0;
  auto run_blocks = [&](std::size_t count) {
    for (std::size_t i = 0; i < count; ++i, ++layer)
      h = block_forward(layer, h, prompts, cfg, tome, step, probe);
  };

  const std::size_t last = spec_.scales.size() - 1;
  std::vector<TokenGrid> skips;
  for (std::size_t s = 0; s < last; ++s) {
    run_blocks(down_blocks_[s]);
    skips.push_back(h);
    h = downsample(h);
  }
  run_blocks(spec_.scales[last].blocks);
  for (std::size_t s = last; s-- > 0;) {
    h = upsample(h, spec_.scales[s].height, spec_.scales[s].width);
    for (std::size_t b = 0; b < h.batch(); ++b) add_inplace(h.values[b], skips[s].values[b]);
    run_blocks(up_blocks_[s]);
  }

  for (auto& m : h.values) m = matmul(normed(m, norm_out_), w_out_);
  return h;
}

}  // namespace tome
