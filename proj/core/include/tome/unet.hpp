#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "tome/config.hpp"
#include "tome/matching.hpp"
#include "tome/partition.hpp"
#include "tome/tensor.hpp"

namespace tome {

/// A batch of token fields; values[b] is tokens x channels in row-major scan order.
struct TokenGrid {
  GridShape shape;
  std::size_t channels = 0;
  std::vector<Matrix> values;

  static TokenGrid zeros(const GridShape& shape, std::size_t channels);
  static TokenGrid from_matrices(std::size_t height, std::size_t width,
                                 std::vector<Matrix> values);
  std::size_t batch() const noexcept { return values.size(); }
  std::size_t tokens() const noexcept { return shape.tokens(); }
  bool operator==(const TokenGrid&) const = default;
};

enum class Component { SelfAttn = 0, CrossAttn = 1, Mlp = 2 };
inline constexpr std::size_t kComponentCount = 3;
const char* component_name(Component c) noexcept;

/// Instrumentation for one block evaluation.
struct BlockTrace {
  std::size_t step = 0;
  std::size_t layer = 0;
  std::size_t tokens = 0;
  bool eligible = false;
  double ratio = 0.0;
  std::size_t removed = 0;        ///< r
  std::size_t merged_tokens = 0;  ///< N - r (N when not eligible)
  std::size_t similarity_passes = 0;
  /// Partition masks agreed across the batch (true when no partition was drawn).
  bool masks_identical = true;
  /// Tokens each component actually computed on (per batch element).
  std::size_t component_tokens[kComponentCount] = {0, 0, 0};
  /// Matmul FLOPs counted by the tensor kernels, summed over the batch.
  std::uint64_t measured_flops[kComponentCount] = {0, 0, 0};
  /// dst masks and merge plans per batch element (kept only when
  /// ForwardProbe::keep_masks).
  std::vector<std::vector<std::uint8_t>> masks;
  std::vector<std::shared_ptr<const MergePlan>> plans;
};

struct ForwardProbe {
  bool keep_masks = false;
  std::vector<BlockTrace> traces;

  std::size_t similarity_passes() const noexcept;
};

struct BlockLayout {
  std::size_t scale = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t tokens() const noexcept { return height * width; }
};

struct LayerNormWeights {
  std::vector<float> gamma;
  std::vector<float> beta;
  bool operator==(const LayerNormWeights&) const = default;
};

struct AttentionWeights {
  Matrix wq, wk, wv, wo;
  bool operator==(const AttentionWeights&) const = default;
};

struct MlpWeights {
  Matrix w1;
  std::vector<float> b1;
  Matrix w2;
  std::vector<float> b2;
  bool operator==(const MlpWeights&) const = default;
};

struct BlockWeights {
  LayerNormWeights norm_self, norm_cross, norm_mlp;
  AttentionWeights self_attn, cross_attn;
  MlpWeights mlp;
  bool operator==(const BlockWeights&) const = default;
};

/// Randomly initialised U-Net of pre-norm transformer blocks (self-attn,
/// cross-attn over a prompt, mlp). Immutable after construction.
class UNetModel {
 public:
  explicit UNetModel(UNetSpec spec);

  const UNetSpec& spec() const noexcept { return spec_; }
  std::size_t block_count() const noexcept { return blocks_.size(); }
  const BlockLayout& layout(std::size_t layer) const { return layouts_.at(layer); }
  const BlockWeights& weights(std::size_t layer) const { return blocks_.at(layer); }
  /// Fixed random prompt embedding (prompt_tokens x channels).
  const Matrix& prompt_embedding() const noexcept { return prompt_; }
  Matrix empty_prompt() const { return Matrix(spec_.prompt_tokens, spec_.channels); }

  /// One transformer block. `tome == nullptr` runs the plain block. Otherwise
  /// tome->ratio is the ratio in effect for this step.
  TokenGrid block_forward(std::size_t layer, const TokenGrid& x, const std::vector<Matrix>& prompts,
                          const BlockConfig& cfg, const ToMeConfig* tome, std::size_t step,
                          ForwardProbe* probe = nullptr) const;

  /// Full U-Net pass at `step`; returns the prediction on the top-scale grid.
  TokenGrid forward(const TokenGrid& x, const std::vector<Matrix>& prompts,
                    const ToMeConfig* tome, std::size_t step, ForwardProbe* probe = nullptr) const;

  bool weights_equal(const UNetModel& other) const;

 private:
  UNetSpec spec_;
  std::vector<BlockWeights> blocks_;
  std::vector<BlockLayout> layouts_;
  /// Execution-order layer ranges per scale on the way down / up.
  std::vector<std::size_t> down_blocks_;
  std::vector<std::size_t> up_blocks_;
  Matrix prompt_;
  LayerNormWeights norm_out_;
  Matrix w_out_;
};

UNetModel init_unet(const UNetSpec& spec);

/// Blocks at scale s run on the way down (ceil(blocks/2)) and on the way up
/// (the rest); the deepest scale runs all of its blocks once.
std::vector<BlockLayout> block_layouts(const UNetSpec& spec);

/// 2x2 mean pooling / nearest-neighbour upsampling of a token grid.
TokenGrid downsample(const TokenGrid& g);
TokenGrid upsample(const TokenGrid& g, std::size_t height, std::size_t width);

}  // namespace tome
