#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tome/errors.hpp"
#include "tome/flops.hpp"
#include "tome/unet.hpp"

namespace tome {
namespace {

UNetSpec small_spec() {
  UNetSpec s;
  s.scales = {{8, 8, 2}, {4, 4, 2}};
  s.channels = 16;
  s.heads = 2;
  s.prompt_tokens = 3;
  s.mlp_ratio = 2;
  return s;
}

TokenGrid random_grid(std::uint64_t seed, std::size_t batch, std::size_t h, std::size_t w,
                      std::size_t c) {
  std::vector<Matrix> v;
  for (std::size_t b = 0; b < batch; ++b) v.push_back(testing::random_matrix(seed + b, h * w, c));
  return TokenGrid::from_matrices(h, w, std::move(v));
}

std::vector<Matrix> prompts_for(const UNetModel& m, std::size_t batch) {
  std::vector<Matrix> p(batch, m.prompt_embedding());
  if (batch > 1) p[1] = m.empty_prompt();
  return p;
}

BlockConfig all_components(std::size_t min_tokens = 1) { return {true, true, true, min_tokens}; }

TEST(InitUnet, SameSpecSameWeights) {
  EXPECT_TRUE(init_unet(small_spec()).weights_equal(init_unet(small_spec())));
}

TEST(InitUnet, BlockCountFollowsScales) {
  UNetSpec s = small_spec();
  s.scales = {{16, 16, 2}, {8, 8, 2}};
  EXPECT_EQ(init_unet(s).block_count(), 4u);
  EXPECT_EQ(init_unet(UNetSpec{}).block_count(), 6u);
}

TEST(InitUnet, WeightSeedChangesWeights) {
  UNetSpec other = small_spec();
  other.weight_seed = 1;
  const UNetModel a = init_unet(small_spec());
  const UNetModel b = init_unet(other);
  EXPECT_FALSE(a.weights_equal(b));
  EXPECT_FALSE(a.weights(0) == b.weights(0));
}

TEST(InitUnet, InvalidSpecNamesField) {
  UNetSpec s = small_spec();
  s.heads = 3;
  try {
    init_unet(s);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "heads");
  }
  s = small_spec();
  s.scales = {{8, 8, 2}, {3, 4, 2}};
  EXPECT_THROW(init_unet(s), ConfigError);
}

TEST(BlockLayouts, DownDeepestUpOrder) {
  UNetSpec s = small_spec();
  s.scales = {{8, 8, 3}, {4, 4, 2}, {2, 2, 1}};
  const auto l = block_layouts(s);
  std::vector<std::size_t> scales;
  for (const auto& b : l) scales.push_back(b.scale);
  EXPECT_EQ(scales, (std::vector<std::size_t>{0, 0, 1, 2, 1, 0}));
}

TEST(Resample, DownThenUpKeepsConstantGrids) {
  TokenGrid g = TokenGrid::zeros({1, 4, 4}, 2);
  for (float& v : g.values[0].values()) v = 1.25f;
  const TokenGrid d = downsample(g);
  EXPECT_EQ(d.shape, (GridShape{1, 2, 2}));
  EXPECT_EQ(upsample(d, 4, 4), g);
}

TEST(BlockForward, RatioZeroIsPlainBlock) {
  const UNetModel m(small_spec());
  const TokenGrid x = random_grid(3, 2, 8, 8, 16);
  ToMeConfig t;
  t.ratio = 0.0;
  const auto p = prompts_for(m, 2);
  EXPECT_EQ(m.block_forward(0, x, p, all_components(), &t, 0),
            m.block_forward(0, x, p, all_components(), nullptr, 0));
}

TEST(BlockForward, BelowMinTokensIsPlainBlock) {
  const UNetModel m(small_spec());
  const TokenGrid x = random_grid(4, 1, 4, 4, 16);
  ToMeConfig t;
  ForwardProbe probe;
  const auto p = prompts_for(m, 1);
  EXPECT_EQ(m.block_forward(2, x, p, all_components(64), &t, 0, &probe),
            m.block_forward(2, x, p, all_components(64), nullptr, 0));
  EXPECT_FALSE(probe.traces.at(0).eligible);
  EXPECT_EQ(probe.similarity_passes(), 0u);
}

TEST(BlockForward, HalfRatioHalvesComponentTokens) {
  UNetSpec s = small_spec();
  s.scales = {{64, 64, 1}};
  s.channels = 8;
  const UNetModel m(s);
  const TokenGrid x = random_grid(5, 1, 64, 64, 8);
  ToMeConfig t;
  t.ratio = 0.5;
  ForwardProbe probe;
  const TokenGrid out = m.block_forward(0, x, prompts_for(m, 1), all_components(), &t, 0, &probe);
  EXPECT_EQ(out.shape, x.shape);
  EXPECT_EQ(out.values[0].rows(), 4096u);
  const BlockTrace& tr = probe.traces.at(0);
  for (std::size_t c : tr.component_tokens) EXPECT_EQ(c, 2048u);
  EXPECT_EQ(tr.similarity_passes, 1u);
  EXPECT_TRUE(all_finite(out.values[0]));
}

TEST(BlockForward, IdenticalTokensMatchPlainBlockExactly) {
  const UNetModel m(small_spec());
  const Matrix proto = testing::random_matrix(6, 1, 16);
  Matrix x(64, 16);
  for (std::size_t r = 0; r < 64; ++r)
    for (std::size_t c = 0; c < 16; ++c) x(r, c) = proto(0, c);
  const TokenGrid g = TokenGrid::from_matrices(8, 8, {x, x});
  const auto p = prompts_for(m, 2);
  const TokenGrid plain = m.block_forward(0, g, p, all_components(), nullptr, 0);
  for (double ratio : {0.1, 0.25, 0.5, 0.7}) {
    ToMeConfig t;
    t.ratio = ratio;
    EXPECT_EQ(m.block_forward(0, g, p, all_components(), &t, 0), plain) << ratio;
  }
}

TEST(BlockForward, DuplicatedKeysHandCase) {
  // Two identical value rows attended with unequal scores: the weighted
  // mean of equal rows is that row, for any weights.
  const Matrix scores = Matrix::from_rows({{0.3f, -1.2f}, {2.0f, 2.0f}});
  const Matrix values = Matrix::from_rows({{0.5f, -0.25f}, {0.5f, -0.25f}});
  EXPECT_EQ(softmax_weighted_sum(scores, values), values);
}

TEST(BlockForward, MeasuredFlopsMatchClosedForm) {
  const UNetSpec s = small_spec();
  const UNetModel m(s);
  const TokenGrid x = random_grid(8, 2, 8, 8, 16);
  ToMeConfig t;
  t.ratio = 0.5;
  ForwardProbe probe;
  m.block_forward(0, x, prompts_for(m, 2), {true, false, true, 1}, &t, 0, &probe);
  const BlockTrace& tr = probe.traces.at(0);
  EXPECT_EQ(tr.measured_flops[0], 2 * component_flops(Component::SelfAttn, 32, s).total());
  EXPECT_EQ(tr.measured_flops[1], 2 * component_flops(Component::CrossAttn, 64, s).total());
  EXPECT_EQ(tr.measured_flops[2], 2 * component_flops(Component::Mlp, 32, s).total());
}

TEST(BlockForward, OnePlanSharedByComponentsAndMasksAgree) {
  const UNetModel m(small_spec());
  const TokenGrid x = random_grid(9, 2, 8, 8, 16);
  ToMeConfig t;
  ForwardProbe probe;
  probe.keep_masks = true;
  m.block_forward(0, x, prompts_for(m, 2), all_components(), &t, 3, &probe);
  const BlockTrace& tr = probe.traces.at(0);
  EXPECT_EQ(tr.similarity_passes, 1u);
  ASSERT_EQ(tr.masks.size(), 2u);
  EXPECT_EQ(tr.masks[0], tr.masks[1]);
  EXPECT_TRUE(tr.masks_identical);

  t.partition.batch_fix = false;
  ForwardProbe loose;
  loose.keep_masks = true;
  m.block_forward(0, x, prompts_for(m, 2), all_components(), &t, 3, &loose);
  EXPECT_NE(loose.traces.at(0).masks[0], loose.traces.at(0).masks[1]);
  EXPECT_FALSE(loose.traces.at(0).masks_identical);
}

TEST(BlockForward, ShapeMismatchThrows) {
  const UNetModel m(small_spec());
  const auto p = prompts_for(m, 1);
  EXPECT_THROW(m.block_forward(0, random_grid(1, 1, 4, 4, 16), p, all_components(), nullptr, 0),
               ShapeError);
  EXPECT_THROW(m.block_forward(0, random_grid(1, 1, 8, 8, 8), p, all_components(), nullptr, 0),
               ShapeError);
  EXPECT_THROW(m.block_forward(0, random_grid(1, 2, 8, 8, 16), p, all_components(), nullptr, 0),
               ShapeError);
}

TEST(BlockForward, PruneModeDiffersFromMerge) {
  const UNetModel m(small_spec());
  const TokenGrid x = random_grid(10, 1, 8, 8, 16);
  ToMeConfig t;
  const auto p = prompts_for(m, 1);
  const TokenGrid merged = m.block_forward(0, x, p, all_components(), &t, 0);
  t.prune = true;
  const TokenGrid pruned = m.block_forward(0, x, p, all_components(), &t, 0);
  EXPECT_NE(merged, pruned);
  EXPECT_TRUE(all_finite(pruned.values[0]));
}

TEST(Forward, TopScaleOnlyByDefault) {
  const UNetModel m(small_spec());
  ToMeConfig t;
  ForwardProbe probe;
  m.forward(random_grid(11, 2, 8, 8, 16), prompts_for(m, 2), &t, 0, &probe);
  ASSERT_EQ(probe.traces.size(), 4u);
  std::vector<bool> eligible;
  for (const auto& tr : probe.traces) eligible.push_back(tr.eligible);
  EXPECT_EQ(eligible, (std::vector<bool>{true, false, false, true}));
  EXPECT_EQ(probe.similarity_passes(), 2u);
}

TEST(Forward, Deterministic) {
  const UNetModel m(small_spec());
  ToMeConfig t;
  const TokenGrid x = random_grid(12, 2, 8, 8, 16);
  EXPECT_EQ(m.forward(x, prompts_for(m, 2), &t, 4), m.forward(x, prompts_for(m, 2), &t, 4));
}

}  // namespace
}  // namespace tome
