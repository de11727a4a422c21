#include <benchmark/benchmark.h>

#include "tome/harness.hpp"
#include "tome/matching.hpp"
#include "tome/merging.hpp"
#include "tome/partition.hpp"

namespace {

using namespace tome;

// Ratio arguments are in percent.
double ratio_of(const benchmark::State& st) { return static_cast<double>(st.range(0)) / 100.0; }

Matrix features(std::size_t n, std::size_t c) {
  Matrix x(n, c);
  RngStream rng = Rng(9).stream(RngPurpose::Noise);
  for (float& v : x.values()) v = rng.next_normal();
  return x;
}

void BM_Matching(benchmark::State& st) {
  const Matrix x = features(1024, 64);
  const PartitionPlan part =
      make_partition({1, 32, 32}, {scheme::RandTile{2, 2}, true}, Rng(0), 0, 0);
  for (auto _ : st) benchmark::DoNotOptimize(build_merge_plan(x, part, 0, {ratio_of(st)}));
}
BENCHMARK(BM_Matching)->Arg(0)->Arg(25)->Arg(50)->Arg(75)->Unit(benchmark::kMicrosecond);

void BM_MergeUnmerge(benchmark::State& st) {
  const Matrix x = features(1024, 64);
  const PartitionPlan part =
      make_partition({1, 32, 32}, {scheme::RandTile{2, 2}, true}, Rng(0), 0, 0);
  const auto plan = std::make_shared<const MergePlan>(build_merge_plan(x, part, 0, {ratio_of(st)}));
  for (auto _ : st) benchmark::DoNotOptimize(apply_unmerge(apply_merge(x, plan)));
}
BENCHMARK(BM_MergeUnmerge)->Arg(0)->Arg(25)->Arg(50)->Arg(75)->Unit(benchmark::kMicrosecond);

void BM_BlockForward(benchmark::State& st) {
  const UNetModel model{UNetSpec{}};
  const TokenGrid noise = make_noise(model, 0);
  const TokenGrid x = TokenGrid::from_matrices(noise.shape.height, noise.shape.width,
                                               {noise.values[0], noise.values[0]});
  const std::vector<Matrix> prompts{model.prompt_embedding(), model.empty_prompt()};
  ToMeConfig tome;
  tome.ratio = ratio_of(st);
  const BlockConfig cfg = block_config(tome, model.spec());
  for (auto _ : st) benchmark::DoNotOptimize(model.block_forward(0, x, prompts, cfg, &tome, 0));
}
BENCHMARK(BM_BlockForward)->Arg(0)->Arg(25)->Arg(50)->Arg(75)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
