#pragma once

#include <filesystem>
#include <vector>

#include "tome/harness.hpp"
#include "tome/metrics.hpp"
#include "tome_cli/bench_config.hpp"

namespace tome::cli {

/// Final grids of the plain model, one per seed, for error comparisons.
std::vector<TokenGrid> run_baselines(const BenchConfig& cfg, const UNetModel& model);

/// Throws RatioError when the configured ratio asks some eligible block to
/// remove more tokens than its src set holds; the message carries the bound.
void check_ratio_capacity(const BenchConfig& cfg);

struct RunOutput {
  RunReport report;
  /// Traces of the first seed, with masks and plans when cfg.viz_partition.
  ForwardProbe probe;
};

/// Runs every seed. `baselines` (one per seed) enables the error section.
RunOutput execute_run(const BenchConfig& cfg, const UNetModel& model,
                      const std::vector<TokenGrid>* baselines, const StepCallback& on_step = {});

/// Writes the report (json or csv), its timing csv and its config file.
std::vector<std::filesystem::path> write_report(const BenchConfig& cfg, const RunReport& report);

/// Partition masks, merge maps and edge lists of the first and last step.
std::vector<std::filesystem::path> write_visualizations(const BenchConfig& cfg,
                                                        const RunOutput& run);

/// Standalone rendering of the step-0, layer-0 plan on the seed's latent.
std::vector<std::filesystem::path> write_plan_visualization(const BenchConfig& cfg);

}  // namespace tome::cli
