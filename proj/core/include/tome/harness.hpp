#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tome/config.hpp"
#include "tome/flops.hpp"
#include "tome/unet.hpp"

namespace tome {

/// Linear ratio schedule over diffusion steps.
struct Schedule {
  std::size_t steps = 50;
  double ratio_start = 0.5;
  double ratio_end = 0.5;
};

/// Constant schedule from tome.ratio, or tome.ratio_start -> tome.ratio_end when set.
Schedule schedule_for(const ToMeConfig& tome, std::size_t steps);

/// ratio_start at step 0, ratio_end at step steps-1, linear in between.
/// Throws RangeError when step >= steps.
double ratio_at(const Schedule& schedule, std::size_t step);

/// Per-step update size of the fixed denoising rule x <- x - alpha * prediction.
float step_size(std::size_t step, std::size_t steps) noexcept;

struct GuidancePair {
  TokenGrid conditional;
  TokenGrid unconditional;
  double guidance_scale = 7.5;

  /// uncond + scale * (cond - uncond)
  TokenGrid combine() const;
};

/// What happened to one block during one step.
struct BlockRecord {
  std::size_t layer = 0;
  std::size_t tokens_before = 0;
  std::size_t tokens_after = 0;
  bool eligible = false;
  std::size_t similarity_passes = 0;
  bool masks_identical = true;
  std::uint64_t measured_flops[kComponentCount] = {0, 0, 0};
};

/// One denoising step, streamed to reporters as it completes.
struct StepRecord {
  std::string run_id;
  std::size_t step = 0;
  double ratio = 0.0;
  std::size_t batch = 1;
  std::vector<BlockRecord> blocks;
  std::vector<BlockFlops> flops;  ///< analytic, per batch element
  double wall_ms = 0.0;
};

using StepCallback = std::function<void(const StepRecord&)>;

struct DenoiseOptions {
  double guidance_scale = 7.5;
  std::string run_id = "run";
  /// Keep every block's dst masks in `probe` (memory heavy on long runs).
  bool keep_masks = false;
  StepCallback on_step;
};

struct DenoiseResult {
  TokenGrid final_grid;  ///< batch 1
  std::vector<StepRecord> records;
  ForwardProbe probe;
};

/// Iterates the U-Net for `schedule.steps` steps as a guidance pair (batch 2:
/// conditional with `prompt`, unconditional with a zero prompt). `tome ==
/// nullptr` runs the plain model; otherwise tome->ratio is replaced per step
/// by ratio_at(schedule, step).
DenoiseResult denoise(const UNetModel& model, const TokenGrid& init_noise, const Matrix& prompt,
                      const Schedule& schedule, const ToMeConfig* tome,
                      const DenoiseOptions& options = {});

/// Standard-normal latent on the model's top grid, derived from `seed`.
TokenGrid make_noise(const UNetModel& model, std::uint64_t seed);

struct ErrorMetrics {
  double relative_l2 = 0.0;   ///< ||b - a|| / ||a||
  double max_abs = 0.0;
  std::vector<double> mean_shift;  ///< per channel mean of (b - a)
};

/// Compares `b` against the reference `a`. Throws ShapeError on mismatch.
ErrorMetrics compare_to_baseline(const TokenGrid& a, const TokenGrid& b);

}  // namespace tome
