#include "tome/harness.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "tome/errors.hpp"
#include "tome/rng.hpp"

namespace tome {

Schedule schedule_for(const ToMeConfig& tome, std::size_t steps) {
  Schedule s;
  s.steps = steps;
  s.ratio_start = tome.ratio_start.value_or(tome.ratio);
  s.ratio_end = tome.ratio_end.value_or(tome.ratio);
  return s;
}

double ratio_at(const Schedule& schedule, std::size_t step) {
  if (step >= schedule.steps) {
    throw RangeError("step " + std::to_string(step) + " outside schedule of " +
                     std::to_string(schedule.steps) + " steps");
  }
  if (schedule.steps == 1) return schedule.ratio_start;
  const double t = static_cast<double>(step) / static_cast<double>(schedule.steps - 1);
  // Weighted form returns the endpoints exactly at t = 0 and t = 1.
  return (1.0 - t) * schedule.ratio_start + t * schedule.ratio_end;
}

float step_size(std::size_t step, std::size_t steps) noexcept {
  const double s = static_cast<double>(steps);
  return static_cast<float>((2.0 / s) * (1.0 - static_cast<double>(step) / s));
}

TokenGrid GuidancePair::combine() const {
  if (!(conditional.shape == unconditional.shape) ||
      conditional.channels != unconditional.channels) {
    throw ShapeError("guidance pair branches differ in shape");
  }
  TokenGrid out = unconditional;
  const auto g = static_cast<float>(guidance_scale);
  for (std::size_t b = 0; b < out.batch(); ++b) {
    auto o = out.values[b].values();
    const auto c = conditional.values[b].values();
    const auto u = unconditional.values[b].values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = u[i] + g * (c[i] - u[i]);
  }
  return out;
}

TokenGrid make_noise(const UNetModel& model, std::uint64_t seed) {
  const auto& top = model.spec().scales.front();
  TokenGrid g = TokenGrid::zeros({1, top.height, top.width}, model.spec().channels);
  RngStream rs = Rng(seed).stream(RngPurpose::Noise);
  for (float& v : g.values[0].values()) v = rs.next_normal();
  return g;
}

DenoiseResult denoise(const UNetModel& model, const TokenGrid& init_noise, const Matrix& prompt,
                      const Schedule& schedule, const ToMeConfig* tome,
                      const DenoiseOptions& options) {
  const auto& top = model.spec().scales.front();
  if (init_noise.batch() != 1 || init_noise.shape.height != top.height ||
      init_noise.shape.width != top.width || init_noise.channels != model.spec().channels) {
    throw ShapeError("init noise must be a single " + std::to_string(top.height) + "x" +
                     std::to_string(top.width) + "x" + std::to_string(model.spec().channels) +
                     " grid");
  }
  if (schedule.steps < 1) throw RangeError("schedule needs at least one step");

  DenoiseResult result;
  result.probe.keep_masks = options.keep_masks;
  const std::vector<Matrix> prompts{prompt, model.empty_prompt()};
  ToMeConfig disabled;
  disabled.ratio = 0.0;
  Matrix x = init_noise.values[0];

  for (std::size_t step = 0; step < schedule.steps; ++step) {
    const auto t0 = std::chrono::steady_clock::now();
    const double ratio = tome ? ratio_at(schedule, step) : 0.0;
    ToMeConfig step_tome = tome ? *tome : disabled;
    step_tome.ratio = ratio;
    step_tome.ratio_start.reset();
    step_tome.ratio_end.reset();

    ForwardProbe probe;
    probe.keep_masks = options.keep_masks;
    const TokenGrid batch = TokenGrid::from_matrices(top.height, top.width, {x, x});
    const TokenGrid pred =
        model.forward(batch, prompts, tome ? &step_tome : nullptr, step, &probe);

    GuidancePair pair{TokenGrid::from_matrices(top.height, top.width, {pred.values[0]}),
                      TokenGrid::from_matrices(top.height, top.width, {pred.values[1]}),
                      options.guidance_scale};
    const TokenGrid guided = pair.combine();
    const float alpha = step_size(step, schedule.steps);
    auto xv = x.values();
    const auto gv = guided.values[0].values();
    for (std::size_t i = 0; i < xv.size(); ++i) xv[i] -= alpha * gv[i];

    StepRecord rec;
    rec.run_id = options.run_id;
    rec.step = step;
    rec.ratio = ratio;
    rec.batch = batch.batch();
    rec.flops = flop_count(model.spec(), step_tome, ratio);
    for (const auto& t : probe.traces) {
      BlockRecord br;
      br.layer = t.layer;
      br.tokens_before = t.tokens;
      br.tokens_after = t.merged_tokens;
      br.eligible = t.eligible;
      br.similarity_passes = t.similarity_passes;
      br.masks_identical = t.masks_identical;
      for (std::size_t c = 0; c < kComponentCount; ++c) br.measured_flops[c] = t.measured_flops[c];
      rec.blocks.push_back(br);
    }
    rec.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (options.on_step) options.on_step(rec);
    result.records.push_back(std::move(rec));
    for (auto& t : probe.traces) result.probe.traces.push_back(std::move(t));
  }

  result.final_grid = TokenGrid::from_matrices(top.height, top.width, {std::move(x)});
  return result;
}

ErrorMetrics compare_to_baseline(const TokenGrid& a, const TokenGrid& b) {
  if (!(a.shape == b.shape) || a.channels != b.channels || a.batch() != b.batch()) {
    throw ShapeError("compare_to_baseline: grids differ in shape");
  }
  ErrorMetrics m;
  m.mean_shift.assign(a.channels, 0.0);
  double diff_sq = 0.0;
  double ref_sq = 0.0;
  std::size_t rows = 0;
  for (std::size_t e = 0; e < a.batch(); ++e) {
    const Matrix& ma = a.values[e];
    const Matrix& mb = b.values[e];
    for (std::size_t r = 0; r < ma.rows(); ++r, ++rows) {
      for (std::size_t c = 0; c < ma.cols(); ++c) {
        const double d = static_cast<double>(mb(r, c)) - static_cast<double>(ma(r, c));
        diff_sq += d * d;
        ref_sq += static_cast<double>(ma(r, c)) * static_cast<double>(ma(r, c));
        m.max_abs = std::max(m.max_abs, std::abs(d));
        m.mean_shift[c] += d;
      }
    }
  }
  for (double& s : m.mean_shift) s = rows ? s / static_cast<double>(rows) : 0.0;
  if (ref_sq > 0.0) {
    m.relative_l2 = std::sqrt(diff_sq / ref_sq);
  } else {
    m.relative_l2 = diff_sq > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  return m;
}

}  // namespace tome
