#include "tome_cli/runner.hpp"

#include <algorithm>
#include <fstream>

#include "tome/errors.hpp"
#include "tome/flops.hpp"
#include "tome/matching.hpp"
#include "tome/ppm.hpp"

namespace tome::cli {

namespace {

constexpr std::size_t kVizScale = 8;

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
}

}  // namespace

std::vector<TokenGrid> run_baselines(const BenchConfig& cfg, const UNetModel& model) {
  std::vector<TokenGrid> out;
  for (std::size_t i = 0; i < cfg.seeds; ++i) {
    DenoiseOptions opt;
    opt.guidance_scale = cfg.guidance;
    opt.run_id = "baseline";
    out.push_back(denoise(model, make_noise(model, cfg.seed + i), model.prompt_embedding(),
                          Schedule{cfg.steps, 0.0, 0.0}, nullptr, opt)
                      .final_grid);
  }
  return out;
}

void check_ratio_capacity(const BenchConfig& cfg) {
  const UNetSpec spec = unet_spec(cfg);
  const BlockConfig bc = block_config(cfg.tome, spec);
  const Schedule sched = schedule_for(cfg.tome, cfg.steps);
  const double worst = std::max(sched.ratio_start, sched.ratio_end);
  if (!(worst > 0.0) || !cfg.tome.any_component()) return;
  for (const auto& lay : block_layouts(spec)) {
    const std::size_t n = lay.tokens();
    if (n < bc.min_tokens) continue;
    const std::size_t r = tokens_to_remove(worst, n);
    const std::size_t src = n - expected_dst_count(lay.height, lay.width, cfg.tome.partition);
    if (r > src) {
      throw RatioError("ratio " + format_real(worst) + " removes " + std::to_string(r) + " of " +
                           std::to_string(n) + " tokens on a " + std::to_string(lay.height) +
                           "x" + std::to_string(lay.width) + " block, but partition " +
                           to_string(cfg.tome.partition.variant) + " leaves only " +
                           std::to_string(src) + " src tokens (max ratio " +
                           format_real(static_cast<double>(src) / static_cast<double>(n)) + ")",
                       r, src);
    }
  }
}

RunOutput execute_run(const BenchConfig& cfg, const UNetModel& model,
                      const std::vector<TokenGrid>* baselines, const StepCallback& on_step) {
  const std::string id = run_id(cfg);
  const Schedule sched = schedule_for(cfg.tome, cfg.steps);
  RunOutput out;
  std::optional<ErrorMetrics> mean_error;

  for (std::size_t i = 0; i < cfg.seeds; ++i) {
    ToMeConfig tome = cfg.tome;
    tome.seed = cfg.seed + i;
    DenoiseOptions opt;
    opt.guidance_scale = cfg.guidance;
    opt.run_id = id;
    opt.keep_masks = i == 0 && cfg.viz_partition;
    if (i == 0) opt.on_step = on_step;
    DenoiseResult res =
        denoise(model, make_noise(model, tome.seed), model.prompt_embedding(), sched, &tome, opt);
    if (i == 0) {
      out.report = aggregate(res.records);
      out.probe = std::move(res.probe);
    }
    if (baselines) {
      const ErrorMetrics e = compare_to_baseline(baselines->at(i), res.final_grid);
      if (!mean_error) {
        mean_error = ErrorMetrics{};
        mean_error->mean_shift.assign(e.mean_shift.size(), 0.0);
      }
      const double w = 1.0 / static_cast<double>(cfg.seeds);
      mean_error->relative_l2 += e.relative_l2 * w;
      mean_error->max_abs = std::max(mean_error->max_abs, e.max_abs);
      for (std::size_t c = 0; c < e.mean_shift.size(); ++c)
        mean_error->mean_shift[c] += e.mean_shift[c] * w;
    }
  }

  out.report.config = resolved_config(cfg);
  out.report.config_digest = config_digest(cfg);
  out.report.error = mean_error;
  return out;
}

std::vector<std::filesystem::path> write_report(const BenchConfig& cfg, const RunReport& report) {
  ensure_dir(cfg.out);
  const std::filesystem::path base = cfg.out / report.run_id;
  std::vector<std::filesystem::path> files;
  if (cfg.format == OutputFormat::Json) {
    files.push_back(base.string() + ".json");
    write_text(files.back(), to_json(report));
  } else {
    files.push_back(base.string() + ".csv");
    write_text(files.back(), csv_header() + csv_row(report));
  }
  files.push_back(base.string() + ".timing.csv");
  write_text(files.back(), timing_csv(report));
  files.push_back(base.string() + ".cfg");
  write_text(files.back(), config_text(cfg));
  return files;
}

std::vector<std::filesystem::path> write_visualizations(const BenchConfig& cfg,
                                                        const RunOutput& run) {
  const std::filesystem::path dir = cfg.out / (run.report.run_id + "_viz");
  ensure_dir(dir);
  std::vector<std::filesystem::path> files;
  const std::size_t last = cfg.steps - 1;
  const auto layouts = block_layouts(unet_spec(cfg));
  for (const BlockTrace& t : run.probe.traces) {
    if (!t.eligible || (t.step != 0 && t.step != last) || t.plans.empty()) continue;
    const std::string stem = "s" + std::to_string(t.step) + "_l" + std::to_string(t.layer);
    const std::size_t h = layouts.at(t.layer).height;
    const std::size_t w = layouts.at(t.layer).width;
    const PartitionPlan partition(GridShape{t.masks.size(), h, w}, t.masks);
    for (std::size_t b = 0; b < t.masks.size(); ++b) {
      files.push_back(dir / ("partition_" + stem + "_b" + std::to_string(b) + ".ppm"));
      write_ppm(files.back(), partition_image(partition, b, kVizScale));
    }
    files.push_back(dir / ("mergemap_" + stem + "_b0.ppm"));
    write_ppm(files.back(), merge_map_image(*t.plans[0], h, w, kVizScale));
    files.push_back(dir / ("edges_" + stem + "_b0.txt"));
    write_edge_list(files.back(), *t.plans[0]);
  }
  return files;
}

std::vector<std::filesystem::path> write_plan_visualization(const BenchConfig& cfg) {
  const UNetModel model(unet_spec(cfg));
  const TokenGrid noise = make_noise(model, cfg.seed);
  const GridShape shape{2, cfg.latent_height, cfg.latent_width};
  const PartitionPlan partition =
      make_partition(shape, cfg.tome.partition, Rng(cfg.seed), 0, 0);
  ensure_dir(cfg.out);
  std::vector<std::filesystem::path> files;
  for (std::size_t b = 0; b < 2; ++b) {
    files.push_back(cfg.out / ("partition_b" + std::to_string(b) + ".ppm"));
    write_ppm(files.back(), partition_image(partition, b, kVizScale));
  }
  const MergePlan plan =
      build_merge_plan(noise.values[0], partition, 0, RatioPolicy{cfg.tome.ratio});
  files.push_back(cfg.out / "mergemap_b0.ppm");
  write_ppm(files.back(), merge_map_image(plan, cfg.latent_height, cfg.latent_width, kVizScale));
  files.push_back(cfg.out / "edges_b0.txt");
  write_edge_list(files.back(), plan);
  return files;
}

}  // namespace tome::cli
