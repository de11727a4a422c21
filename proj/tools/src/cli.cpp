#include "tome_cli/cli.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "tome/errors.hpp"
#include "tome_cli/runner.hpp"

namespace tome::cli {

namespace {

// Long flags that carry a value, in the order they are applied.
constexpr const char* kValueFlags[] = {
    "ratio", "ratio-start", "ratio-end", "partition", "apply", "min-tokens", "steps",
    "seed", "seeds", "latent", "scales", "blocks", "channels", "heads", "weight-seed",
    "guidance", "out", "format"};

constexpr const char* kSwitches[] = {"prune", "share-edges", "viz-partition", "compare-baseline"};

struct Flags {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  CLI::Option* batch_fix = nullptr;
  CLI::Option* no_batch_fix = nullptr;
  bool progress = false;
  std::size_t jobs = 0;
};

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config_path, "flat key = value file; flags override it");
  const std::map<std::string, std::string> help = {
      {"ratio", "fraction of tokens merged per eligible block"},
      {"ratio-start", "ratio at the first step (needs --ratio-end)"},
      {"ratio-end", "ratio at the last step (needs --ratio-start)"},
      {"partition", "alt | strided:SYxSX | rand[:F] | rand2x2 | randtile:TYxTX"},
      {"apply", "comma list of self, cross, mlp"},
      {"min-tokens", "merge only blocks with at least this many tokens"},
      {"steps", "denoising steps"},
      {"seed", "first seed (noise and partition draws)"},
      {"seeds", "number of consecutive seeds to average"},
      {"latent", "top-scale grid HxW"},
      {"scales", "number of U-Net scales"},
      {"blocks", "transformer blocks per scale"},
      {"channels", "token channels"},
      {"heads", "attention heads"},
      {"weight-seed", "seed of the random model weights"},
      {"guidance", "classifier-free guidance scale"},
      {"out", "output directory"},
      {"format", "json or csv"}};
  for (const char* name : kValueFlags) {
    f.options[name] = app->add_option(std::string("--") + name, f.values[name], help.at(name));
  }
  f.batch_fix = app->add_flag("--batch-fix", "draw partitions once per batch (default)");
  f.no_batch_fix = app->add_flag("--no-batch-fix", "draw partitions per batch element");
  f.batch_fix->excludes(f.no_batch_fix);
  for (const char* name : kSwitches) {
    f.options[name] = app->add_flag(std::string("--") + name);
  }
  f.options["prune"]->description("drop selected src tokens instead of merging them");
  f.options["share-edges"]->description("reuse the first batch element's edges for the batch");
  f.options["viz-partition"]->description("write partition masks and merge maps");
  f.options["compare-baseline"]->description("also run the plain model and report the error");
  app->add_flag("--progress", f.progress, "stream per-step records to stderr");
}

BenchConfig build_config(const Flags& f, bool skip_ratio) {
  BenchConfig cfg;
  if (!f.config_path.empty()) load_config_file(cfg, f.config_path);
  for (const char* name : kValueFlags) {
    if (skip_ratio && std::string_view(name) == "ratio") continue;
    if (f.options.at(name)->count() > 0) apply_setting(cfg, name, f.values.at(name));
  }
  if (f.batch_fix->count() > 0) apply_setting(cfg, "batch-fix", "true");
  if (f.no_batch_fix->count() > 0) apply_setting(cfg, "batch-fix", "false");
  for (const char* name : kSwitches) {
    if (f.options.at(name)->count() > 0) apply_setting(cfg, name, "true");
  }
  validate(cfg);
  return cfg;
}

StepCallback progress_printer(bool enabled, std::ostream& err, std::mutex& mu) {
  if (!enabled) return {};
  return [&err, &mu](const StepRecord& r) {
    nlohmann::ordered_json j;
    j["run_id"] = r.run_id;
    j["step"] = r.step;
    j["ratio"] = r.ratio;
    std::vector<std::size_t> after;
    for (const auto& b : r.blocks) after.push_back(b.tokens_after);
    j["tokens_after"] = after;
    j["wall_ms"] = r.wall_ms;
    const std::lock_guard lock(mu);
    err << j.dump() << '\n';
  };
}

std::string summary(const RunReport& r) {
  std::string s = r.run_id + ": speedup_estimate " + format_real(speedup_estimate(r));
  if (r.error) s += ", relative_l2 " + format_real(r.error->relative_l2);
  return s;
}

int do_run(const Flags& f, std::ostream& out, std::ostream& err) {
  const BenchConfig cfg = build_config(f, false);
  check_ratio_capacity(cfg);
  const UNetModel model(unet_spec(cfg));
  std::vector<TokenGrid> baselines;
  if (cfg.compare_baseline) baselines = run_baselines(cfg, model);
  std::mutex mu;
  const RunOutput run = execute_run(cfg, model, cfg.compare_baseline ? &baselines : nullptr,
                                    progress_printer(f.progress, err, mu));
  auto files = write_report(cfg, run.report);
  if (cfg.viz_partition) {
    const auto viz = write_visualizations(cfg, run);
    files.insert(files.end(), viz.begin(), viz.end());
  }
  out << summary(run.report) << '\n';
  for (const auto& p : files) out << "  wrote " << p.string() << '\n';
  return kExitOk;
}

int do_sweep(const Flags& f, std::ostream& out, std::ostream& err) {
  BenchConfig base = build_config(f, true);
  base.compare_baseline = true;
  const auto& ratio_opt = f.options.at("ratio");
  const std::vector<double> ratios = ratio_opt->count() > 0
                                         ? parse_ratio_axis(f.values.at("ratio"))
                                         : std::vector<double>{base.tome.ratio};
  std::vector<BenchConfig> points;
  for (double r : ratios) {
    BenchConfig c = base;
    c.tome.ratio = r;
    c.tome.ratio_start.reset();
    c.tome.ratio_end.reset();
    validate(c);
    points.push_back(c);
  }
  for (const auto& c : points) check_ratio_capacity(c);

  const UNetModel model(unet_spec(base));
  const std::vector<TokenGrid> baselines = run_baselines(base, model);

  std::vector<RunReport> reports(points.size());
  std::atomic<std::size_t> next{0};
  std::mutex write_mu;
  std::mutex progress_mu;
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      try {
        RunOutput run = execute_run(points[i], model, &baselines,
                                    progress_printer(f.progress, err, progress_mu));
        const std::lock_guard lock(write_mu);
        write_report(points[i], run.report);
        if (points[i].viz_partition) write_visualizations(points[i], run);
        reports[i] = std::move(run.report);
      } catch (...) {
        const std::lock_guard lock(write_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t jobs = std::min(points.size(), f.jobs > 0 ? f.jobs : hw);
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  std::string table = csv_header();
  for (const auto& r : reports) table += csv_row(r);
  std::filesystem::create_directories(base.out);
  const auto table_path = base.out / "sweep.csv";
  std::ofstream(table_path, std::ios::binary) << table;
  for (const auto& r : reports) out << summary(r) << '\n';
  out << "  wrote " << table_path.string() << '\n';
  return kExitOk;
}

int do_viz(const Flags& f, std::ostream& out) {
  const BenchConfig cfg = build_config(f, false);
  for (const auto& p : write_plan_visualization(cfg)) out << "  wrote " << p.string() << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Token merging benchmark on a toy diffusion U-Net", "tome_bench"};
  app.require_subcommand(1);
  Flags run_flags, sweep_flags, viz_flags;
  CLI::App* run = app.add_subcommand("run", "baseline-aware run of one configuration");
  CLI::App* sweep = app.add_subcommand("sweep", "run a ratio axis (start:end:step or a,b,c)");
  CLI::App* viz = app.add_subcommand("viz", "render the step-0 partition and merge map");
  add_common(run, run_flags);
  add_common(sweep, sweep_flags);
  sweep->add_option("--jobs", sweep_flags.jobs, "worker threads (default: hardware threads)");
  add_common(viz, viz_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitConfig;
  }

  try {
    if (*run) return do_run(run_flags, out, err);
    if (*sweep) return do_sweep(sweep_flags, out, err);
    return do_viz(viz_flags, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const RatioError& e) {
    err << "ratio error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace tome::cli
