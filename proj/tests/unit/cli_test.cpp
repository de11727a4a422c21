#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tome/errors.hpp"
#include "tome/ppm.hpp"
#include "tome_cli/bench_config.hpp"
#include "tome_cli/cli.hpp"
#include "tome_cli/runner.hpp"

namespace tome::cli {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "tome_bench");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("tome_cli_test_" + name);
  fs::remove_all(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path only_file_with(const fs::path& dir, const std::string& ext) {
  fs::path found;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.size() > ext.size() && name.ends_with(ext) && !name.ends_with(".timing" + ext)) {
      EXPECT_TRUE(found.empty()) << "several " << ext << " files in " << dir;
      found = e.path();
    }
  }
  return found;
}

const std::vector<std::string> kSmall = {"--steps", "2", "--latent", "16x16", "--channels", "16",
                                         "--heads", "2"};

std::vector<std::string> with_small(std::vector<std::string> args) {
  args.insert(args.end(), kSmall.begin(), kSmall.end());
  return args;
}

TEST(ApplySetting, ErrorsNameTheField) {
  BenchConfig cfg;
  for (const auto& [key, value] : std::vector<std::pair<std::string, std::string>>{
           {"ratio", "abc"}, {"steps", "-3"}, {"latent", "32"}, {"format", "xml"},
           {"apply", "self,attn"}, {"partition", "zigzag"}, {"batch_fix", "maybe"}}) {
    try {
      apply_setting(cfg, key, value);
      ADD_FAILURE() << key;
    } catch (const ConfigError& e) {
      EXPECT_EQ(e.field(), key == "batch_fix" ? "batch-fix" : key);
    }
  }
  EXPECT_THROW(apply_setting(cfg, "colour", "red"), ConfigError);
}

TEST(ApplySetting, KnownKeys) {
  BenchConfig cfg;
  apply_setting(cfg, "ratio_start", "0.7");
  apply_setting(cfg, "ratio-end", "0.3");
  apply_setting(cfg, "apply", "self, mlp");
  apply_setting(cfg, "partition", "strided:2x4");
  apply_setting(cfg, "batch-fix", "false");
  apply_setting(cfg, "latent", "64x32");
  EXPECT_EQ(*cfg.tome.ratio_start, 0.7);
  EXPECT_EQ(*cfg.tome.ratio_end, 0.3);
  EXPECT_TRUE(cfg.tome.apply_mlp);
  EXPECT_FALSE(cfg.tome.apply_cross);
  EXPECT_FALSE(cfg.tome.partition.batch_fix);
  EXPECT_EQ(cfg.latent_height, 64u);
  EXPECT_EQ(cfg.latent_width, 32u);
  validate(cfg);
}

TEST(ConfigText, CommentsAndBlankLines) {
  const auto kv = parse_config_text("# header\n\nratio = 0.3  # trailing\n  seed=7\n");
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv[0], (std::pair<std::string, std::string>{"ratio", "0.3"}));
  EXPECT_EQ(kv[1], (std::pair<std::string, std::string>{"seed", "7"}));
  EXPECT_THROW(parse_config_text("ratio 0.3\n"), ConfigError);
}

TEST(ConfigText, ResolvedTextRoundTrips) {
  BenchConfig cfg;
  apply_setting(cfg, "ratio", "0.3");
  apply_setting(cfg, "partition", "rand:0.25");
  apply_setting(cfg, "apply", "self,cross");
  BenchConfig back;
  for (const auto& [k, v] : parse_config_text(config_text(cfg))) apply_setting(back, k, v);
  EXPECT_EQ(config_text(back), config_text(cfg));
  EXPECT_EQ(config_digest(back), config_digest(cfg));
}

TEST(ConfigText, OutputKnobsStayOutOfDigest) {
  BenchConfig a, b;
  apply_setting(b, "out", "/elsewhere");
  apply_setting(b, "format", "csv");
  EXPECT_EQ(config_digest(a), config_digest(b));
  apply_setting(b, "seed", "1");
  EXPECT_NE(config_digest(a), config_digest(b));
}

TEST(RatioAxis, RangeAndList) {
  EXPECT_EQ(parse_ratio_axis("0.1:0.6:0.1"), (std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5, 0.6}));
  EXPECT_EQ(parse_ratio_axis("0.2,0.5"), (std::vector<double>{0.2, 0.5}));
  EXPECT_THROW(parse_ratio_axis("0.6:0.1:0.1"), ConfigError);
  EXPECT_THROW(parse_ratio_axis("0.1:0.2"), ConfigError);
}

TEST(RatioCapacity, BoundInMessage) {
  BenchConfig cfg;
  apply_setting(cfg, "ratio", "0.8");
  try {
    check_ratio_capacity(cfg);
    FAIL();
  } catch (const RatioError& e) {
    EXPECT_NE(std::string(e.what()).find("max ratio 0.75"), std::string::npos);
  }
  apply_setting(cfg, "partition", "alt");
  EXPECT_THROW(check_ratio_capacity(cfg), RatioError);
  apply_setting(cfg, "ratio", "0.5");
  EXPECT_NO_THROW(check_ratio_capacity(cfg));
}

TEST(Cli, RunHalvesEligibleBlocks) {
  const fs::path dir = fresh_dir("half");
  const auto r = invoke({"run", "--ratio", "0.5", "--steps", "1", "--out", dir.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const std::string json = slurp(only_file_with(dir, ".json"));
  EXPECT_NE(json.find("\"tokens_after\": [\n        512,"), std::string::npos) << json;
  EXPECT_NE(json.find("\"masks_identical_across_batch\": true"), std::string::npos);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(invoke({"run", "--ratio", "1.5"}).code, kExitConfig);
  EXPECT_EQ(invoke({"run", "--no-such-flag"}).code, kExitConfig);
  EXPECT_EQ(invoke({}).code, kExitConfig);
  EXPECT_EQ(invoke({"run", "--batch-fix", "--no-batch-fix"}).code, kExitConfig);
  const auto bad = invoke({"run", "--min-tokens", "0"});
  EXPECT_EQ(bad.code, kExitConfig);
  EXPECT_NE(bad.err.find("min_tokens"), std::string::npos);
  const auto ratio = invoke(with_small({"run", "--ratio", "0.9", "--out", fresh_dir("x").string()}));
  EXPECT_EQ(ratio.code, kExitRuntime);
  EXPECT_NE(ratio.err.find("max ratio"), std::string::npos);
  EXPECT_EQ(invoke({"--help"}).code, kExitOk);
}

TEST(Cli, UnwritableOutputIsRuntimeError) {
  EXPECT_EQ(invoke(with_small({"run", "--out", "/proc/tome-denied"})).code, kExitRuntime);
}

TEST(Cli, ConfigFileAndFlagsAgree) {
  const fs::path a = fresh_dir("flags");
  const fs::path b = fresh_dir("file");
  const auto ra = invoke(with_small({"run", "--ratio", "0.3", "--partition", "rand:0.25",
                                     "--apply", "self,mlp", "--out", a.string()}));
  ASSERT_EQ(ra.code, kExitOk) << ra.err;
  fs::create_directories(b);
  std::ofstream(b / "run.cfg") << "# same settings as the flags\nratio = 0.3\npartition = rand:0.25\n"
                                  "apply = self,mlp\nsteps = 2\nlatent = 16x16\nchannels = 16\n"
                                  "heads = 2\nratio = 0.9  # later lines win, flags win over all\n";
  const auto rb = invoke({"run", "--config", (b / "run.cfg").string(), "--ratio", "0.3", "--out",
                          b.string()});
  ASSERT_EQ(rb.code, kExitOk) << rb.err;
  EXPECT_EQ(slurp(only_file_with(a, ".json")), slurp(only_file_with(b, ".json")));
}

TEST(Cli, WrittenConfigReproducesRun) {
  const fs::path a = fresh_dir("orig");
  ASSERT_EQ(invoke(with_small({"run", "--prune", "--seed", "4", "--out", a.string()})).code, 0);
  const fs::path cfg = only_file_with(a, ".cfg");
  const fs::path b = fresh_dir("replay");
  ASSERT_EQ(invoke({"run", "--config", cfg.string(), "--out", b.string()}).code, 0);
  EXPECT_EQ(slurp(only_file_with(a, ".json")), slurp(only_file_with(b, ".json")));
}

TEST(Cli, CsvFormat) {
  const fs::path dir = fresh_dir("csv");
  ASSERT_EQ(invoke(with_small({"run", "--format", "csv", "--out", dir.string()})).code, 0);
  const std::string csv = slurp(only_file_with(dir, ".csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
  EXPECT_EQ(csv.rfind("run_id,", 0), 0u);
}

TEST(Cli, SweepSixPointsErrorRises) {
  const fs::path dir = fresh_dir("sweep");
  const auto r = invoke({"sweep", "--ratio", "0.1:0.6:0.1", "--steps", "4", "--latent", "16x16",
                         "--channels", "32", "--heads", "2", "--seeds", "3", "--jobs", "2", "--out",
                         dir.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::size_t reports = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string n = e.path().filename().string();
    reports += n.ends_with(".json");
  }
  EXPECT_EQ(reports, 6u);

  std::istringstream table(slurp(dir / "sweep.csv"));
  std::string line;
  std::getline(table, line);
  std::vector<double> errors;
  while (std::getline(table, line)) {
    const auto cut = line.find_last_of(',');
    const auto prev = line.find_last_of(',', cut - 1);
    errors.push_back(std::stod(line.substr(prev + 1, cut - prev - 1)));
  }
  ASSERT_EQ(errors.size(), 6u);
  for (std::size_t i = 1; i < errors.size(); ++i) EXPECT_GT(errors[i], errors[i - 1]);
}

TEST(Cli, NoBatchFixErrorExceedsBatchFix) {
  auto mean_error = [](const std::string& fix, const std::string& name) {
    const fs::path dir = fresh_dir(name);
    const auto r = invoke({"run", "--partition", "rand", fix, "--seeds", "20", "--steps", "4",
                           "--latent", "16x16", "--channels", "32", "--heads", "2",
                           "--compare-baseline", "--out", dir.string()});
    EXPECT_EQ(r.code, kExitOk) << r.err;
    const std::string json = slurp(only_file_with(dir, ".json"));
    const auto at = json.find("\"relative_l2\": ");
    return std::stod(json.substr(at + 15));
  };
  EXPECT_GT(mean_error("--no-batch-fix", "nofix"), mean_error("--batch-fix", "fix"));
}

TEST(Cli, VizStridedLattice) {
  const fs::path dir = fresh_dir("viz");
  ASSERT_EQ(invoke({"viz", "--partition", "strided:2x2", "--latent", "8x8", "--out", dir.string()})
                .code,
            0);
  const RgbImage img = read_ppm(dir / "partition_b0.ppm");
  ASSERT_EQ(img.width, 64u);
  for (std::size_t y = 0; y < 8; ++y) {
    for (std::size_t x = 0; x < 8; ++x) {
      const bool white = img.pixel(8 * x, 8 * y)[0] == 255;
      EXPECT_EQ(white, x % 2 == 0 && y % 2 == 0);
    }
  }
  EXPECT_TRUE(fs::exists(dir / "mergemap_b0.ppm"));
  EXPECT_TRUE(fs::exists(dir / "edges_b0.txt"));
}

TEST(Cli, RunVisualizationFiles) {
  const fs::path dir = fresh_dir("runviz");
  ASSERT_EQ(invoke(with_small({"run", "--viz-partition", "--out", dir.string()})).code, 0);
  std::size_t ppm = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir)) ppm += e.path().extension() == ".ppm";
  // two top-scale blocks x two steps x (two masks + one merge map)
  EXPECT_EQ(ppm, 12u);
}

}  // namespace
}  // namespace tome::cli
