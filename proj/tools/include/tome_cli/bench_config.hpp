#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tome/config.hpp"

namespace tome::cli {

enum class OutputFormat { Json, Csv };

/// Everything one benchmark run needs. Filled from a config file and/or
/// flags through apply_setting, so both paths resolve identically.
struct BenchConfig {
  ToMeConfig tome;
  std::size_t steps = 50;
  std::uint64_t seed = 0;
  /// Seeds seed, seed+1, ... are run and their errors averaged.
  std::size_t seeds = 1;
  std::size_t latent_height = 32;
  std::size_t latent_width = 32;
  std::size_t scales = 3;
  std::size_t blocks_per_scale = 2;
  std::size_t channels = 64;
  std::size_t heads = 4;
  std::uint64_t weight_seed = 0;
  double guidance = 7.5;
  bool compare_baseline = false;

  // Output knobs; they never change results and stay out of the digest.
  std::filesystem::path out = "tome_out";
  OutputFormat format = OutputFormat::Json;
  bool viz_partition = false;
};

/// Applies one `key = value` setting. Keys are the long flag names without
/// the leading dashes; underscores and dashes are interchangeable. Throws
/// ConfigError naming the key.
void apply_setting(BenchConfig& cfg, std::string_view key, std::string_view value);

/// Parses flat `key = value` text; `#` starts a comment.
std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text);
void load_config_file(BenchConfig& cfg, const std::filesystem::path& path);

/// Checks cross-field constraints; throws ConfigError naming the field.
void validate(const BenchConfig& cfg);

UNetSpec unet_spec(const BenchConfig& cfg);

/// Result-affecting settings in a fixed order.
std::vector<std::pair<std::string, std::string>> resolved_config(const BenchConfig& cfg);
/// resolved_config as `key = value` lines; loadable with load_config_file.
std::string config_text(const BenchConfig& cfg);
std::string config_digest(const BenchConfig& cfg);
std::string run_id(const BenchConfig& cfg);

/// "start:end:step" (inclusive) or "a,b,c". Throws ConfigError("ratio").
std::vector<double> parse_ratio_axis(std::string_view text);

/// Shortest decimal text that reads back as the same double.
std::string format_real(double v);

}  // namespace tome::cli
