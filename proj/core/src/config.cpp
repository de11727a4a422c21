#include "tome/config.hpp"

#include <string>

#include "tome/errors.hpp"

namespace tome {

std::size_t UNetSpec::total_blocks() const noexcept {
  std::size_t n = 0;
  for (const auto& s : scales) n += s.blocks;
  return n;
}

void validate(const UNetSpec& spec) {
  if (spec.scales.empty()) throw ConfigError("scales", "at least one scale is required");
  for (std::size_t i = 0; i < spec.scales.size(); ++i) {
    const auto& s = spec.scales[i];
    if (s.height < 1 || s.width < 1 || s.blocks < 1) {
      throw ConfigError("scales", "scale " + std::to_string(i) + " has a zero dimension");
    }
    if (i > 0) {
      const auto& prev = spec.scales[i - 1];
      if (prev.height != 2 * s.height || prev.width != 2 * s.width) {
        throw ConfigError("scales", "scale " + std::to_string(i) +
                                        " must halve the previous scale's height and width");
      }
    }
  }
  if (spec.channels < 1) throw ConfigError("channels", "must be >= 1");
  if (spec.heads < 1 || spec.channels % spec.heads != 0) {
    throw ConfigError("heads", "must be >= 1 and divide channels");
  }
  if (spec.prompt_tokens < 1) throw ConfigError("prompt_tokens", "must be >= 1");
  if (spec.mlp_ratio < 1) throw ConfigError("mlp_ratio", "must be >= 1");
}

void validate(const ToMeConfig& tome) {
  auto check_ratio = [](const char* field, double r) {
    if (!(r >= 0.0 && r < 1.0)) {
      throw ConfigError(field, "must lie in [0, 1), got " + std::to_string(r));
    }
  };
  check_ratio("ratio", tome.ratio);
  if (tome.ratio_start.has_value() != tome.ratio_end.has_value()) {
    throw ConfigError(tome.ratio_start ? "ratio_end" : "ratio_start",
                      "ratio_start and ratio_end must be given together");
  }
  if (tome.ratio_start) check_ratio("ratio_start", *tome.ratio_start);
  if (tome.ratio_end) check_ratio("ratio_end", *tome.ratio_end);
  if (tome.min_tokens && *tome.min_tokens < 1) throw ConfigError("min_tokens", "must be >= 1");
  try {
    validate(tome.partition);
  } catch (const PartitionError& e) {
    throw ConfigError("partition", e.what());
  }
}

BlockConfig block_config(const ToMeConfig& tome, const UNetSpec& spec) {
  BlockConfig cfg;
  cfg.apply_self = tome.apply_self;
  cfg.apply_cross = tome.apply_cross;
  cfg.apply_mlp = tome.apply_mlp;
  cfg.min_tokens = tome.min_tokens.value_or(spec.top_tokens());
  return cfg;
}

}  // namespace tome
