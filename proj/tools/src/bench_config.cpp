#include "tome_cli/bench_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tome/errors.hpp"
#include "tome/metrics.hpp"

namespace tome::cli {

namespace {

std::string normalize_key(std::string_view key) {
  std::string k(key);
  for (char& c : k)
    if (c == '_') c = '-';
  return k;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_real(const std::string& field, std::string_view v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError(field, "expected a number, got '" + std::string(v) + "'");
  }
  return out;
}

std::uint64_t parse_count(const std::string& field, std::string_view v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    throw ConfigError(field, "expected a non-negative integer, got '" + std::string(v) + "'");
  }
  return out;
}

bool parse_bool(const std::string& field, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(field, "expected true or false, got '" + std::string(v) + "'");
}

std::string apply_text(const ToMeConfig& t) {
  std::string s;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!s.empty()) s += ',';
    s += name;
  };
  add(t.apply_self, "self");
  add(t.apply_cross, "cross");
  add(t.apply_mlp, "mlp");
  return s;
}

}  // namespace

std::string format_real(double v) {
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return ec == std::errc{} ? std::string(buf, p) : std::to_string(v);
}

void apply_setting(BenchConfig& cfg, std::string_view raw_key, std::string_view raw_value) {
  const std::string key = normalize_key(trim(raw_key));
  const std::string_view value = trim(raw_value);
  ToMeConfig& t = cfg.tome;

  if (key == "ratio") {
    t.ratio = parse_real(key, value);
  } else if (key == "ratio-start" || key == "ratio-end") {
    auto& slot = key == "ratio-start" ? t.ratio_start : t.ratio_end;
    if (value.empty()) {
      slot.reset();
    } else {
      slot = parse_real(key, value);
    }
  } else if (key == "partition") {
    const bool fix = t.partition.batch_fix;
    try {
      t.partition = parse_partition(value);
    } catch (const PartitionError& e) {
      throw ConfigError(key, e.what());
    }
    t.partition.batch_fix = fix;
  } else if (key == "batch-fix") {
    t.partition.batch_fix = parse_bool(key, value);
  } else if (key == "apply") {
    t.apply_self = t.apply_cross = t.apply_mlp = false;
    std::string_view rest = value;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string_view item = trim(rest.substr(0, comma));
      if (item == "self") {
        t.apply_self = true;
      } else if (item == "cross") {
        t.apply_cross = true;
      } else if (item == "mlp") {
        t.apply_mlp = true;
      } else {
        throw ConfigError(key, "unknown component '" + std::string(item) +
                                   "' (expected self, cross or mlp)");
      }
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
    if (!t.any_component()) throw ConfigError(key, "name at least one component");
  } else if (key == "min-tokens") {
    if (value.empty() || value == "top") {
      t.min_tokens.reset();
    } else {
      t.min_tokens = parse_count(key, value);
    }
  } else if (key == "prune") {
    t.prune = parse_bool(key, value);
  } else if (key == "share-edges") {
    t.share_edges = parse_bool(key, value);
  } else if (key == "steps") {
    cfg.steps = parse_count(key, value);
  } else if (key == "seed") {
    cfg.seed = parse_count(key, value);
  } else if (key == "seeds") {
    cfg.seeds = parse_count(key, value);
  } else if (key == "latent") {
    const auto x = value.find('x');
    if (x == std::string_view::npos) throw ConfigError(key, "expected HxW, got '" + std::string(value) + "'");
    cfg.latent_height = parse_count(key, value.substr(0, x));
    cfg.latent_width = parse_count(key, value.substr(x + 1));
  } else if (key == "scales") {
    cfg.scales = parse_count(key, value);
  } else if (key == "blocks") {
    cfg.blocks_per_scale = parse_count(key, value);
  } else if (key == "channels") {
    cfg.channels = parse_count(key, value);
  } else if (key == "heads") {
    cfg.heads = parse_count(key, value);
  } else if (key == "weight-seed") {
    cfg.weight_seed = parse_count(key, value);
  } else if (key == "guidance") {
    cfg.guidance = parse_real(key, value);
  } else if (key == "compare-baseline") {
    cfg.compare_baseline = parse_bool(key, value);
  } else if (key == "out") {
    if (value.empty()) throw ConfigError(key, "output directory must not be empty");
    cfg.out = std::string(value);
  } else if (key == "format") {
    if (value == "json") {
      cfg.format = OutputFormat::Json;
    } else if (value == "csv") {
      cfg.format = OutputFormat::Csv;
    } else {
      throw ConfigError(key, "expected json or csv, got '" + std::string(value) + "'");
    }
  } else if (key == "viz-partition") {
    cfg.viz_partition = parse_bool(key, value);
  } else {
    throw ConfigError(key.empty() ? "config" : key, "unknown setting");
  }
}

std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config", "line " + std::to_string(line_no) + ": expected key = value");
    }
    out.emplace_back(std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))));
  }
  return out;
}

void load_config_file(BenchConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  for (const auto& [k, v] : parse_config_text(ss.str())) apply_setting(cfg, k, v);
}

void validate(const BenchConfig& cfg) {
  validate(cfg.tome);
  if (cfg.steps < 1) throw ConfigError("steps", "must be >= 1");
  if (cfg.seeds < 1) throw ConfigError("seeds", "must be >= 1");
  if (cfg.scales < 1) throw ConfigError("scales", "must be >= 1");
  if (cfg.blocks_per_scale < 1) throw ConfigError("blocks", "must be >= 1");
  const std::size_t div = std::size_t{1} << (cfg.scales - 1);
  if (cfg.latent_height < div || cfg.latent_width < div || cfg.latent_height % div != 0 ||
      cfg.latent_width % div != 0) {
    throw ConfigError("latent", "height and width must be positive multiples of " +
                                    std::to_string(div) + " for " + std::to_string(cfg.scales) +
                                    " scales");
  }
  if (!std::isfinite(cfg.guidance)) throw ConfigError("guidance", "must be finite");
  validate(unet_spec(cfg));
}

UNetSpec unet_spec(const BenchConfig& cfg) {
  UNetSpec s;
  s.scales.clear();
  for (std::size_t i = 0; i < cfg.scales; ++i) {
    s.scales.push_back({cfg.latent_height >> i, cfg.latent_width >> i, cfg.blocks_per_scale});
  }
  s.channels = cfg.channels;
  s.heads = cfg.heads;
  s.weight_seed = cfg.weight_seed;
  return s;
}

std::vector<std::pair<std::string, std::string>> resolved_config(const BenchConfig& cfg) {
  const ToMeConfig& t = cfg.tome;
  auto opt = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string(); };
  const auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  const std::size_t min_tokens = t.min_tokens.value_or(cfg.latent_height * cfg.latent_width);
  return {
      {"ratio", format_real(t.ratio)},
      {"ratio_start", opt(t.ratio_start)},
      {"ratio_end", opt(t.ratio_end)},
      {"partition", to_string(t.partition.variant)},
      {"batch_fix", b(t.partition.batch_fix)},
      {"apply", apply_text(t)},
      {"min_tokens", std::to_string(min_tokens)},
      {"prune", b(t.prune)},
      {"share_edges", b(t.share_edges)},
      {"steps", std::to_string(cfg.steps)},
      {"seed", std::to_string(cfg.seed)},
      {"seeds", std::to_string(cfg.seeds)},
      {"latent", std::to_string(cfg.latent_height) + "x" + std::to_string(cfg.latent_width)},
      {"scales", std::to_string(cfg.scales)},
      {"blocks", std::to_string(cfg.blocks_per_scale)},
      {"channels", std::to_string(cfg.channels)},
      {"heads", std::to_string(cfg.heads)},
      {"weight_seed", std::to_string(cfg.weight_seed)},
      {"guidance", format_real(cfg.guidance)},
      {"compare_baseline", b(cfg.compare_baseline)},
  };
}

std::string config_text(const BenchConfig& cfg) {
  std::string s;
  for (const auto& [k, v] : resolved_config(cfg)) s += k + " = " + v + "\n";
  return s;
}

std::string config_digest(const BenchConfig& cfg) { return digest_hex(config_text(cfg)); }

std::string run_id(const BenchConfig& cfg) { return "tome-" + config_digest(cfg).substr(0, 12); }

std::vector<double> parse_ratio_axis(std::string_view text) {
  std::vector<double> out;
  if (const auto c1 = text.find(':'); c1 != std::string_view::npos) {
    const auto c2 = text.find(':', c1 + 1);
    if (c2 == std::string_view::npos) throw ConfigError("ratio", "expected start:end:step");
    const double start = parse_real("ratio", text.substr(0, c1));
    const double end = parse_real("ratio", text.substr(c1 + 1, c2 - c1 - 1));
    const double step = parse_real("ratio", text.substr(c2 + 1));
    if (!(step > 0.0) || end < start) throw ConfigError("ratio", "range must satisfy start <= end, step > 0");
    const auto count = static_cast<std::size_t>(std::floor((end - start) / step + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i) {
      // Snap to 12 decimals so 0.1 + 2 * 0.1 prints as 0.3.
      out.push_back(std::round((start + static_cast<double>(i) * step) * 1e12) / 1e12);
    }
    return out;
  }
  std::string_view rest = text;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    out.push_back(parse_real("ratio", trim(rest.substr(0, comma))));
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
  }
  if (out.empty()) throw ConfigError("ratio", "no ratios given");
  return out;
}

}  // namespace tome::cli
