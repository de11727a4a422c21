#include "tome/metrics.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "tome/errors.hpp"

namespace tome {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json terms_json(const FlopTerms& t) {
  ordered_json j;
  j["pairwise"] = t.pairwise;
  j["linear"] = t.linear;
  j["constant"] = t.constant;
  j["total"] = t.total();
  return j;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

const std::string* RunReport::config_value(const std::string& key) const {
  for (const auto& [k, v] : config)
    if (k == key) return &v;
  return nullptr;
}

RunReport aggregate(const std::vector<StepRecord>& records) {
  if (records.empty()) throw AggregationError("no step records to aggregate");
  RunReport r;
  r.run_id = records.front().run_id;
  r.batch = records.front().batch;
  r.steps = records.size();
  const std::size_t layers = records.front().flops.size();
  r.blocks.resize(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    r.blocks[l].layer = records.front().flops[l].layer;
    r.blocks[l].scale = records.front().flops[l].scale;
    r.blocks[l].tokens = records.front().flops[l].tokens;
  }

  for (std::size_t i = 0; i < records.size(); ++i) {
    const StepRecord& rec = records[i];
    if (rec.run_id != r.run_id) {
      throw AggregationError("records from runs '" + r.run_id + "' and '" + rec.run_id +
                             "' cannot be aggregated together");
    }
    if (rec.step != i) throw AggregationError("step records out of order or missing");
    if (rec.flops.size() != layers || rec.blocks.size() != layers) {
      throw AggregationError("step " + std::to_string(i) + " has a different block count");
    }
    r.ratios.push_back(rec.ratio);
    r.wall_ms.push_back(rec.wall_ms);
    r.wall_ms_total += rec.wall_ms;

    std::vector<std::size_t> before, after;
    for (std::size_t l = 0; l < layers; ++l) {
      const BlockRecord& br = rec.blocks[l];
      const BlockFlops& bf = rec.flops[l];
      before.push_back(br.tokens_before);
      after.push_back(br.tokens_after);
      BlockSummary& s = r.blocks[l];
      if (br.eligible) {
        ++s.eligible_steps;
        s.merged_token_evaluations += br.tokens_after;
        ++r.eligible_block_steps;
        r.merged_token_evaluations += br.tokens_after;
      }
      for (std::size_t c = 0; c < kComponentCount; ++c) {
        s.baseline[c] += bf.components[c].baseline;
        s.merged[c] += bf.components[c].merged;
        r.measured_block_flops += br.measured_flops[c];
      }
      s.matching += bf.matching;
      r.similarity_passes += br.similarity_passes;
      r.masks_identical = r.masks_identical && br.masks_identical;
      r.baseline_flops += bf.baseline_total();
      r.merged_flops += bf.merged_total();
      r.matching_flops += bf.matching;
      r.baseline_peak_elements = std::max(r.baseline_peak_elements, bf.baseline_peak_elements);
      r.merged_peak_elements = std::max(r.merged_peak_elements, bf.merged_peak_elements);
    }
    r.tokens_before.push_back(std::move(before));
    r.tokens_after.push_back(std::move(after));
  }
  return r;
}

double speedup_estimate(const RunReport& report) noexcept {
  if (report.merged_flops == 0) return 1.0;
  return static_cast<double>(report.baseline_flops) / static_cast<double>(report.merged_flops);
}

std::string digest_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string to_json(const RunReport& r) {
  ordered_json j;
  j["schema"] = "tome-bench-report/1";
  j["run_id"] = r.run_id;
  j["config_digest"] = r.config_digest;
  ordered_json cfg = ordered_json::object();
  for (const auto& [k, v] : r.config) cfg[k] = v;
  j["config"] = cfg;
  j["steps"] = r.steps;
  j["batch"] = r.batch;

  ordered_json flops;
  flops["baseline_total"] = r.baseline_flops;
  flops["merged_total"] = r.merged_flops;
  flops["matching_total"] = r.matching_flops;
  flops["measured_block_total"] = r.measured_block_flops;
  flops["speedup_estimate"] = speedup_estimate(r);
  j["flops"] = flops;

  ordered_json mem;
  mem["baseline_peak_elements"] = r.baseline_peak_elements;
  mem["merged_peak_elements"] = r.merged_peak_elements;
  mem["reduction"] = r.merged_peak_elements
                         ? static_cast<double>(r.baseline_peak_elements) /
                               static_cast<double>(r.merged_peak_elements)
                         : 1.0;
  j["memory_proxy"] = mem;

  ordered_json ledger;
  ledger["eligible_block_steps"] = r.eligible_block_steps;
  ledger["similarity_passes"] = r.similarity_passes;
  ledger["merged_token_evaluations"] = r.merged_token_evaluations;
  ledger["masks_identical_across_batch"] = r.masks_identical;
  j["ledger"] = ledger;

  ordered_json blocks = ordered_json::array();
  for (const auto& b : r.blocks) {
    ordered_json jb;
    jb["layer"] = b.layer;
    jb["scale"] = b.scale;
    jb["tokens"] = b.tokens;
    jb["eligible_steps"] = b.eligible_steps;
    jb["merged_token_evaluations"] = b.merged_token_evaluations;
    for (std::size_t c = 0; c < kComponentCount; ++c) {
      ordered_json jc;
      jc["baseline"] = terms_json(b.baseline[c]);
      jc["merged"] = terms_json(b.merged[c]);
      jb[component_name(static_cast<Component>(c))] = jc;
    }
    jb["matching"] = b.matching;
    blocks.push_back(jb);
  }
  j["blocks"] = blocks;

  ordered_json steps = ordered_json::array();
  for (std::size_t s = 0; s < r.steps; ++s) {
    ordered_json js;
    js["step"] = s;
    js["ratio"] = r.ratios[s];
    js["tokens_before"] = r.tokens_before[s];
    js["tokens_after"] = r.tokens_after[s];
    steps.push_back(js);
  }
  j["per_step"] = steps;

  if (r.error) {
    ordered_json e;
    e["relative_l2"] = r.error->relative_l2;
    e["max_abs"] = r.error->max_abs;
    e["mean_shift"] = r.error->mean_shift;
    j["error_vs_baseline"] = e;
  } else {
    j["error_vs_baseline"] = nullptr;
  }
  return j.dump(2) + "\n";
}

std::string csv_header() {
  return "run_id,config_digest,ratio,ratio_start,ratio_end,partition,batch_fix,apply,"
         "min_tokens,prune,steps,seed,baseline_flops,merged_flops,speedup_estimate,"
         "baseline_peak_elements,merged_peak_elements,similarity_passes,"
         "merged_token_evaluations,relative_l2,max_abs\n";
}

std::string csv_row(const RunReport& r) {
  auto cfg = [&](const char* key) {
    const std::string* v = r.config_value(key);
    return csv_escape(v ? *v : "");
  };
  std::ostringstream os;
  os << csv_escape(r.run_id) << ',' << r.config_digest << ',' << cfg("ratio") << ','
     << cfg("ratio_start") << ',' << cfg("ratio_end") << ',' << cfg("partition") << ','
     << cfg("batch_fix") << ',' << cfg("apply") << ',' << cfg("min_tokens") << ','
     << cfg("prune") << ',' << r.steps << ',' << cfg("seed") << ',' << r.baseline_flops << ','
     << r.merged_flops << ',' << fmt_double(speedup_estimate(r)) << ','
     << r.baseline_peak_elements << ',' << r.merged_peak_elements << ','
     << r.similarity_passes << ',' << r.merged_token_evaluations << ','
     << (r.error ? fmt_double(r.error->relative_l2) : "") << ','
     << (r.error ? fmt_double(r.error->max_abs) : "") << '\n';
  return os.str();
}

std::string timing_csv(const RunReport& r) {
  std::ostringstream os;
  os << "step,wall_ms\n";
  for (std::size_t s = 0; s < r.wall_ms.size(); ++s) os << s << ',' << fmt_double(r.wall_ms[s]) << '\n';
  return os.str();
}

}  // namespace tome
