#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tome/harness.hpp"

namespace tome {

struct BlockSummary {
  std::size_t layer = 0;
  std::size_t scale = 0;
  std::size_t tokens = 0;
  std::size_t eligible_steps = 0;
  std::size_t merged_token_evaluations = 0;
  FlopTerms baseline[kComponentCount];
  FlopTerms merged[kComponentCount];
  std::uint64_t matching = 0;
};

/// Aggregated, immutable description of one denoising run. FLOPs and token
/// counts are per batch element, summed over steps.
struct RunReport {
  std::string run_id;
  std::string config_digest;
  /// Resolved configuration, in a fixed key order.
  std::vector<std::pair<std::string, std::string>> config;

  std::size_t steps = 0;
  std::size_t batch = 1;
  std::vector<double> ratios;                           ///< per step
  std::vector<std::vector<std::size_t>> tokens_before;  ///< [step][layer]
  std::vector<std::vector<std::size_t>> tokens_after;   ///< [step][layer]
  std::vector<BlockSummary> blocks;

  std::uint64_t baseline_flops = 0;
  std::uint64_t merged_flops = 0;  ///< includes matching
  std::uint64_t matching_flops = 0;
  /// Matmul FLOPs counted by the kernels inside blocks, summed over the batch.
  std::uint64_t measured_block_flops = 0;
  std::uint64_t baseline_peak_elements = 0;
  std::uint64_t merged_peak_elements = 0;

  std::size_t similarity_passes = 0;
  std::size_t eligible_block_steps = 0;
  std::size_t merged_token_evaluations = 0;
  bool masks_identical = true;

  /// Hardware dependent; never part of the JSON report.
  std::vector<double> wall_ms;
  double wall_ms_total = 0.0;

  std::optional<ErrorMetrics> error;

  const std::string* config_value(const std::string& key) const;
};

/// Folds the step records of one run into a report. Throws AggregationError
/// for empty input, records from different runs, or out-of-order steps.
RunReport aggregate(const std::vector<StepRecord>& records);

/// baseline FLOPs / merged FLOPs (1.0 when nothing is merged).
double speedup_estimate(const RunReport& report) noexcept;

/// 64-bit FNV-1a over `text`, as 16 lowercase hex digits.
std::string digest_hex(const std::string& text);

/// JSON report with stable key order. Wall times are excluded so identical
/// runs serialize byte-identically.
std::string to_json(const RunReport& report);

/// Flat CSV for sweep tables: one header, one row per report.
std::string csv_header();
std::string csv_row(const RunReport& report);

/// step,wall_ms rows.
std::string timing_csv(const RunReport& report);

}  // namespace tome
