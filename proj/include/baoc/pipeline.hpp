#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "baoc/allocator.hpp"
#include "baoc/config_space.hpp"
#include "baoc/diagnostics.hpp"
#include "baoc/risk.hpp"
#include "baoc/trace.hpp"

namespace baoc {

struct RunConfig {
  double budget_ratio = 0.5;
  double time_budget = 1.3;
  double gamma = 0.1;
  Anchors anchors;
  RiskWeights weights;
  CandidatePolicy policy;
  std::vector<ConfigSelector> exclusions;
  std::optional<CostModel> cost_model;        ///< static table when absent
  std::optional<std::int64_t> warmup_steps;   ///< records consumed; whole trace when absent
  DiagnosticsParams diagnostics;
  Exec exec = Exec::parallel;

  void validate() const;
};

/// Called with (records consumed so far, per-block metrics) for mid-trace snapshots.
using SnapshotHook = std::function<void(std::int64_t, const std::vector<RawMetrics>&)>;

struct MetricsRun {
  TraceHeader header;
  std::vector<RawMetrics> metrics;  ///< aligned with header.blocks
  std::int64_t records = 0;
};

/// Streams records through the diagnostics bank and snapshots at the end. Needs at
/// least two records; `limit` caps how many are read.
MetricsRun collect_metrics(TraceReader& reader, const DiagnosticsParams& params, std::optional<std::int64_t> limit,
                           Exec exec = Exec::parallel, std::int64_t snapshot_every = 0, const SnapshotHook& hook = {});
MetricsRun collect_metrics(const Trace& trace, const DiagnosticsParams& params, std::optional<std::int64_t> limit,
                           Exec exec = Exec::parallel);

struct AllocationRun {
  MetricsRun metrics;
  AllocationProblem problem;
  AllocationSolution solution;
};

AllocationRun allocate_from_metrics(const RunConfig& config, MetricsRun metrics);
AllocationRun run_allocation(const RunConfig& config, TraceReader& reader);
AllocationRun run_allocation(const RunConfig& config, const Trace& trace);

/// One-line explanation of an infeasible result, including the smallest memory
/// budget (bytes and budget ratio) any assignment could meet.
std::string infeasible_message(const AllocationRun& run);

}  // namespace baoc
