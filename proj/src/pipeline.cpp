#include "baoc/pipeline.hpp"

#include <cmath>
#include <sstream>

namespace baoc {

void RunConfig::validate() const {
  if (!(budget_ratio > 0.0)) throw InputError("budget ratio must be positive");
  if (!(time_budget > 0.0)) throw InputError("time budget must be positive");
  if (!(gamma >= 0.0)) throw InputError("gamma must be non-negative");
  if (warmup_steps && *warmup_steps < 2) throw InputError("warmup steps must be at least 2");
  anchors.validate();
  weights.validate();
}

namespace {

void require_records(std::int64_t n) {
  if (n == 0) throw InputError("trace has no step records");
  if (n < 2) throw InputError("trace needs at least 2 step records for direction stability");
}

}  // namespace

MetricsRun collect_metrics(TraceReader& reader, const DiagnosticsParams& params, std::optional<std::int64_t> limit,
                           Exec exec, std::int64_t snapshot_every, const SnapshotHook& hook) {
  MetricsRun run;
  run.header = reader.header();
  DiagnosticsBank bank(run.header.blocks, params);
  while (!limit || run.records < *limit) {
    auto rec = reader.next();
    if (!rec) break;
    bank.ingest(*rec, exec);
    ++run.records;
    if (hook && snapshot_every > 0 && run.records % snapshot_every == 0) hook(run.records, bank.snapshot_all(exec));
  }
  require_records(run.records);
  run.metrics = bank.snapshot_all(exec);
  return run;
}

MetricsRun collect_metrics(const Trace& trace, const DiagnosticsParams& params, std::optional<std::int64_t> limit,
                           Exec exec) {
  MetricsRun run;
  run.header = trace.header;
  DiagnosticsBank bank(run.header.blocks, params);
  for (const auto& rec : trace.records) {
    if (limit && run.records >= *limit) break;
    bank.ingest(rec, exec);
    ++run.records;
  }
  require_records(run.records);
  run.metrics = bank.snapshot_all(exec);
  return run;
}

AllocationRun allocate_from_metrics(const RunConfig& config, MetricsRun metrics) {
  config.validate();
  AllocationRun run;
  run.metrics = std::move(metrics);
  BuildOptions opts;
  opts.budget_ratio = config.budget_ratio;
  opts.time_budget = config.time_budget;
  opts.gamma = config.gamma;
  opts.policy = config.policy;
  opts.exclusions = config.exclusions;
  const CostModel cost = config.cost_model.value_or(CostModel::static_default());
  run.problem =
      build_problem(run.metrics.header.blocks, run.metrics.metrics, config.anchors, config.weights, cost, opts);
  run.solution = solve_exact(run.problem);
  return run;
}

AllocationRun run_allocation(const RunConfig& config, TraceReader& reader) {
  config.validate();
  return allocate_from_metrics(config, collect_metrics(reader, config.diagnostics, config.warmup_steps, config.exec));
}

AllocationRun run_allocation(const RunConfig& config, const Trace& trace) {
  config.validate();
  return allocate_from_metrics(config, collect_metrics(trace, config.diagnostics, config.warmup_steps, config.exec));
}

std::string infeasible_message(const AllocationRun& run) {
  const auto& sol = run.solution;
  const auto total = adamw16_total_bytes(run.metrics.header.blocks);
  std::ostringstream os;
  os << "infeasible (" << to_string(sol.reason) << "): ";
  if (sol.reason == Infeasibility::time) {
    os << "no assignment meets mean time ratio " << run.problem.time_budget;
  } else {
    os << "memory budget " << run.problem.mem_budget << " bytes; minimum feasible budget is " << sol.min_feasible_mem
       << " bytes";
    if (total > 0) {
      os << " (budget ratio >= " << static_cast<double>(sol.min_feasible_mem) / static_cast<double>(total) << ")";
    }
    if (sol.reason == Infeasibility::joint) os << " before the time budget is applied";
  }
  return os.str();
}

}  // namespace baoc
