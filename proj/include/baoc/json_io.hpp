#pragma once

#include <json.hpp>

#include "baoc/allocator.hpp"
#include "baoc/config_space.hpp"
#include "baoc/diagnostics.hpp"
#include "baoc/partitioner.hpp"
#include "baoc/risk.hpp"
#include "baoc/simulator.hpp"
#include "baoc/trace.hpp"

namespace baoc {

using Json = nlohmann::json;

void to_json(Json& j, const Configuration& c);
void from_json(const Json& j, Configuration& c);

void to_json(Json& j, const BlockSpec& b);
void from_json(const Json& j, BlockSpec& b);
void to_json(Json& j, const TraceHeader& h);
void from_json(const Json& j, TraceHeader& h);
void to_json(Json& j, const StepRecord& r);
void from_json(const Json& j, StepRecord& r);

Json cost_model_to_json(const CostModel& model);
CostModel cost_model_from_json(const Json& j);

/// {"block_id", "A", "rho_bar", "snr", "C", "F", "Q": {"32","16","8"}, "steps"}
Json metrics_to_json(std::int64_t block_id, const RawMetrics& m);
RawMetrics metrics_from_json(const Json& j);

/// Loads {"anchors": {...}, "weights": {...}, "lambda_pref", "prefer": [...], "gamma"}
/// into the given structures; absent keys keep their current values.
void apply_risk_config(const Json& j, Anchors& anchors, RiskWeights& weights, double* gamma);

Json problem_to_json(const AllocationProblem& problem);
AllocationProblem problem_from_json(const Json& j);

/// Plan document for an allocation result.
Json plan_to_json(const AllocationProblem& problem, const AllocationSolution& solution);

/// Block assignments as listed in a plan document (duplicates preserved).
struct PlanEntries {
  std::vector<std::pair<std::int64_t, Configuration>> assignment;
  std::optional<double> objective;
  std::optional<std::uint64_t> total_mem;
};
PlanEntries plan_entries_from_json(const Json& j);

Json verify_report_to_json(const VerifyReport& report);

/// Model description: {"units": [{"id","name","dims","kind","layer","position"}]}
std::vector<StructuralUnit> units_from_json(const Json& j);
Json partition_to_json(const PartitionResult& result, const std::vector<StructuralUnit>& units);

/// Simulation profile file: {"sampling_ratio", "seed", "blocks": [{"id","name","dims","kind",
/// "drift_strength","drift_persistence","noise_scale_spread","rank1_mix"}]}
struct SimulationSetup {
  TraceHeader header;
  std::vector<StreamProfile> profiles;
};
SimulationSetup simulation_from_json(const Json& j, std::optional<std::uint64_t> seed_override);

/// Reads a whole JSON file; throws InputError naming the path.
Json load_json_file(const std::string& path);

}  // namespace baoc
