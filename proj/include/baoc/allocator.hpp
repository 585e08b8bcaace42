#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "baoc/common.hpp"
#include "baoc/config_space.hpp"
#include "baoc/diagnostics.hpp"
#include "baoc/risk.hpp"
#include "baoc/trace.hpp"

namespace baoc {

inline constexpr std::uint64_t kUnlimitedMemory = std::numeric_limits<std::uint64_t>::max();
inline constexpr double kUnlimitedTime = std::numeric_limits<double>::infinity();
/// Slack on the mean-time-ratio budget.
inline constexpr double kTimeSlack = 1e-12;
/// Objective comparison slack used for ties.
inline constexpr double kObjectiveSlack = 1e-9;

struct Candidate {
  Configuration config;
  double phi = 0.0;
  std::uint64_t mem_bytes = 0;
  double time_ratio = 1.0;
};

struct ProblemBlock {
  std::int64_t id = 0;
  std::string name;
  BlockShape shape;
  std::vector<Candidate> candidates;
  std::vector<Configuration> excluded;  ///< hard exclusions; never selectable
};

/// One-of-many assignment under a byte budget and a mean-time-ratio budget.
/// Blocks are searched and tie-broken in vector order.
struct AllocationProblem {
  std::vector<ProblemBlock> blocks;
  std::uint64_t mem_budget = kUnlimitedMemory;
  double time_budget = kUnlimitedTime;

  /// Throws InputError when a block has no selectable candidate or values are invalid.
  void validate() const;
};

enum class SolveStatus { optimal, infeasible };
enum class Infeasibility { none, memory, time, joint };

std::string to_string(SolveStatus s);
std::string to_string(Infeasibility r);

struct AllocationSolution {
  SolveStatus status = SolveStatus::infeasible;
  Infeasibility reason = Infeasibility::none;
  std::vector<std::size_t> choice;  ///< candidate index per block, in block order
  double objective = 0.0;
  std::uint64_t total_mem = 0;
  double mean_time_ratio = 0.0;
  double bound_gap = 0.0;
  std::uint64_t nodes_explored = 0;
  std::uint64_t min_feasible_mem = 0;  ///< sum over blocks of the cheapest selectable candidate

  /// block id -> selected configuration (empty when infeasible).
  std::map<std::int64_t, Configuration> assignment(const AllocationProblem& problem) const;
};

struct BuildOptions {
  double budget_ratio = 0.5;
  double time_budget = 1.3;
  double gamma = 0.1;
  CandidatePolicy policy;
  std::vector<ConfigSelector> exclusions;
};

/// Sum of AdamW16 state bytes over the blocks.
std::uint64_t adamw16_total_bytes(const std::vector<BlockSpec>& blocks);

/// Candidates, risks, bytes and time ratios per block; memory budget is
/// floor(budget_ratio * AdamW16 total). Blocks are ordered by id.
AllocationProblem build_problem(const std::vector<BlockSpec>& blocks, const std::vector<RiskSignals>& signals,
                                const RiskWeights& weights, const CostModel& cost, const BuildOptions& options);
AllocationProblem build_problem(const std::vector<BlockSpec>& blocks, const std::vector<RawMetrics>& metrics,
                                const Anchors& anchors, const RiskWeights& weights, const CostModel& cost,
                                const BuildOptions& options);

/// Largest number of leaves solve_bruteforce accepts.
inline constexpr double kBruteforceLimit = 2e9;

/// Exhaustive enumeration. Among assignments within kObjectiveSlack of the minimum,
/// returns the lexicographically smallest choice vector.
AllocationSolution solve_bruteforce(const AllocationProblem& problem, Exec exec = Exec::parallel);

/// Branch-and-bound with a Lagrangian lower bound and a greedy-repair incumbent.
/// Same optimum and tie-break as solve_bruteforce.
AllocationSolution solve_exact(const AllocationProblem& problem);

/// Greedy repair heuristic: per-block argmin, then cheapest risk-per-unit swaps until
/// feasible. Returns nullopt when it gets stuck.
std::optional<std::vector<std::size_t>> greedy_repair(const AllocationProblem& problem);

/// max over lambda >= 0 of the Lagrangian dual, by projected subgradient ascent.
struct LagrangianBound {
  double value = -std::numeric_limits<double>::infinity();
  double lambda_mem = 0.0;   ///< per normalized memory unit
  double lambda_time = 0.0;  ///< per normalized time unit
};
LagrangianBound lagrangian_bound(const AllocationProblem& problem, int iterations = 200);

struct VerifyReport {
  bool ok = true;
  std::uint64_t total_mem = 0;
  double mean_time_ratio = 0.0;
  double objective = 0.0;
  std::optional<std::uint64_t> mem_overshoot;
  std::optional<double> time_overshoot;
  std::vector<std::int64_t> missing_blocks;
  std::vector<std::int64_t> duplicate_blocks;
  std::vector<std::int64_t> unknown_blocks;
  std::vector<std::int64_t> excluded_blocks;       ///< selected a hard-excluded configuration
  std::vector<std::int64_t> not_candidate_blocks;  ///< selected a configuration not offered
  std::optional<double> objective_mismatch;        ///< claimed - recomputed
  std::optional<std::int64_t> total_mem_mismatch;  ///< claimed - recomputed
  std::vector<std::string> messages;
};

/// Recomputes totals from scratch and flags every violation.
VerifyReport verify(const AllocationProblem& problem,
                    const std::vector<std::pair<std::int64_t, Configuration>>& assignment,
                    std::optional<double> claimed_objective = std::nullopt,
                    std::optional<std::uint64_t> claimed_total_mem = std::nullopt);
VerifyReport verify(const AllocationProblem& problem, const AllocationSolution& solution);

}  // namespace baoc
