#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "baoc/config_space.hpp"
#include "baoc/risk.hpp"

namespace baoc {

struct StructuralUnit {
  std::int64_t id = 0;
  std::string name;
  BlockShape shape;
  std::string module_kind = "other";
  std::int64_t layer_index = 0;
  std::int64_t position = 0;
};

enum class TauPolicy { upper_quartile, fixed };

struct PartitionParams {
  double alpha = 0.01;
  TauPolicy tau_policy = TauPolicy::upper_quartile;
  double tau_value = 0.0;  ///< used with TauPolicy::fixed
  std::array<double, 4> weights{1.0, 1.0, 1.0, 1.0};

  void validate() const;
};

using MetricVector = std::array<double, 4>;

/// (s_A, s_M, min(C~, 1), s_F).
MetricVector partition_metrics(const RiskSignals& signals);

/// max_k w_k |a_k - b_k|.
double pairwise_difference(const MetricVector& a, const MetricVector& b, const std::array<double, 4>& weights);

struct PartitionResult {
  double n_min = 0.0;
  double tau = 0.0;
  std::vector<std::vector<std::int64_t>> blocks;  ///< unit ids, in unit order
};

/// Units are ordered by (layer, position); signals are matched to units by index.
/// Blocks are contiguous in that order and, unless a single block is returned, each
/// holds at least n_min = alpha * total_params parameters.
PartitionResult partition(const std::vector<StructuralUnit>& units, const std::vector<RiskSignals>& signals,
                          const PartitionParams& params, std::int64_t total_params);

}  // namespace baoc
