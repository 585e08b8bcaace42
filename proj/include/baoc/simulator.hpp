#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "baoc/common.hpp"
#include "baoc/trace.hpp"

namespace baoc {

struct StreamProfile {
  double drift_strength = 0.0;      ///< per-coordinate RMS of the drift term
  double drift_persistence = 0.0;   ///< 1 keeps the drift direction fixed
  double noise_scale_spread = 0.0;  ///< log-width of the per-coordinate noise scale
  double rank1_mix = 0.0;           ///< share of the noise variance from a row x column pattern
  std::uint64_t seed = 0;

  void validate() const;
};

/// Spec for a simulated block with coordinates sampled at `ratio`, keyed by (seed, id).
BlockSpec make_block_spec(std::int64_t id, const std::string& name, std::vector<std::int64_t> dims, double ratio,
                          std::uint64_t seed, const std::string& kind = "other");

/// Synthetic gradient/parameter samples for `steps` steps, one profile per header
/// block. Output depends only on the inputs; the parallel path generates blocks
/// concurrently and is bit-identical to the serial one.
Trace generate_stream(const TraceHeader& header, const std::vector<StreamProfile>& profiles, std::int64_t steps,
                      Exec exec = Exec::parallel);

}  // namespace baoc
