#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "baoc/common.hpp"
#include "baoc/config_space.hpp"

namespace baoc {

struct StepHyper {
  float lr = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
  float weight_decay = 0.01f;
};

/// Bit-trick float -> binary16 conversion used by 16-bit state storage.
std::uint16_t fast_float_to_half(float f);

/// One persistent state tensor stored at 32, 16 or 8 bits. 8-bit storage uses
/// blockwise absmax scaling over kChunk elements; the scales are bookkeeping and are
/// not counted in payload_bytes().
class StateTensor {
 public:
  static constexpr std::size_t kChunk = 256;

  StateTensor() = default;
  StateTensor(std::size_t size, int bits);

  std::size_t size() const { return size_; }
  int bits() const { return bits_; }
  std::uint64_t payload_bytes() const { return static_cast<std::uint64_t>(size_) * bits_ / 8; }

  /// Decodes elements [begin, begin+out.size()) into out.
  void load(std::size_t begin, std::span<float> out) const;
  /// Encodes a chunk-aligned range. 8-bit ranges must start on a chunk boundary.
  void store(std::size_t begin, std::span<const float> in);

 private:
  std::size_t size_ = 0;
  int bits_ = 32;
  std::vector<float> f32_;
  std::vector<std::uint16_t> f16_;
  std::vector<std::int8_t> q8_;
  std::vector<float> scales_;
};

/// Single-block optimizer step for any grid configuration. Used to time update cost;
/// the parallel path splits work over state chunks and matches the serial reference
/// bit for bit.
class BlockOptimizer {
 public:
  BlockOptimizer(const Configuration& config, const BlockShape& shape, StepHyper hyper = {});

  void step(std::span<float> params, std::span<const float> grads, Exec exec = Exec::parallel);

  /// Sum of state payload bytes actually allocated.
  std::uint64_t state_payload_bytes() const;
  const Configuration& config() const { return config_; }

 private:
  void step_elementwise(std::span<float> params, std::span<const float> grads, Exec exec);
  void step_factorized(std::span<float> params, std::span<const float> grads, Exec exec);

  Configuration config_;
  BlockShape shape_;
  StepHyper hyper_;
  StateTensor momentum_;
  StateTensor second_;
  StateTensor row_;
  StateTensor col_;
};

/// Median one-step time of `config` divided by the median one-step time of AdamW16,
/// both measured on a synthetic tensor of `shape`. AdamW16 maps to exactly 1.0.
double measure_update_ratio(const Configuration& config, const BlockShape& shape, int repetitions,
                            std::uint64_t seed = 0);

/// Measures every configuration in `candidates` (plus AdamW16) and returns a
/// CostModel with source=measured.
CostModel measure_cost_model(const BlockShape& shape, const std::vector<Configuration>& candidates, int repetitions,
                             std::uint64_t seed = 0);

}  // namespace baoc
