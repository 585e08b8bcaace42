#include "baoc/optim_kernels.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstring>

#include "baoc/numeric.hpp"
#include "baoc/rng.hpp"

namespace baoc {

namespace {

// Round-to-nearest-even float -> binary16 using integer rebiasing.
std::uint16_t float_to_half_bits(float f) {
  std::uint32_t x;
  std::memcpy(&x, &f, sizeof x);
  const std::uint32_t sign = x & 0x80000000u;
  x ^= sign;
  std::uint16_t out;
  if (x >= 0x47800000u) {
    out = x > 0x7F800000u ? 0x7E00 : 0x7C00;
  } else if (x < 0x38800000u) {
    float fx;
    std::memcpy(&fx, &x, sizeof fx);
    fx += 0.5f;
    std::uint32_t r;
    std::memcpy(&r, &fx, sizeof r);
    out = static_cast<std::uint16_t>(r - 0x3F000000u);
  } else {
    const std::uint32_t mant_odd = (x >> 13) & 1u;
    x += (static_cast<std::uint32_t>(15 - 127) << 23) + 0xFFFu;
    x += mant_odd;
    out = static_cast<std::uint16_t>(x >> 13);
  }
  return out | static_cast<std::uint16_t>(sign >> 16);
}

const std::array<float, 65536>& half_table() {
  static const auto table = [] {
    std::array<float, 65536> t{};
    for (std::uint32_t i = 0; i < 65536; ++i) t[i] = decode_half(static_cast<std::uint16_t>(i));
    return t;
  }();
  return table;
}

std::size_t chunk_count(std::size_t n) { return (n + StateTensor::kChunk - 1) / StateTensor::kChunk; }

}  // namespace

std::uint16_t fast_float_to_half(float f) { return float_to_half_bits(f); }

StateTensor::StateTensor(std::size_t size, int bits) : size_(size), bits_(bits) {
  switch (bits) {
    case 32: f32_.assign(size, 0.0f); break;
    case 16: f16_.assign(size, 0); break;
    case 8:
      q8_.assign(size, 0);
      scales_.assign(chunk_count(size), 0.0f);
      break;
    default: throw InvalidConfiguration("unsupported state bit-width " + std::to_string(bits));
  }
}

void StateTensor::load(std::size_t begin, std::span<float> out) const {
  switch (bits_) {
    case 32: std::copy_n(f32_.begin() + static_cast<std::ptrdiff_t>(begin), out.size(), out.begin()); break;
    case 16: {
      const auto& table = half_table();
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = table[f16_[begin + i]];
      break;
    }
    default:
      for (std::size_t i = 0; i < out.size(); ++i) {
        const std::size_t j = begin + i;
        out[i] = static_cast<float>(q8_[j]) * (scales_[j / kChunk] / 127.0f);
      }
  }
}

void StateTensor::store(std::size_t begin, std::span<const float> in) {
  switch (bits_) {
    case 32: std::copy(in.begin(), in.end(), f32_.begin() + static_cast<std::ptrdiff_t>(begin)); break;
    case 16:
      for (std::size_t i = 0; i < in.size(); ++i) f16_[begin + i] = float_to_half_bits(in[i]);
      break;
    default:
      for (std::size_t off = 0; off < in.size(); off += kChunk) {
        const std::size_t len = std::min(kChunk, in.size() - off);
        float absmax = 0.0f;
        for (std::size_t i = 0; i < len; ++i) absmax = std::max(absmax, std::fabs(in[off + i]));
        scales_[(begin + off) / kChunk] = absmax;
        const float inv = absmax > 0.0f ? 127.0f / absmax : 0.0f;
        for (std::size_t i = 0; i < len; ++i) {
          q8_[begin + off + i] = static_cast<std::int8_t>(std::nearbyint(in[off + i] * inv));
        }
      }
  }
}

BlockOptimizer::BlockOptimizer(const Configuration& config, const BlockShape& shape, StepHyper hyper)
    : config_(config), shape_(shape), hyper_(hyper) {
  validate(config_);
  const auto n = static_cast<std::size_t>(shape_.param_count());
  if (config_.momentum) momentum_ = StateTensor(n, config_.bits);
  if (config_.adaptive) {
    if (config_.factorized) {
      auto f = shape_.factor_dims();
      row_ = StateTensor(static_cast<std::size_t>(f.batch * f.rows), config_.bits);
      col_ = StateTensor(static_cast<std::size_t>(f.batch * f.cols), config_.bits);
    } else {
      second_ = StateTensor(n, config_.bits);
    }
  }
}

std::uint64_t BlockOptimizer::state_payload_bytes() const {
  return momentum_.payload_bytes() + second_.payload_bytes() + row_.payload_bytes() + col_.payload_bytes();
}

void BlockOptimizer::step(std::span<float> params, std::span<const float> grads, Exec exec) {
  const auto n = static_cast<std::size_t>(shape_.param_count());
  if (params.size() != n || grads.size() != n) throw InputError("optimizer step: tensor size mismatch");
  if (config_.factorized) {
    step_factorized(params, grads, exec);
  } else {
    step_elementwise(params, grads, exec);
  }
}

void BlockOptimizer::step_elementwise(std::span<float> params, std::span<const float> grads, Exec exec) {
  const std::size_t n = params.size();
  const auto chunks = static_cast<std::int64_t>(chunk_count(n));
  const StepHyper h = hyper_;
  const bool momentum = config_.momentum;
  const bool adaptive = config_.adaptive;
  const bool decoupled = config_.decoupled_decay;

  auto body = [&](std::int64_t chunk) {
    std::array<float, StateTensor::kChunk> m{};
    std::array<float, StateTensor::kChunk> v{};
    const std::size_t begin = static_cast<std::size_t>(chunk) * StateTensor::kChunk;
    const std::size_t len = std::min(StateTensor::kChunk, n - begin);
    if (momentum) momentum_.load(begin, std::span(m.data(), len));
    if (adaptive) second_.load(begin, std::span(v.data(), len));
    for (std::size_t i = 0; i < len; ++i) {
      float p = params[begin + i];
      float g = grads[begin + i];
      if (decoupled) {
        p -= h.lr * h.weight_decay * p;
      } else {
        g += h.weight_decay * p;
      }
      float dir = g;
      if (momentum) {
        m[i] = h.beta1 * m[i] + (1.0f - h.beta1) * g;
        dir = m[i];
      }
      if (adaptive) {
        v[i] = h.beta2 * v[i] + (1.0f - h.beta2) * g * g;
        dir /= std::sqrt(v[i]) + h.eps;
      }
      params[begin + i] = p - h.lr * dir;
    }
    if (momentum) momentum_.store(begin, std::span<const float>(m.data(), len));
    if (adaptive) second_.store(begin, std::span<const float>(v.data(), len));
  };

  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t c = 0; c < chunks; ++c) body(c);
  } else {
    for (std::int64_t c = 0; c < chunks; ++c) body(c);
  }
}

void BlockOptimizer::step_factorized(std::span<float> params, std::span<const float> grads, Exec exec) {
  const auto f = shape_.factor_dims();
  const auto rows = static_cast<std::int64_t>(f.batch * f.rows);  // flattened (batch, row)
  const auto cols = f.cols;
  const auto col_slots = static_cast<std::int64_t>(f.batch * f.cols);
  const StepHyper h = hyper_;
  const bool decoupled = config_.decoupled_decay;
  const bool par = exec == Exec::parallel;

  std::vector<float> row_state(static_cast<std::size_t>(rows));
  std::vector<float> col_state(static_cast<std::size_t>(col_slots));
  row_.load(0, row_state);
  col_.load(0, col_state);

  // Effective gradient (with coupled decay folded in) squared, reduced per row / column.
  auto effective = [&](std::size_t i) {
    float g = grads[i];
    if (!decoupled) g += h.weight_decay * params[i];
    return g;
  };

#pragma omp parallel for schedule(static) if (par)
  for (std::int64_t r = 0; r < rows; ++r) {
    float acc = 0.0f;
    const auto base = static_cast<std::size_t>(r * cols);
    for (std::int64_t c = 0; c < cols; ++c) {
      const float g = effective(base + static_cast<std::size_t>(c));
      acc += g * g;
    }
    row_state[static_cast<std::size_t>(r)] =
        h.beta2 * row_state[static_cast<std::size_t>(r)] + (1.0f - h.beta2) * acc / static_cast<float>(cols);
  }

#pragma omp parallel for schedule(static) if (par)
  for (std::int64_t slot = 0; slot < col_slots; ++slot) {
    const std::int64_t b = slot / cols;
    const std::int64_t c = slot % cols;
    float acc = 0.0f;
    for (std::int64_t r = 0; r < f.rows; ++r) {
      const float g = effective(static_cast<std::size_t>((b * f.rows + r) * cols + c));
      acc += g * g;
    }
    col_state[static_cast<std::size_t>(slot)] = h.beta2 * col_state[static_cast<std::size_t>(slot)] +
                                                (1.0f - h.beta2) * acc / static_cast<float>(f.rows);
  }

  std::vector<float> row_mean(static_cast<std::size_t>(f.batch), 0.0f);
  for (std::int64_t b = 0; b < f.batch; ++b) {
    float acc = 0.0f;
    for (std::int64_t r = 0; r < f.rows; ++r) acc += row_state[static_cast<std::size_t>(b * f.rows + r)];
    row_mean[static_cast<std::size_t>(b)] = acc / static_cast<float>(f.rows);
  }

#pragma omp parallel for schedule(static) if (par)
  for (std::int64_t r = 0; r < rows; ++r) {
    const std::int64_t b = r / f.rows;
    const float rm = row_mean[static_cast<std::size_t>(b)];
    const float rv = row_state[static_cast<std::size_t>(r)];
    for (std::int64_t c = 0; c < cols; ++c) {
      const auto i = static_cast<std::size_t>(r * cols + c);
      const float g = effective(i);
      const float vhat = rm > 0.0f ? rv * col_state[static_cast<std::size_t>(b * cols + c)] / rm : 0.0f;
      float p = params[i];
      if (decoupled) p -= h.lr * h.weight_decay * p;
      params[i] = p - h.lr * g / (std::sqrt(vhat) + h.eps);
    }
  }

  row_.store(0, row_state);
  col_.store(0, col_state);
}

namespace {

double median_step_seconds(const Configuration& config, const BlockShape& shape, int repetitions,
                           std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(shape.param_count());
  std::vector<float> params(n);
  std::vector<float> grads(n);
  const auto key = stream_key({seed, 0xBE4C4ULL});
  for (std::size_t i = 0; i < n; ++i) {
    params[i] = static_cast<float>(0.02 * CounterRng::normal_at(key, 2 * i));
    grads[i] = static_cast<float>(1e-3 * CounterRng::normal_at(key, 2 * i + 1));
  }
  BlockOptimizer opt(config, shape);
  opt.step(params, grads);  // warm-up: touches every state page once
  std::vector<double> samples;
  samples.reserve(static_cast<std::size_t>(repetitions));
  for (int k = 0; k < repetitions; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    opt.step(params, grads);
    const auto t1 = std::chrono::steady_clock::now();
    samples.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(samples.size() / 2), samples.end());
  return std::max(samples[samples.size() / 2], 1e-12);
}

void check_measurable(const Configuration& config, const BlockShape& shape, int repetitions) {
  if (repetitions < 1) throw InputError("repetitions must be >= 1");
  validate(config);
  if (config.factorized && !shape.matrix_like()) {
    throw InvalidConfiguration(config.key() + " requires a matrix-shaped block");
  }
}

}  // namespace

double measure_update_ratio(const Configuration& config, const BlockShape& shape, int repetitions,
                            std::uint64_t seed) {
  check_measurable(config, shape, repetitions);
  const auto baseline = make_config(Family::adamw, 16);
  const double base = median_step_seconds(baseline, shape, repetitions, seed);
  if (config == baseline) return base / base;
  return median_step_seconds(config, shape, repetitions, seed) / base;
}

CostModel measure_cost_model(const BlockShape& shape, const std::vector<Configuration>& candidates, int repetitions,
                             std::uint64_t seed) {
  const auto baseline = make_config(Family::adamw, 16);
  check_measurable(baseline, shape, repetitions);
  const double base = median_step_seconds(baseline, shape, repetitions, seed);
  std::map<std::string, double> table{{baseline.key(), 1.0}};
  for (const auto& c : candidates) {
    if (c == baseline) continue;
    check_measurable(c, shape, repetitions);
    table[c.key()] = median_step_seconds(c, shape, repetitions, seed) / base;
  }
  return CostModel(std::move(table), CostSource::measured);
}

}  // namespace baoc
