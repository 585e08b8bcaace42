#include "baoc/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "baoc/numeric.hpp"
#include "baoc/rng.hpp"

namespace baoc {

void StreamProfile::validate() const {
  if (!(drift_strength >= 0.0)) throw InputError("drift_strength must be non-negative");
  if (!(drift_persistence >= 0.0 && drift_persistence <= 1.0)) throw InputError("drift_persistence must lie in [0, 1]");
  if (!(noise_scale_spread >= 0.0)) throw InputError("noise_scale_spread must be non-negative");
  if (!(rank1_mix >= 0.0 && rank1_mix <= 1.0)) throw InputError("rank1_mix must lie in [0, 1]");
}

BlockSpec make_block_spec(std::int64_t id, const std::string& name, std::vector<std::int64_t> dims, double ratio,
                          std::uint64_t seed, const std::string& kind) {
  BlockSpec spec;
  spec.id = id;
  spec.name = name;
  spec.shape = BlockShape(std::move(dims));
  spec.module_kind = kind;
  spec.sample_indices = sample_coordinates(spec.shape.param_count(), ratio, seed, static_cast<std::uint64_t>(id));
  return spec;
}

namespace {

enum Stream : std::uint64_t { kScale = 1, kRow, kCol, kParam, kDrift, kNoise };

void normalize(std::vector<double>& v) {
  const double n = norm2(v);
  if (n > 0.0) {
    for (double& x : v) x /= n;
  }
}

// Fresh random unit direction for one step.
std::vector<double> random_direction(std::uint64_t key, std::uint64_t step, std::size_t n) {
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = CounterRng::normal_at(key, step * n + i);
  normalize(r);
  return r;
}

// Spherical interpolation from a toward b by weight w.
void slerp(std::vector<double>& a, const std::vector<double>& b, double w) {
  if (w <= 0.0) return;
  const double c = clip(dot(a, b), -1.0, 1.0);
  const double theta = std::acos(c);
  const double s = std::sin(theta);
  if (s < 1e-12) return;
  const double ka = std::sin((1.0 - w) * theta) / s;
  const double kb = std::sin(w * theta) / s;
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = ka * a[i] + kb * b[i];
  normalize(a);
}

struct BlockStream {
  std::vector<std::vector<double>> grads;  // per step
  std::vector<double> params;
};

BlockStream simulate_block(const BlockSpec& spec, const StreamProfile& prof, std::int64_t steps) {
  const std::size_t n = spec.sample_indices.size();
  auto key = [&](Stream s) { return stream_key({prof.seed, static_cast<std::uint64_t>(spec.id), s}); };

  std::vector<double> sigma(n);
  const bool matrix = spec.shape.matrix_like() && prof.rank1_mix > 0.0;
  const std::int64_t cols = spec.shape.squeezed().back();
  for (std::size_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::uint64_t>(spec.sample_indices[i]);
    const double s = std::exp(prof.noise_scale_spread * (CounterRng::uniform_at(key(kScale), idx) - 0.5));
    double var = s * s;
    if (matrix) {
      const auto row = idx / static_cast<std::uint64_t>(cols);
      const auto col = idx % static_cast<std::uint64_t>(cols);
      const double a = std::exp(2.0 * (CounterRng::uniform_at(key(kRow), row) - 0.5));
      const double b = std::exp(2.0 * (CounterRng::uniform_at(key(kCol), col) - 0.5));
      var = (1.0 - prof.rank1_mix) * var + prof.rank1_mix * a * b;
    }
    sigma[i] = std::sqrt(var);
  }

  BlockStream out;
  out.params.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.params[i] = CounterRng::normal_at(key(kParam), i);

  const double drift_scale = prof.drift_strength * std::sqrt(static_cast<double>(n));
  std::vector<double> d = random_direction(key(kDrift), 0, n);
  out.grads.resize(static_cast<std::size_t>(steps));
  for (std::int64_t t = 0; t < steps; ++t) {
    if (t > 0) slerp(d, random_direction(key(kDrift), static_cast<std::uint64_t>(t), n), 1.0 - prof.drift_persistence);
    auto& g = out.grads[static_cast<std::size_t>(t)];
    g.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double xi = CounterRng::normal_at(key(kNoise), static_cast<std::uint64_t>(t) * n + i);
      g[i] = drift_scale * d[i] + sigma[i] * xi;
    }
  }
  return out;
}

}  // namespace

Trace generate_stream(const TraceHeader& header, const std::vector<StreamProfile>& profiles, std::int64_t steps,
                      Exec exec) {
  if (steps < 1) throw InputError("steps must be at least 1");
  if (profiles.size() != header.blocks.size()) {
    throw InputError("expected " + std::to_string(header.blocks.size()) + " stream profiles, got " +
                     std::to_string(profiles.size()));
  }
  for (const auto& p : profiles) p.validate();
  for (const auto& b : header.blocks) validate_block_spec(b, header.sampling_ratio);

  const auto nb = static_cast<std::int64_t>(header.blocks.size());
  std::vector<BlockStream> streams(header.blocks.size());
  auto body = [&](std::int64_t k) {
    const auto i = static_cast<std::size_t>(k);
    streams[i] = simulate_block(header.blocks[i], profiles[i], steps);
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t k = 0; k < nb; ++k) body(k);
  } else {
    for (std::int64_t k = 0; k < nb; ++k) body(k);
  }

  Trace trace;
  trace.header = header;
  trace.records.resize(static_cast<std::size_t>(steps));
  for (std::int64_t t = 0; t < steps; ++t) {
    auto& rec = trace.records[static_cast<std::size_t>(t)];
    rec.step = t;
    for (std::size_t i = 0; i < header.blocks.size(); ++i) {
      rec.grads.emplace(header.blocks[i].id, std::move(streams[i].grads[static_cast<std::size_t>(t)]));
      rec.params.emplace(header.blocks[i].id, streams[i].params);
    }
  }
  return trace;
}

}  // namespace baoc
