#include "baoc/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "baoc/numeric.hpp"

namespace baoc {

MatrixLayout MatrixLayout::build(const BlockShape& shape, std::span<const std::int64_t> sample_indices) {
  MatrixLayout layout;
  if (!shape.matrix_like()) return layout;
  const std::int64_t cols = shape.squeezed().back();

  std::vector<std::int64_t> row_ids, col_ids;
  row_ids.reserve(sample_indices.size());
  col_ids.reserve(sample_indices.size());
  for (auto idx : sample_indices) {
    row_ids.push_back(idx / cols);
    col_ids.push_back(idx % cols);
  }
  auto distinct = [](std::vector<std::int64_t> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  };
  const auto rows_occ = distinct(row_ids);
  const auto cols_occ = distinct(col_ids);
  layout.rows = rows_occ.size();
  layout.cols = cols_occ.size();
  layout.observed.assign(layout.rows * layout.cols, 0);
  layout.cell_of_sample.reserve(sample_indices.size());
  for (std::size_t s = 0; s < sample_indices.size(); ++s) {
    const auto r = static_cast<std::size_t>(std::lower_bound(rows_occ.begin(), rows_occ.end(), row_ids[s]) -
                                            rows_occ.begin());
    const auto c = static_cast<std::size_t>(std::lower_bound(cols_occ.begin(), cols_occ.end(), col_ids[s]) -
                                            cols_occ.begin());
    const std::size_t cell = r * layout.cols + c;
    layout.cell_of_sample.push_back(cell);
    layout.observed[cell] = 1;
  }
  return layout;
}

DiagnosticsState make_state(const BlockSpec& spec, const DiagnosticsParams& params) {
  DiagnosticsState st;
  st.params = params;
  const std::size_t n = spec.sample_indices.size();
  st.m_hat.assign(n, 0.0);
  st.v_hat.assign(n, 0.0);
  st.prev_grad.assign(n, 0.0);
  st.layout = MatrixLayout::build(spec.shape, spec.sample_indices);
  st.S = Matrix(st.layout.rows, st.layout.cols);
  return st;
}

void update(DiagnosticsState& st, std::span<const double> grad, std::optional<std::span<const double>> param_sample) {
  const std::size_t n = st.m_hat.size();
  if (grad.size() != n) {
    throw InputError("gradient sample has " + std::to_string(grad.size()) + " entries, expected " + std::to_string(n));
  }
  if (param_sample && param_sample->size() != n) {
    throw InputError("parameter sample has " + std::to_string(param_sample->size()) + " entries, expected " +
                     std::to_string(n));
  }
  const auto& p = st.params;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    st.m_hat[i] = p.beta_m * st.m_hat[i] + (1.0 - p.beta_m) * g;
    st.v_hat[i] = p.beta_v * st.v_hat[i] + (1.0 - p.beta_v) * g * g;
  }

  if (st.has_prev) {
    const double ng = norm2(grad);
    const double np = norm2(st.prev_grad);
    double cosine = 0.0;
    if (ng > 0.0 && np > 0.0) {
      cosine = dot(grad, st.prev_grad) / (ng * np + p.eps);
      if (!std::isfinite(cosine)) cosine = 0.0;
    }
    st.rho_bar = p.beta_rho * st.rho_bar + (1.0 - p.beta_rho) * cosine;
  }

  for (std::size_t s = 0; s < st.layout.cell_of_sample.size(); ++s) {
    double& cell = st.S.data[st.layout.cell_of_sample[s]];
    cell = p.beta_v * cell + (1.0 - p.beta_v) * grad[s] * grad[s];
  }

  std::copy(grad.begin(), grad.end(), st.prev_grad.begin());
  st.has_prev = true;
  ++st.step_count;

  if (param_sample) st.distortion = distortion(st.v_hat, *param_sample, p.eps);
}

RawMetrics snapshot(const DiagnosticsState& st) {
  const auto& p = st.params;
  RawMetrics m;
  m.A = anisotropy(st.v_hat, p.eps);
  m.rho_bar = st.rho_bar;
  m.snr = snr(st.m_hat, st.v_hat, p.eps);
  m.distortion_observed = st.distortion.has_value();
  m.C = st.distortion.value_or(0.0);
  m.structure_observed = st.layout.usable();
  // Without an observable matrix layout there is no evidence for factorization.
  m.F = m.structure_observed ? structure_residual_masked(st.S, st.layout.observed, p.eps) : 1.0;
  for (int b : p.precision_bits) m.Q[b] = precision_similarity(st.m_hat, st.v_hat, b, p.eps, p.eps_update);
  m.steps = st.step_count;
  return m;
}

double anisotropy(std::span<const double> v_hat, double eps) {
  return std::log((quantile(v_hat, 0.9) + eps) / (quantile(v_hat, 0.1) + eps));
}

double snr(std::span<const double> m_hat, std::span<const double> v_hat, double eps) {
  double l1 = 0.0;
  for (double v : v_hat) l1 += std::fabs(v);
  return dot(m_hat, m_hat) / (l1 + eps);
}

double distortion(std::span<const double> v_hat, std::span<const double> theta, double eps) {
  const std::size_t n = v_hat.size();
  if (n == 0) return 0.0;
  std::vector<double> pre(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    pre[i] = 1.0 / (std::sqrt(v_hat[i]) + eps);
    mean += pre[i];
  }
  mean /= static_cast<double>(n);
  double num = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = (pre[i] / mean - 1.0) * theta[i];
    num += d * d;
  }
  return std::sqrt(num) / (norm2(theta) + eps);
}

double structure_residual(const Matrix& S, double eps) {
  if (S.rows < 2 || S.cols < 2) throw InputError("structure residual needs at least a 2x2 matrix");
  std::vector<std::uint8_t> all(S.rows * S.cols, 1);
  return structure_residual_masked(S, all, eps);
}

double structure_residual_masked(const Matrix& S, std::span<const std::uint8_t> observed, double eps) {
  std::vector<double> row_sum(S.rows, 0.0), col_sum(S.cols, 0.0);
  std::vector<std::size_t> row_n(S.rows, 0), col_n(S.cols, 0);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r < S.rows; ++r) {
    for (std::size_t c = 0; c < S.cols; ++c) {
      if (!observed[r * S.cols + c]) continue;
      const double v = S(r, c);
      row_sum[r] += v;
      col_sum[c] += v;
      ++row_n[r];
      ++col_n[c];
      total += v;
      ++count;
    }
  }
  if (count == 0) return 0.0;
  const double mean = total / static_cast<double>(count);
  if (mean <= eps) return 0.0;
  double resid = 0.0, norm = 0.0;
  for (std::size_t r = 0; r < S.rows; ++r) {
    for (std::size_t c = 0; c < S.cols; ++c) {
      if (!observed[r * S.cols + c]) continue;
      const double rm = row_sum[r] / static_cast<double>(row_n[r]);
      const double cm = col_sum[c] / static_cast<double>(col_n[c]);
      const double d = S(r, c) - rm * cm / mean;
      resid += d * d;
      norm += S(r, c) * S(r, c);
    }
  }
  return std::sqrt(resid) / (std::sqrt(norm) + eps);
}

std::vector<double> quantize(std::span<const double> x, int bits) {
  switch (bits) {
    case 32: return {x.begin(), x.end()};
    case 16: {
      std::vector<double> out(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = round_to_half(x[i]);
      return out;
    }
    case 8: return quantize_absmax8(x);
    default: throw InvalidConfiguration("unsupported bit-width " + std::to_string(bits));
  }
}

double precision_similarity(std::span<const double> m_hat, std::span<const double> v_hat, int bits, double eps,
                            double eps_update) {
  const std::size_t n = m_hat.size();
  std::vector<double> u_full(n);
  for (std::size_t i = 0; i < n; ++i) u_full[i] = m_hat[i] / (std::sqrt(v_hat[i]) + eps_update);
  const double nf = norm2(u_full);
  if (nf == 0.0) return 1.0;
  if (bits == 32) return 1.0;

  const auto qm = quantize(m_hat, bits);
  const auto qv = quantize(v_hat, bits);
  std::vector<double> u_low(n);
  for (std::size_t i = 0; i < n; ++i) u_low[i] = qm[i] / (std::sqrt(qv[i]) + eps_update);
  const double cosine = dot(u_full, u_low) / (nf * norm2(u_low) + eps);
  // Overflowed half-precision states give a non-finite direction: treat as fully misaligned.
  if (!std::isfinite(cosine)) return eps;
  return clip(cosine, eps, 1.0);
}

DiagnosticsBank::DiagnosticsBank(const std::vector<BlockSpec>& specs, const DiagnosticsParams& params) {
  ids_.reserve(specs.size());
  states_.reserve(specs.size());
  for (const auto& s : specs) {
    ids_.push_back(s.id);
    states_.push_back(make_state(s, params));
  }
}

void DiagnosticsBank::ingest(const StepRecord& record, Exec exec) {
  const auto n = static_cast<std::int64_t>(states_.size());
  auto body = [&](std::int64_t i) {
    const auto id = ids_[static_cast<std::size_t>(i)];
    const auto& g = record.grads.at(id);
    auto pit = record.params.find(id);
    std::optional<std::span<const double>> theta;
    if (pit != record.params.end()) theta = std::span<const double>(pit->second);
    update(states_[static_cast<std::size_t>(i)], g, theta);
  };
  // Validate up front: exceptions must not escape the parallel region.
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    const auto id = ids_[i];
    const auto expected = states_[i].m_hat.size();
    auto g = record.grads.find(id);
    if (g == record.grads.end()) {
      throw InputError("step " + std::to_string(record.step) + " has no gradient sample for block " +
                       std::to_string(id));
    }
    auto pit = record.params.find(id);
    if (g->second.size() != expected || (pit != record.params.end() && pit->second.size() != expected)) {
      throw InputError("step " + std::to_string(record.step) + ": sample length mismatch for block " +
                       std::to_string(id));
    }
  }
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i) body(i);
  } else {
    for (std::int64_t i = 0; i < n; ++i) body(i);
  }
}

std::vector<RawMetrics> DiagnosticsBank::snapshot_all(Exec exec) const {
  const auto n = static_cast<std::int64_t>(states_.size());
  std::vector<RawMetrics> out(states_.size());
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = snapshot(states_[static_cast<std::size_t>(i)]);
  } else {
    for (std::int64_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = snapshot(states_[static_cast<std::size_t>(i)]);
  }
  return out;
}

}  // namespace baoc
