#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "baoc/common.hpp"
#include "baoc/trace.hpp"

namespace baoc {

struct DiagnosticsParams {
  double beta_m = 0.9;
  double beta_v = 0.999;
  double beta_rho = 0.9;
  double eps = 1e-12;         ///< metric guard
  double eps_update = 1e-8;   ///< update-direction denominator
  std::vector<int> precision_bits{32, 16, 8};
};

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// Where each sampled coordinate lands in the structural matrix. Rows and columns come
/// from the two trailing non-degenerate axes (leading axes fold into rows); only
/// occupied rows/columns are kept, and cells no sample maps to are unobserved.
struct MatrixLayout {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> cell_of_sample;  ///< compacted row * cols + col, per sample
  std::vector<std::uint8_t> observed;       ///< rows * cols mask

  static MatrixLayout build(const BlockShape& shape, std::span<const std::int64_t> sample_indices);
  bool usable() const { return rows >= 2 && cols >= 2; }
};

struct DiagnosticsState {
  DiagnosticsParams params;
  std::vector<double> m_hat;
  std::vector<double> v_hat;
  double rho_bar = 0.0;
  MatrixLayout layout;
  Matrix S;
  std::vector<double> prev_grad;
  bool has_prev = false;
  std::int64_t step_count = 0;
  std::optional<double> distortion;  ///< last value, refreshed on steps that carry params
};

DiagnosticsState make_state(const BlockSpec& spec, const DiagnosticsParams& params = {});

/// One EMA step: moments, direction stability (from the second call on), structural
/// second moment, and distortion when a parameter sample is given.
void update(DiagnosticsState& state, std::span<const double> grad,
            std::optional<std::span<const double>> param_sample = std::nullopt);

struct RawMetrics {
  double A = 0.0;
  double rho_bar = 0.0;
  double snr = 0.0;
  double C = 0.0;
  double F = 1.0;
  std::map<int, double> Q;
  std::int64_t steps = 0;
  bool structure_observed = false;
  bool distortion_observed = false;
};

RawMetrics snapshot(const DiagnosticsState& state);

/// log((Q0.9(v)+eps) / (Q0.1(v)+eps)).
double anisotropy(std::span<const double> v_hat, double eps = 1e-12);
/// ||m||^2 / (||v||_1 + eps).
double snr(std::span<const double> m_hat, std::span<const double> v_hat, double eps = 1e-12);
/// ||(p/mean(p) - 1) * theta|| / (||theta|| + eps) with p = 1/(sqrt(v)+eps).
double distortion(std::span<const double> v_hat, std::span<const double> theta, double eps = 1e-12);
/// Relative Frobenius residual of the row/column-mean rank-1 fit. Throws InputError
/// below 2x2; returns 0 when the mean entry is <= eps.
double structure_residual(const Matrix& S, double eps = 1e-12);
/// Same fit restricted to observed cells (means and residual over the mask).
double structure_residual_masked(const Matrix& S, std::span<const std::uint8_t> observed, double eps = 1e-12);

/// 32: identity; 16: binary16 round-to-nearest-even; 8: symmetric absmax, 255 levels.
std::vector<double> quantize(std::span<const double> x, int bits);

/// Cosine between the full-precision update m/(sqrt(v)+eps_u) and the same update from
/// quantized states, clipped to [eps, 1]. Returns 1 when the full-precision update is zero.
double precision_similarity(std::span<const double> m_hat, std::span<const double> v_hat, int bits,
                            double eps = 1e-12, double eps_update = 1e-8);

/// Per-block states for a whole trace. ingest() runs one record through every block;
/// the parallel path updates blocks concurrently and is bit-identical to the serial one.
class DiagnosticsBank {
 public:
  DiagnosticsBank(const std::vector<BlockSpec>& specs, const DiagnosticsParams& params = {});

  void ingest(const StepRecord& record, Exec exec = Exec::parallel);
  std::vector<RawMetrics> snapshot_all(Exec exec = Exec::parallel) const;

  const std::vector<DiagnosticsState>& states() const { return states_; }
  const std::vector<std::int64_t>& ids() const { return ids_; }

 private:
  std::vector<std::int64_t> ids_;
  std::vector<DiagnosticsState> states_;
};

}  // namespace baoc
