#include <doctest.h>

#include <cmath>

#include "baoc/diagnostics.hpp"
#include "baoc/rng.hpp"
#include "baoc/simulator.hpp"

using namespace baoc;

namespace {

BlockSpec vector_spec(std::int64_t n) {
  BlockSpec s;
  s.id = 0;
  s.shape = BlockShape({n});
  for (std::int64_t i = 0; i < n; ++i) s.sample_indices.push_back(i);
  return s;
}

BlockSpec matrix_spec(std::int64_t r, std::int64_t c) {
  BlockSpec s;
  s.id = 1;
  s.shape = BlockShape({r, c});
  for (std::int64_t i = 0; i < r * c; ++i) s.sample_indices.push_back(i);
  return s;
}

}  // namespace

TEST_CASE("first update arithmetic") {
  auto st = make_state(vector_spec(2));
  const std::vector<double> g{1, 2};
  update(st, g);
  CHECK(st.m_hat[0] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(st.m_hat[1] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(st.v_hat[0] == doctest::Approx(0.001).epsilon(1e-12));
  CHECK(st.v_hat[1] == doctest::Approx(0.004).epsilon(1e-12));
  CHECK(st.rho_bar == 0.0);
  CHECK(st.step_count == 1);
}

TEST_CASE("direction stability EMA") {
  auto st = make_state(vector_spec(3));
  const std::vector<double> g{1, -2, 0.5};
  update(st, g);
  update(st, g);
  CHECK(std::fabs(st.rho_bar - 0.1) <= 1e-12);
  const std::vector<double> zero(3, 0.0);
  const double before = st.rho_bar;
  update(st, zero);
  CHECK(st.rho_bar == doctest::Approx(0.9 * before).epsilon(1e-15));
  const std::vector<double> neg{-1, 2, -0.5};
  update(st, g);
  update(st, neg);
  CHECK(st.rho_bar >= -1.0);
  CHECK(st.rho_bar <= 1.0);
}

TEST_CASE("update rejects wrong lengths") {
  auto st = make_state(vector_spec(3));
  CHECK_THROWS_AS(update(st, std::vector<double>{1, 2}), InputError);
  const std::vector<double> g{1, 2, 3}, p{1};
  CHECK_THROWS_AS(update(st, g, std::span<const double>(p)), InputError);
}

TEST_CASE("anisotropy") {
  CHECK(anisotropy(std::vector<double>(5, 3.0)) == 0.0);
  // 0.1 and 0.9 interpolated quantiles are exactly 1 and 10
  const std::vector<double> v{0.5, 1, 2, 3, 4, 5, 6, 7, 8, 10, 20};
  CHECK(anisotropy(v) == doctest::Approx(std::log(10.0)).epsilon(1e-9));
  // 11 log-spaced points from 1 to 10: quantiles are 10^0.1 and 10^0.9
  std::vector<double> logspaced;
  for (int i = 0; i <= 10; ++i) logspaced.push_back(std::pow(10.0, i / 10.0));
  CHECK(std::fabs(anisotropy(logspaced) - 0.8 * std::log(10.0)) < 1e-6);
  auto scaled = logspaced;
  for (double& x : scaled) x *= 2;
  CHECK(std::fabs(anisotropy(scaled) - anisotropy(logspaced)) < 1e-6);
}

TEST_CASE("snr") {
  CHECK(snr(std::vector<double>{3, 4}, std::vector<double>{2, 3}) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(snr(std::vector<double>{0, 0}, std::vector<double>{2, 3}) == 0.0);
  const double huge = snr(std::vector<double>{1, 0}, std::vector<double>{0, 0});
  CHECK(std::isfinite(huge));
  CHECK(huge == doctest::Approx(1e12));
}

TEST_CASE("distortion") {
  CHECK(std::fabs(distortion(std::vector<double>{1, 4}, std::vector<double>{1, 1}) - 1.0 / 3.0) < 1e-6);
  CHECK(distortion(std::vector<double>{2, 2, 2}, std::vector<double>{1, -3, 2}) < 1e-12);
  CHECK(distortion(std::vector<double>{1, 4}, std::vector<double>{0, 0}) == 0.0);
}

TEST_CASE("structure residual") {
  Matrix outer(3, 4);
  const double a[] = {0.5, 2.0, 3.0}, b[] = {1.0, 0.1, 7.0, 2.5};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) outer(r, c) = a[r] * b[c];
  CHECK(structure_residual(outer) < 1e-9);
  Matrix id(2, 2);
  id(0, 0) = id(1, 1) = 1.0;
  CHECK(std::fabs(structure_residual(id) - 1.0 / std::sqrt(2.0)) < 1e-9);
  CHECK(structure_residual(Matrix(3, 3)) == 0.0);
  CHECK_THROWS_AS(structure_residual(Matrix(1, 3)), InputError);
}

TEST_CASE("quantize") {
  const std::vector<double> x{0.3, -1e-7, 12345.678};
  CHECK(quantize(x, 32) == x);
  const auto q8 = quantize(std::vector<double>{127, -127, 63.4}, 8);
  CHECK(q8 == std::vector<double>{127, -127, 63});
  CHECK(quantize(q8, 8) == q8);
  const auto q16 = quantize(x, 16);
  CHECK(q16[0] == doctest::Approx(0.3).epsilon(1e-3));
  CHECK(q16[2] == 12344.0);
  CHECK_THROWS_AS(quantize(x, 4), InvalidConfiguration);
}

TEST_CASE("precision similarity") {
  const std::vector<double> m{0.3, -0.01, 0.02, 0.5}, v{0.09, 1e-4, 4e-4, 0.25};
  CHECK(precision_similarity(m, v, 32) == 1.0);
  CHECK(std::fabs(precision_similarity(std::vector<double>{1, 1}, std::vector<double>{1, 1}, 8) - 1.0) < 1e-3);
  CHECK(precision_similarity(std::vector<double>{0, 0}, std::vector<double>{1, 1}, 8) == 1.0);
  const double q16 = precision_similarity(m, v, 16), q8 = precision_similarity(m, v, 8);
  CHECK(q16 <= 1.0);
  CHECK(q8 <= 1.0);
  CHECK(q16 >= 1e-12);
  // second moments far below the 8-bit grid step collapse to zero; tiny signed first
  // moments round to zero except the dominant one, whose sign flips the update
  const std::vector<double> adv_m{-1.0, 1e-3, 1e-3, 1e-3}, adv_v{1.0, 1e-12, 1e-12, 1e-12};
  CHECK(precision_similarity(adv_m, adv_v, 8) > 0.0);
  // overflowing half precision states
  const std::vector<double> big_m{1e6, 1.0}, big_v{1e12, 1.0};
  CHECK(precision_similarity(big_m, big_v, 16) == 1e-12);
}

TEST_CASE("vanishing low-precision direction clips to eps") {
  // Both quantizers preserve signs, so every coordinate product is >= 0 and the
  // cosine cannot go negative; its floor is reached when the low-precision update is
  // zero, here because the first moment underflows binary16.
  const std::vector<double> m{1e-9, -2e-9}, v{1e-18, 4e-18};
  CHECK(precision_similarity(m, v, 16) == 1e-12);
  CHECK(precision_similarity(m, v, 8) > 0.99);
}

TEST_CASE("matrix layout and structure metric") {
  auto st = make_state(matrix_spec(3, 4));
  CHECK(st.layout.usable());
  CHECK(st.layout.rows == 3);
  CHECK(st.layout.cols == 4);
  const double a[] = {1, 2, 3}, b[] = {1, 0.5, 2, 4};
  std::vector<double> g(12);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) g[static_cast<std::size_t>(r * 4 + c)] = std::sqrt(a[r] * b[c]);
  for (int t = 0; t < 3; ++t) update(st, g);
  const auto m = snapshot(st);
  CHECK(m.structure_observed);
  CHECK(m.F < 1e-9);
  CHECK(m.Q.at(32) == 1.0);
  CHECK_FALSE(m.distortion_observed);

  auto vs = make_state(vector_spec(4));
  update(vs, std::vector<double>{1, 2, 3, 4});
  CHECK(snapshot(vs).F == 1.0);
  CHECK_FALSE(snapshot(vs).structure_observed);
}

TEST_CASE("sparse layout compacts occupied rows and columns") {
  BlockSpec s;
  s.shape = BlockShape({100, 50});
  s.sample_indices = {0, 51, 3003, 4999};  // rows 0,1,60,99; cols 0,1,3,49
  const auto layout = MatrixLayout::build(s.shape, s.sample_indices);
  CHECK(layout.rows == 4);
  CHECK(layout.cols == 4);
  CHECK(layout.cell_of_sample == std::vector<std::size_t>{0, 5, 10, 15});
  CHECK(std::count(layout.observed.begin(), layout.observed.end(), 1) == 4);
}

TEST_CASE("v_hat and S stay non-negative; rho_bar in range") {
  auto st = make_state(matrix_spec(4, 4));
  CounterRng rng(3);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> g(16);
    for (auto& x : g) x = rng.normal() * 10;
    update(st, g);
  }
  for (double v : st.v_hat) CHECK(v >= 0.0);
  for (double v : st.S.data) CHECK(v >= 0.0);
  CHECK(std::fabs(st.rho_bar) <= 1.0);
}

TEST_CASE("bank parallel ingest equals serial") {
  TraceHeader h;
  h.sampling_ratio = 0.1;
  std::vector<StreamProfile> profiles;
  for (int i = 0; i < 6; ++i) {
    h.blocks.push_back(make_block_spec(i, "b", {40, 30}, 0.1, 1));
    profiles.push_back({0.3, 0.8, 1.0, 0.5, 1});
  }
  const auto trace = generate_stream(h, profiles, 20);
  DiagnosticsBank a(h.blocks), b(h.blocks);
  for (const auto& r : trace.records) {
    a.ingest(r, Exec::serial);
    b.ingest(r, Exec::parallel);
  }
  const auto ma = a.snapshot_all(Exec::serial), mb = b.snapshot_all(Exec::parallel);
  for (std::size_t i = 0; i < ma.size(); ++i) {
    CHECK(ma[i].A == mb[i].A);
    CHECK(ma[i].rho_bar == mb[i].rho_bar);
    CHECK(ma[i].F == mb[i].F);
    CHECK(ma[i].C == mb[i].C);
    CHECK(ma[i].Q == mb[i].Q);
  }
  StepRecord missing = trace.records[0];
  missing.step = 99;
  missing.grads.erase(3);
  CHECK_THROWS_AS(a.ingest(missing), InputError);
}
