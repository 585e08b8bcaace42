#include <doctest.h>

#include <cmath>

#include "baoc/risk.hpp"

using namespace baoc;

TEST_CASE("anchor exactness") {
  CHECK(geometry_signal(std::log(2.0)) == 0.0);
  CHECK(geometry_signal(std::log(10.0)) == 1.0);
  CHECK(geometry_signal(0.0) == 0.0);
  CHECK(geometry_signal(100.0) == 1.0);
  CHECK(momentum_need(0.2, 0.0, {}, false) == 0.0);
  CHECK(momentum_need(0.6, 0.0, {}, false) == 1.0);
  CHECK(momentum_need(0.4, 0.0, {}, false) == doctest::Approx(0.5));
  CHECK(distortion_signal(0.0) == 0.0);
  CHECK(std::fabs(precision_risk(1.0)) <= 1e-9);
  CHECK(structure_signal(1.7) == 1.0);
}

TEST_CASE("momentum need is gated by snr") {
  const double s_snr = std::log1p(std::exp(1.0) - 1.0) / 2.0;  // log1p(e-1) = 1
  CHECK(momentum_need(0.6, std::exp(1.0) - 1.0) == doctest::Approx(s_snr));
  CHECK(momentum_need(0.6, 0.0) == 0.0);
  CHECK(momentum_need(0.6, 1e9) == 1.0);
}

TEST_CASE("anchor scale multiplies the anisotropy anchors") {
  Anchors a;
  a.global_scale = 2.0;
  CHECK(geometry_signal(2 * std::log(2.0), a) == 0.0);
  CHECK(geometry_signal(2 * std::log(10.0), a) == 1.0);
  a.global_scale = 0.0;
  CHECK_THROWS_AS(a.validate(), InputError);
  Anchors bad;
  bad.rho_low = 0.7;
  CHECK_THROWS_AS(bad.validate(), InputError);
}

TEST_CASE("risk terms") {
  RiskSignals s;
  s.s_A = 0.8;
  s.s_M = 0.5;
  s.C_tilde = 0.3;
  s.s_F = 0.25;
  s.ell_Q = {{32, 0.0}, {16, 0.01}, {8, 0.2}};
  CHECK(risk(make_config(Family::adamw, 32), s) == 0.0);
  CHECK(risk(make_config(Family::sgd, 32), s) == doctest::Approx(0.8 + 0.5 + 0.3));
  CHECK(risk(make_config(Family::adafactor, 8), s) == doctest::Approx(0.5 + 0.25 + 0.2));
  CHECK(risk(make_config(Family::adam, 16), s) == doctest::Approx(0.3 + 0.01));
  CHECK(phi(make_config(Family::sgdm, 16), s, {}, 0.1) ==
        doctest::Approx(0.8 + 0.3 + 0.01 + 0.1 * 3));
  RiskWeights w;
  w.w_A = 2.0;
  w.w_Q = 0.0;
  CHECK(risk(make_config(Family::sgdwm, 8), s, w) == doctest::Approx(1.6));
}

TEST_CASE("soft preference") {
  RiskSignals s;
  s.ell_Q = {{32, 0.0}, {16, 0.0}, {8, 0.0}};
  RiskWeights w;
  w.pref_set = {ConfigSelector::parse("sgdm")};
  CHECK(risk(make_config(Family::sgdm, 16), s, w) == 0.0);
  w.lambda_pref = 0.25;
  CHECK(risk(make_config(Family::sgdm, 16), s, w) == -0.25);
  CHECK(risk(make_config(Family::adamw, 16), s, w) == 0.0);
  w.lambda_pref = -1;
  CHECK_THROWS_AS(w.validate(), InputError);
}

TEST_CASE("missing precision signal throws") {
  RiskSignals s;
  s.ell_Q = {{32, 0.0}};
  CHECK_THROWS_AS(risk(make_config(Family::adamw, 8), s), InputError);
  CHECK_NOTHROW(risk(make_config(Family::sgd, 32), s));
}

TEST_CASE("signals from raw metrics") {
  RawMetrics m;
  m.A = std::log(10.0);
  m.rho_bar = 0.6;
  m.snr = 1e9;
  m.C = std::exp(1.0) - 1.0;
  m.F = 0.4;
  m.Q = {{32, 1.0}, {16, 0.5}, {8, 0.0}};
  const auto s = make_signals(m);
  CHECK(s.s_A == 1.0);
  CHECK(s.s_M == 1.0);
  CHECK(s.C_tilde == doctest::Approx(1.0));
  CHECK(s.s_F == 0.4);
  CHECK(s.ell_Q.at(16) == doctest::Approx(std::log(2.0)));
  CHECK(s.ell_Q.at(8) == doctest::Approx(-std::log(2e-12)));
  CHECK(std::fabs(s.ell_Q.at(32)) <= 1e-9);
}
