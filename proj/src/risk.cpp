#include "baoc/risk.hpp"

#include "baoc/numeric.hpp"

namespace baoc {

void Anchors::validate() const {
  if (!(A_low < A_high) || !(rho_low < rho_high) || !(eta_low < eta_high)) {
    throw InputError("anchors must satisfy low < high");
  }
  if (!(global_scale > 0.0)) throw InputError("anchor scale must be positive");
}

void RiskWeights::validate() const {
  for (double w : {w_A, w_M, w_C, w_F, w_Q, lambda_pref}) {
    if (!(w >= 0.0)) throw InputError("risk weights and lambda_pref must be non-negative");
  }
}

double geometry_signal(double A, const Anchors& anchors) {
  const double lo = anchors.A_low * anchors.global_scale;
  const double hi = anchors.A_high * anchors.global_scale;
  return clip((A - lo) / (hi - lo), 0.0, 1.0);
}

double momentum_need(double rho_bar, double snr_value, const Anchors& anchors, bool snr_available) {
  const double s_rho = clip((rho_bar - anchors.rho_low) / (anchors.rho_high - anchors.rho_low), 0.0, 1.0);
  if (!snr_available) return s_rho;
  const double s_snr =
      clip((std::log1p(snr_value) - anchors.eta_low) / (anchors.eta_high - anchors.eta_low), 0.0, 1.0);
  return s_rho * s_snr;
}

double distortion_signal(double C) { return std::log1p(C); }

double structure_signal(double F) { return clip(F, 0.0, 1.0); }

double precision_risk(double Q, double eps) { return -std::log(Q + eps); }

RiskSignals make_signals(const RawMetrics& m, const Anchors& anchors, bool snr_available) {
  RiskSignals s;
  s.s_A = geometry_signal(m.A, anchors);
  s.s_M = momentum_need(m.rho_bar, m.snr, anchors, snr_available);
  s.C_tilde = distortion_signal(m.C);
  s.s_F = structure_signal(m.F);
  for (const auto& [bits, q] : m.Q) s.ell_Q[bits] = precision_risk(clip(q, 1e-12, 1.0));
  return s;
}

double risk(const Configuration& c, const RiskSignals& s, const RiskWeights& w) {
  double r = w.w_A * s.s_A * (1.0 - c.adaptive) + w.w_M * s.s_M * (1.0 - c.momentum) +
             w.w_C * s.C_tilde * (1.0 - c.decoupled_decay) + w.w_F * s.s_F * static_cast<double>(c.factorized);
  if (!c.stateless()) {
    auto it = s.ell_Q.find(c.bits);
    if (it == s.ell_Q.end()) {
      throw InputError("no precision signal for " + std::to_string(c.bits) + "-bit states");
    }
    r += w.w_Q * it->second;
  }
  if (w.lambda_pref != 0.0 && matches_any(w.pref_set, c)) r -= w.lambda_pref;
  return r;
}

double phi(const Configuration& c, const RiskSignals& s, const RiskWeights& w, double gamma) {
  return risk(c, s, w) + gamma * aggressiveness(c);
}

}  // namespace baoc
