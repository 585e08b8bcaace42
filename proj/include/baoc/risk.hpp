#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "baoc/config_space.hpp"
#include "baoc/diagnostics.hpp"

namespace baoc {

/// Normalization anchors. `global_scale` multiplies the anisotropy anchors, which is
/// how anchor-perturbation studies are run.
struct Anchors {
  double A_low = std::log(2.0);
  double A_high = std::log(10.0);
  double rho_low = 0.2;
  double rho_high = 0.6;
  double eta_low = 0.0;
  double eta_high = 2.0;
  double global_scale = 1.0;

  void validate() const;
};

/// Normalized per-block signals.
struct RiskSignals {
  double s_A = 0.0;
  double s_M = 0.0;
  double C_tilde = 0.0;
  double s_F = 0.0;
  std::map<int, double> ell_Q;
};

struct RiskWeights {
  double w_A = 1.0;
  double w_M = 1.0;
  double w_C = 1.0;
  double w_F = 1.0;
  double w_Q = 1.0;
  std::vector<ConfigSelector> pref_set;
  double lambda_pref = 0.0;

  void validate() const;
};

double geometry_signal(double A, const Anchors& anchors = {});
double momentum_need(double rho_bar, double snr, const Anchors& anchors = {}, bool snr_available = true);
double distortion_signal(double C);
double structure_signal(double F);
double precision_risk(double Q, double eps = 1e-12);

RiskSignals make_signals(const RawMetrics& metrics, const Anchors& anchors = {}, bool snr_available = true);

/// Linear mismatch risk, with the soft preference bonus subtracted for preferred
/// configurations. Stateless configurations carry no precision term.
double risk(const Configuration& config, const RiskSignals& signals, const RiskWeights& weights = {});

/// risk + gamma * aggressiveness.
double phi(const Configuration& config, const RiskSignals& signals, const RiskWeights& weights, double gamma);

}  // namespace baoc
