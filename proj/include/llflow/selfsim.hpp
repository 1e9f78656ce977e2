#pragma once

#include "llflow/inner.hpp"
#include "llflow/logseries.hpp"
#include "llflow/params.hpp"

namespace llflow {

// Spectral constants of the self-similar hierarchy.
struct SpectralData {
  Complex ac;
  double nu, alpha0;
  Complex mu(int j) const { return Complex{-alpha0, nu * (2.0 * j + 1.0)}; }
  Complex mu_tilde(int j) const { return mu(j) / ac; }
  Complex kappa(int j) const { return -I / (4.0 * ac) - 0.5 * mu_tilde(j); }
};
inline SpectralData spectral_data(const Params& p) { return {p.ac(), p.nu, p.alpha0}; }

// Lcal = -Delta + 1/y^2 + (i/(2 ac)) y d_y applied gridwise.
ComplexVec apply_Lcal(const Params& p, const RadialGrid& g, const ComplexVec& f);

// Basis of (Lcal - mu_tilde_j) f = 0:
//   e1 odd, e1 = y + O(y^3);  e2 = 1/y + kappa_j e1 ln y + etilde, etilde odd.
// Frobenius series on [0, y_switch], 4th-order marching beyond.
struct BasisPair {
  LogPowerSeries e1_series;   // odd series of e1
  LogPowerSeries et2_series;  // odd series of etilde
  ComplexVec e1, e1p, e2, e2p;
  Complex kappa_j;
};
BasisPair build_basis(const Params& p, int j, const RadialGrid& g, double y_switch);

// One W_{j,l}: grid values + derivative, origin power series (E2.46 data),
// and the e1 multiple fixed by the cascade.
struct LevelFn {
  ComplexVec w, wp;
  LogPowerSeries origin;
  Complex c{};
};

struct MatchingData {
  ComplexVec a, b;  // a_j, b_j per level
};

// alpha(j,1,1)/alpha(j,1,0) of the stereographic image of V_in^(N), read
// from the fitted inner tails via exact series composition + reexpansion.
MatchingData derive_matching_data(const InnerStack& stack, int jmax);

struct SelfSimFamily {
  Params params;
  int J = 0;
  RadialGrid ygrid;        // uniform marching grid
  double y_switch = 0.5;   // series/grid evaluation boundary
  std::vector<BasisPair> basis;
  std::vector<std::vector<LevelFn>> W;  // [j][l], 0 <= l <= 2j+1
  MatchingData data;
};

// Solves the hierarchy top-down per level with the numerical realization of
// the solvability constants (two-probe linear root solve on the fitted y^-3
// obstruction; tolerance 1e-6, else "matching failure at level (j,l)").
SelfSimFamily build_selfsim(const Params& p, int J, const MatchingData& data);

// Evaluation: origin series below y_switch, grid interpolation above.
Complex eval_W(const SelfSimFamily& f, int j, int l, double y);
Complex eval_W_deriv(const SelfSimFamily& f, int j, int l, double y);

// W_ss^(N)(y,t) = sum_{j<=N} sum_l t^{nu(2j+1)} (ln y - nu ln t)^l W_{j,l}(y)
Complex w_selfsim(const SelfSimFamily& f, int N, double t, double y);
Complex w_selfsim_dy(const SelfSimFamily& f, int N, double t, double y);
Complex w_selfsim_dt(const SelfSimFamily& f, int N, double t, double y);  // at fixed y

// Reassembles the nonlinearity layers G_{j,l} (gridwise) from the stored
// lower levels; used by the plug-back verifiers.
std::vector<ComplexVec> selfsim_G_layers(const SelfSimFamily& f, int j);

// Log-dressed far-field fit of one W_{j,l}:
//   sum_{k,p} smooth[k][p] y^{2 i alpha0 + P - 2k} (ln y)^p
// + e^{i y^2/(4 ac)} sum_{k,p} osc[k][p] y^{-2 i alpha0 - P - 2 - 2k} (ln y)^p,
// P = 2 nu (2j+1), p <= 2j+1-l. The individual levels carry ln y powers;
// the pure-power structure of Lemma 2.6 lives in the rebased
// (ln y +- ln t/2)-basis, recovered by farfield_tables below.
struct FarfieldRec {
  std::vector<ComplexVec> smooth, osc;  // [k][p]
  double residual = 0.0;
  Complex beta0{}, beta1{};  // rebased leading coefficients for this (j,l)
};
FarfieldRec farfield_decompose(const SelfSimFamily& f, int j, int l,
                               double ylo = 0.0, double yhi = 0.0);

// beta0(j,l) = w^0_{j,l,0} and beta1(j,l) = w^0_{j,l,-1} for all built levels
// (the data handed to the remote region).
struct BetaTables {
  std::vector<std::vector<Complex>> beta0, beta1;  // [j][l]
};
BetaTables farfield_tables(const SelfSimFamily& f);

struct MatchReport {
  std::vector<double> ts, sup_diffs;
  double exponent = 0.0;  // fitted t-slope of the overlap sup difference
};
MatchReport matching_check_inner(const SelfSimFamily& f, const InnerStack& stack, int N,
                                 const std::vector<double>& ts);

}  // namespace llflow
