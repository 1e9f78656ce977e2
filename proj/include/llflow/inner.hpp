#pragma once

#include "llflow/field.hpp"
#include "llflow/logseries.hpp"
#include "llflow/params.hpp"

namespace llflow {

// tau-series of complex grid functions, tau = t^{2 nu}; index = tau power.
using TauFn = std::vector<ComplexVec>;

// Inner-region profile hierarchy z^k solving L z^k = F_k with
// z^k(0) = z^k'(0) = 0. Entry 0 of the per-k arrays is unused.
struct InnerStack {
  Params params;
  RadialGrid grid;                     // variable rho
  int N = 0;                           // layers built: z^1..z^N
  std::vector<ComplexVec> z;           // z[k]
  std::vector<ComplexVec> dz;          // d/drho z[k]
  std::vector<ComplexVec> d2z;         // d2/drho2 z[k]
  std::vector<LogPowerSeries> tails;   // fitted rho->infinity expansions
  std::vector<double> tail_residuals;  // max relative fit residual per k
  std::vector<double> origin_orders;   // fitted leading Taylor order per k

  ComplexVec z_at(double t, double rho_max = 0.0) const;  // sum_k t^{2nu k} z^k
};

// L = -Delta + (1 - 2 h1^2)/rho^2 applied gridwise (radial Delta).
ComplexVec apply_L(const RadialGrid& g, const ComplexVec& f);

// z = (1/4) int_0^rho [h1(rho) h2(s) - h1(s) h2(rho)] F(s) s ds.
// Checks L z = F by a Richardson half-density comparison (tolerance 1e-6)
// unless `checked` is false.
ComplexVec solve_L(const RadialGrid& g, const ComplexVec& F, bool checked = true);

// Mechanical assembly of F_k from the lower layers via truncated
// tau-polynomial arithmetic. k = 1 errors (closed form, not recursive).
ComplexVec assemble_rhs_Fk(const InnerStack& stack, int k);

// The full hierarchy plus fitted origin orders and far-field tails.
// N_build defaults to params.N (capped at 4 unless overridden).
InnerStack build_stack(const Params& params, int N_build = 0,
                       const RadialGrid* grid = nullptr);

struct InnerResidualReport {
  double sup_ratio = 0.0;       // sup |X_N| / [t^{2nuN} <rho>^{2N+1} ln(2+rho)]
  double sup_ratio_next = 0.0;  // same with the t^{2nu(N+1)} normalizer
  double rho_max = 0.0;         // window edge 10 t^{eps1 - nu}
};

// X_N from substituting the truncated sum into the inner equation at time t.
ComplexVec inner_residual_field(const InnerStack& stack, double t);
InnerResidualReport inner_residual(const InnerStack& stack, double t);

// Frame reconstruction V_in^(N)(rho, t) = Q + Z_in (unit 3-vectors), and its
// stereographic image at y = t^nu rho.
Vec3 v_inner(const InnerStack& stack, double t, double rho);
Complex w_inner(const InnerStack& stack, double t, double y);
// dV/dt at fixed rho (the layer weights t^{2 nu k} are explicit in t).
Vec3 v_inner_dt(const InnerStack& stack, double t, double rho);

}  // namespace llflow
