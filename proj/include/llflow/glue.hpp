#pragma once

#include <memory>

#include "llflow/diagnostics.hpp"
#include "llflow/inner.hpp"
#include "llflow/remote.hpp"
#include "llflow/selfsim.hpp"

namespace llflow {

// Global approximate blowup profile assembled from the three regions with
// the cutoff blending of the exterior composite
//   What(rho,t) = th(t^{nu-eps1} rho) W_in + [1-th(..)] th(t^{nu+eps2} rho) W_ss
//               + [1-th(t^{nu+eps2} rho)] w_rem,
// V = V_in exactly below rho_a/2, else the inverse stereographic of What;
// u(x,t) = e^{(alpha(t)+theta) R} V(lambda(t)|x|, t).
struct GluedProfile {
  Params params;
  int N = 2;
  std::shared_ptr<const InnerStack> inner;
  std::shared_ptr<const SelfSimFamily> ss;
  std::shared_ptr<const RemoteFamily> rem;

  double rho_switch(double t) const { return 0.5 * std::pow(t, -params.nu + params.eps1); }
};

GluedProfile build_glued(const Params& p, int N);

// exterior composite and the blended unit field
Complex glued_W(const GluedProfile& gp, double t, double rho);
Vec3 glued_V(const GluedProfile& gp, double t, double rho);
// d/dt at fixed rho by exact term-wise differentiation of each region
Vec3 glued_V_dt(const GluedProfile& gp, double t, double rho);

// radial sample of v(r,t) = e^{alpha R} V(lambda r, t) on a physical grid
SphereField glued_field(const GluedProfile& gp, double t, const RadialGrid& rgrid);

struct GlobalResidualReport {
  double l2 = 0.0;        // ||r^(N)||_{L2(dx)}
  double h3 = 0.0;        // equivariant-sector H3 of the residual
  double weighted = 0.0;  // ||<x> r^(N)||_{L2}
  double dt_crosscheck = 0.0;  // max rel diff exact vs FD time derivative
};
GlobalResidualReport global_residual(const GluedProfile& gp, double t);

struct EstimateRow {
  std::string name;
  double fitted_exponent = 0.0;
  double stated_exponent = 0.0;
  bool ok = true;  // fitted >= stated - 0.3 (upper-bound check)
};
std::vector<EstimateRow> estimate_suite(const GluedProfile& gp,
                                        const std::vector<double>& ts);

}  // namespace llflow
