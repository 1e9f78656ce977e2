#pragma once

#include <map>
#include <string>

#include "llflow/field.hpp"
#include "llflow/grid.hpp"

namespace llflow {

// Named norms of a radial (vector- or complex-valued) profile: the
// equivariant-sector families ||rho^{-l} d_rho^k (.)||_{L2(rho drho)} and
// sup analogues, H^k as the root sum of squares of the k-th order family.
struct NormReport {
  std::map<std::string, double> values;
  double t = 0.0;
  double get(const std::string& k) const {
    auto it = values.find(k);
    require(it != values.end(), "norm report: missing " + k);
    return it->second;
  }
};

// components: up to three real radial arrays sharing the grid (unused ones
// empty). kmax <= 3 derivative orders.
NormReport sobolev_norms(const RadialGrid& g, const std::vector<RealVec>& components,
                         int kmax = 3);

struct FitReport {
  double exponent = 0.0;
  double prefactor = 0.0;
  double residual = 0.0;  // max relative deviation over the window
  double tmin = 0.0, tmax = 0.0;
};

// least squares of log(value) against log(t); values must be positive,
// >= 4 samples spanning >= 1 decade.
FitReport fit_power_law(const std::vector<double>& t, const std::vector<double>& value);

// zero crossing of v3 (h3(1) = 0 => r_star = 1/lambda for rescaled Q).
// Errors with "ambiguous scale" unless exactly one crossing exists.
double detect_scale(const SphereField& f);

}  // namespace llflow
