#pragma once

#include "llflow/grid.hpp"
#include "llflow/util.hpp"

namespace llflow {

// 4th-order finite differences. Geometric grids differentiate in x = ln r
// and convert: f_r = f_x / r, f_rr = (f_xx - f_x) / r^2. One-sided stencils
// of the same order at the ends.
RealVec deriv1(const RadialGrid& g, const RealVec& f);
RealVec deriv2(const RadialGrid& g, const RealVec& f);
ComplexVec deriv1(const RadialGrid& g, const ComplexVec& f);
ComplexVec deriv2(const RadialGrid& g, const ComplexVec& f);

// Radial Laplacian f'' + f'/r on the grid.
RealVec radial_laplacian(const RadialGrid& g, const RealVec& f);
ComplexVec radial_laplacian(const RadialGrid& g, const ComplexVec& f);

// Cubic interpolation of grid samples at radius r (clamped to grid range);
// geometric grids interpolate in ln r.
double interp(const RadialGrid& g, const RealVec& f, double r);
Complex interp(const RadialGrid& g, const ComplexVec& f, double r);

}  // namespace llflow
