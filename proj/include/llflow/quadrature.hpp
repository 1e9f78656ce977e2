#pragma once

#include "llflow/grid.hpp"
#include "llflow/util.hpp"

namespace llflow {

// Composite quadrature on grid nodes. Geometric grids integrate in the log
// coordinate (the integrand picks up a factor r), uniform grids directly.
// Simpson segments with a 3/8 tail when the interval count is odd.
double integrate(const RadialGrid& g, const RealVec& f);
Complex integrate(const RadialGrid& g, const ComplexVec& f);

// Cumulative integral F(r_i) = int_{rmin}^{r_i} f dr by local parabolas.
RealVec cumulative(const RadialGrid& g, const RealVec& f);
ComplexVec cumulative(const RadialGrid& g, const ComplexVec& f);

// Estimate of int_0^{rmin} f dr from a power-law fit of f at the first
// nodes; used when the integrand extends smoothly to 0 like c*r^p, p > -1.
Complex head_correction(const RadialGrid& g, const ComplexVec& f);

}  // namespace llflow
