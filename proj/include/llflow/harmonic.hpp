#pragma once

#include <cmath>

namespace llflow {

// Equivariant harmonic-map profile components and the second kernel element
// of the linearized operator L.
inline double h1m(int m, double r) {
  const double rm = std::pow(r, m);
  return 2.0 * rm / (rm * rm + 1.0);
}
inline double h3m(int m, double r) {
  const double r2m = std::pow(r, 2 * m);
  return (r2m - 1.0) / (r2m + 1.0);
}
inline double h1(double r) { return 2.0 * r / (r * r + 1.0); }
inline double h3(double r) { return (r * r - 1.0) / (r * r + 1.0); }

// Second solution of L f = 0 alongside h1.
inline double h2(double r) {
  const double r2 = r * r;
  return (r2 * r2 + 4.0 * r2 * std::log(r) - 1.0) / (r * (r2 + 1.0));
}

// kappa(r) = -2 h1^2 / r^2; Delta Q + R^2 Q / r^2 = kappa Q.
inline double kappa(double r) {
  const double h = h1(r);
  return -2.0 * h * h / (r * r);
}

}  // namespace llflow
