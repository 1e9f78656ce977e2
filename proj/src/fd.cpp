#include "llflow/fd.hpp"

#include <array>
#include <cmath>

namespace llflow {

namespace {

// 4th-order first derivative in the evenly spaced working coordinate.
template <typename T>
std::vector<T> d1_even(const std::vector<T>& f, double h) {
  const std::size_t n = f.size();
  require(n >= 6, "fd: need at least 6 nodes");
  std::vector<T> d(n);
  for (std::size_t i = 2; i + 2 < n; ++i)
    d[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h);
  // one-sided / skewed stencils, 4th order
  d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h);
  d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * h);
  d[n - 2] = (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5]) / (12.0 * h);
  d[n - 1] = (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4] + 3.0 * f[n - 5]) / (12.0 * h);
  return d;
}

// 4th-order second derivative in the working coordinate.
template <typename T>
std::vector<T> d2_even(const std::vector<T>& f, double h) {
  const std::size_t n = f.size();
  require(n >= 7, "fd: need at least 7 nodes");
  std::vector<T> d(n);
  const double h2 = h * h;
  for (std::size_t i = 2; i + 2 < n; ++i)
    d[i] = (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2]) / (12.0 * h2);
  d[0] = (45.0 * f[0] - 154.0 * f[1] + 214.0 * f[2] - 156.0 * f[3] + 61.0 * f[4] - 10.0 * f[5]) / (12.0 * h2);
  d[1] = (10.0 * f[0] - 15.0 * f[1] - 4.0 * f[2] + 14.0 * f[3] - 6.0 * f[4] + f[5]) / (12.0 * h2);
  d[n - 2] = (10.0 * f[n - 1] - 15.0 * f[n - 2] - 4.0 * f[n - 3] + 14.0 * f[n - 4] - 6.0 * f[n - 5] + f[n - 6]) / (12.0 * h2);
  d[n - 1] = (45.0 * f[n - 1] - 154.0 * f[n - 2] + 214.0 * f[n - 3] - 156.0 * f[n - 4] + 61.0 * f[n - 5] - 10.0 * f[n - 6]) / (12.0 * h2);
  return d;
}

template <typename T>
std::vector<T> deriv1_impl(const RadialGrid& g, const std::vector<T>& f) {
  require(f.size() == g.size(), "fd: size mismatch");
  if (g.spacing() == Spacing::Uniform) return d1_even(f, g.step());
  auto d = d1_even(f, g.step());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] /= g[i];
  return d;
}

template <typename T>
std::vector<T> deriv2_impl(const RadialGrid& g, const std::vector<T>& f) {
  require(f.size() == g.size(), "fd: size mismatch");
  if (g.spacing() == Spacing::Uniform) return d2_even(f, g.step());
  auto dx = d1_even(f, g.step());
  auto dxx = d2_even(f, g.step());
  std::vector<T> d(f.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = (dxx[i] - dx[i]) / (g[i] * g[i]);
  return d;
}

template <typename T>
std::vector<T> lap_impl(const RadialGrid& g, const std::vector<T>& f) {
  auto d1 = deriv1_impl(g, f);
  auto d2 = deriv2_impl(g, f);
  std::vector<T> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = d2[i] + d1[i] / g[i];
  return out;
}

template <typename T>
T interp_impl(const RadialGrid& g, const std::vector<T>& f, double r) {
  const std::size_t n = g.size();
  double x, x0, h = g.step();
  if (g.spacing() == Spacing::Geometric) {
    x = std::log(std::min(std::max(r, g.rmin()), g.rmax()));
    x0 = std::log(g.rmin());
  } else {
    x = std::min(std::max(r, g.rmin()), g.rmax());
    x0 = g.rmin();
  }
  double s = (x - x0) / h;
  std::size_t i = std::size_t(std::floor(s));
  if (i + 1 >= n) i = n - 2;
  // centered 4-point (cubic) Lagrange where possible
  std::size_t j0 = (i == 0) ? 0 : std::min(i - 1, n - 4);
  double u = s - double(j0);
  std::array<double, 4> w;
  w[0] = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
  w[1] = u * (u - 2.0) * (u - 3.0) / 2.0;
  w[2] = -u * (u - 1.0) * (u - 3.0) / 2.0;
  w[3] = u * (u - 1.0) * (u - 2.0) / 6.0;
  T out{};
  for (int k = 0; k < 4; ++k) out += w[std::size_t(k)] * f[j0 + std::size_t(k)];
  return out;
}

}  // namespace

RealVec deriv1(const RadialGrid& g, const RealVec& f) { return deriv1_impl(g, f); }
RealVec deriv2(const RadialGrid& g, const RealVec& f) { return deriv2_impl(g, f); }
ComplexVec deriv1(const RadialGrid& g, const ComplexVec& f) { return deriv1_impl(g, f); }
ComplexVec deriv2(const RadialGrid& g, const ComplexVec& f) { return deriv2_impl(g, f); }
RealVec radial_laplacian(const RadialGrid& g, const RealVec& f) { return lap_impl(g, f); }
ComplexVec radial_laplacian(const RadialGrid& g, const ComplexVec& f) { return lap_impl(g, f); }
double interp(const RadialGrid& g, const RealVec& f, double r) { return interp_impl(g, f, r); }
Complex interp(const RadialGrid& g, const ComplexVec& f, double r) { return interp_impl(g, f, r); }

}  // namespace llflow
