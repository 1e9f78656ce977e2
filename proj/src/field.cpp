#include "llflow/field.hpp"

#include <cmath>

#include "llflow/harmonic.hpp"
#include "llflow/quadrature.hpp"

namespace llflow {

void SphereField::check_unit(double tol) const {
  for (const auto& p : v)
    require(std::abs(p.norm() - 1.0) <= tol, "field: sphere constraint violated");
}

SphereField harmonic_profile(int m, const RadialGrid& grid) {
  require(m >= 1, "harmonic_profile: need m >= 1");
  SphereField f;
  f.grid = grid;
  f.m = m;
  f.v.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    f.v[i] = {h1m(m, grid[i]), 0.0, h3m(m, grid[i])};
  f.origin_pole = Pole::Down;
  f.infinity_pole = Pole::Up;
  return f;
}

SphereField constant_field(Pole p, const RadialGrid& grid) {
  SphereField f;
  f.grid = grid;
  f.m = 1;
  f.v.assign(grid.size(), pole_vec(p));
  f.origin_pole = p;
  f.infinity_pole = p;
  return f;
}

double energy(const SphereField& f) {
  require(f.grid.size() >= 3, "energy: grid too small");
  const std::size_t n = f.size();
  RealVec c1(n), c2(n), c3(n);
  for (std::size_t i = 0; i < n; ++i) {
    c1[i] = f.v[i].x;
    c2[i] = f.v[i].y;
    c3[i] = f.v[i].z;
  }
  const auto d1 = deriv1(f.grid, c1);
  const auto d2 = deriv1(f.grid, c2);
  const auto d3 = deriv1(f.grid, c3);
  RealVec dens(n);
  const double m2 = double(f.m) * double(f.m);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = f.grid[i];
    dens[i] = (sq(d1[i]) + sq(d2[i]) + sq(d3[i]) + m2 * (sq(c1[i]) + sq(c2[i])) / (r * r)) * r;
  }
  return M_PI * integrate(f.grid, dens);
}

double degree(const SphereField& f) {
  const double v3_lo = f.v.front().z;
  const double v3_hi = f.v.back().z;
  const bool const_map =
      f.origin_pole == f.infinity_pole && std::abs(v3_lo - v3_hi) < 1e-6;
  if (!const_map)
    require(std::abs(v3_lo) > 0.99 && std::abs(v3_hi) > 0.99, "degree: non-compactified field");
  const double a = pole_vec(f.origin_pole).z;
  const double b = pole_vec(f.infinity_pole).z;
  return double(f.m) * (b - a) / 2.0;
}

ComplexField stereo(const SphereField& f) {
  ComplexField w;
  w.grid = f.grid;
  w.w.resize(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    require(f.v[i].z > -1.0 + 1e-14, "stereo: south pole on grid");
    w.w[i] = stereo_point(f.v[i]);
  }
  return w;
}

SphereField stereo_inv(const ComplexField& w) {
  SphereField f;
  f.grid = w.grid;
  f.v.resize(w.w.size());
  for (std::size_t i = 0; i < w.w.size(); ++i) f.v[i] = stereo_inv_point(w.w[i]);
  f.origin_pole = f.v.front().z < 0.0 ? Pole::Down : Pole::Up;
  f.infinity_pole = f.v.back().z < 0.0 ? Pole::Down : Pole::Up;
  return f;
}

FrameCoords frame_decompose(const SphereField& V) {
  FrameCoords c;
  c.grid = V.grid;
  const std::size_t n = V.size();
  c.z1.resize(n);
  c.z2.resize(n);
  c.gamma.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = V.grid[i];
    const Vec3 Q{h1(r), 0.0, h3(r)};
    const Vec3 f1{h3(r), 0.0, -h1(r)};
    c.z1[i] = V.v[i].dot(f1);
    c.z2[i] = V.v[i].y;
    c.gamma[i] = V.v[i].dot(Q) - 1.0;
    require(sq(c.z1[i]) + sq(c.z2[i]) <= 1.0 + 1e-12, "frame chart exceeded");
  }
  return c;
}

SphereField frame_reconstruct(const FrameCoords& c) {
  SphereField V;
  V.grid = c.grid;
  const std::size_t n = c.z1.size();
  V.v.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = c.grid[i];
    const Vec3 Q{h1(r), 0.0, h3(r)};
    const Vec3 f1{h3(r), 0.0, -h1(r)};
    const Vec3 f2{0.0, 1.0, 0.0};
    V.v[i] = (1.0 + c.gamma[i]) * Q + c.z1[i] * f1 + c.z2[i] * f2;
  }
  V.origin_pole = V.v.front().z < 0.0 ? Pole::Down : Pole::Up;
  V.infinity_pole = V.v.back().z < 0.0 ? Pole::Down : Pole::Up;
  return V;
}

Vec3 eval(const SphereField& f, double r) {
  if (r < f.grid.rmin()) return pole_vec(f.origin_pole);
  if (r > f.grid.rmax()) return pole_vec(f.infinity_pole);
  const std::size_t n = f.size();
  RealVec c1(n), c2(n), c3(n);
  // Local 4-point interpolation per component.
  // (Small helper arrays; fine for diagnostic use.)
  for (std::size_t i = 0; i < n; ++i) {
    c1[i] = f.v[i].x;
    c2[i] = f.v[i].y;
    c3[i] = f.v[i].z;
  }
  Vec3 out{interp(f.grid, c1, r), interp(f.grid, c2, r), interp(f.grid, c3, r)};
  return out;
}

Vec3 group_action(const SphereField& V, double nu, double alpha0, double t, double r) {
  require(t > 0.0, "group_action: need t > 0");
  const double lam = std::pow(t, -0.5 - nu);
  const double al = alpha0 * std::log(t);
  return rotate_z(eval(V, lam * r), al);
}

}  // namespace llflow
