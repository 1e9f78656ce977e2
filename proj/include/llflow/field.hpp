#pragma once

#include <array>

#include "llflow/fd.hpp"
#include "llflow/grid.hpp"
#include "llflow/util.hpp"

namespace llflow {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 normalized() const {
    double n = norm();
    return {x / n, y / n, z / n};
  }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline constexpr Vec3 kPoleUp{0.0, 0.0, 1.0};
inline constexpr Vec3 kPoleDown{0.0, 0.0, -1.0};

// R u = k x u, the generator of horizontal rotations.
inline Vec3 rot_generator(const Vec3& u) { return {-u.y, u.x, 0.0}; }
// e^{a R} acts on the first two components only.
inline Vec3 rotate_z(const Vec3& u, double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {c * u.x - s * u.y, s * u.x + c * u.y, u.z};
}

enum class Pole { Up, Down };
inline Vec3 pole_vec(Pole p) { return p == Pole::Up ? kPoleUp : kPoleDown; }

// Radial sample of a unit-sphere-valued m-equivariant map v(r). The limits
// v(0), v(inf) are carried as pole tags, never as grid nodes.
struct SphereField {
  RadialGrid grid;
  std::vector<Vec3> v;
  int m = 1;                    // equivariance index
  Pole origin_pole = Pole::Down;
  Pole infinity_pole = Pole::Up;

  std::size_t size() const { return v.size(); }
  void check_unit(double tol = 1e-10) const;
};

// Stereographic representation w = (v1 + i v2)/(1 + v3).
struct ComplexField {
  RadialGrid grid;
  ComplexVec w;
};

// Coordinates in the orthogonal frame {f1, f2, Q}: V = (1+gamma) Q + z1 f1 + z2 f2.
struct FrameCoords {
  RadialGrid grid;
  RealVec z1, z2, gamma;
};

// Q^m = (h1^m, 0, h3^m) sampled on the grid.
SphereField harmonic_profile(int m, const RadialGrid& grid);
SphereField constant_field(Pole p, const RadialGrid& grid);

// Energy of the m-equivariant map u = e^{m theta R} v:
//   pi * int (|v_r|^2 + m^2 (v1^2+v2^2)/r^2) r dr.
double energy(const SphereField& f);

// Topological degree m (v3(inf) - v3(0)) / 2 from the boundary tags.
// Errors with "non-compactified field" if the samples do not approach poles.
double degree(const SphereField& f);

ComplexField stereo(const SphereField& f);
SphereField stereo_inv(const ComplexField& w);
inline Complex stereo_point(const Vec3& v) { return Complex{v.x, v.y} / (1.0 + v.z); }
inline Vec3 stereo_inv_point(Complex w) {
  const double n = std::norm(w);
  return {2.0 * w.real() / (1.0 + n), 2.0 * w.imag() / (1.0 + n), (1.0 - n) / (1.0 + n)};
}

FrameCoords frame_decompose(const SphereField& V);
SphereField frame_reconstruct(const FrameCoords& c);

// e^{alpha(t) R} V(lambda(t) |x|) with lambda = t^{-1/2-nu}, alpha = alpha0 ln t.
// Radii beyond the grid use the pole tags.
Vec3 group_action(const SphereField& V, double nu, double alpha0, double t, double r);

// Field evaluation with cubic interpolation, pole tags beyond the grid.
Vec3 eval(const SphereField& f, double r);

}  // namespace llflow
