#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "llflow/field.hpp"
#include "llflow/harmonic.hpp"
#include "llflow/quadrature.hpp"

using namespace llflow;

namespace {

// Independent oracle for the topological degree: 2-D quadrature of
//   deg(u) = (1/4pi) int u_{x1} . (u x u_{x2}) dx = -(1/4pi) int u . (u_r x u_theta) dr dtheta
// on a polar tensor grid, u(r,theta) = e^{m theta R} v(r).
double degree_quadrature_oracle(const SphereField& f) {
  const int ntheta = 64;
  const double dtheta = 2.0 * M_PI / ntheta;
  const auto& g = f.grid;
  RealVec radial(g.size(), 0.0);
  const std::size_t n = g.size();
  RealVec c1(n), c2(n), c3(n);
  for (std::size_t i = 0; i < n; ++i) {
    c1[i] = f.v[i].x;
    c2[i] = f.v[i].y;
    c3[i] = f.v[i].z;
  }
  auto d1 = deriv1(g, c1);
  auto d2 = deriv1(g, c2);
  auto d3 = deriv1(g, c3);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int k = 0; k < ntheta; ++k) {
      const double th = k * dtheta;
      const double a = f.m * th;
      Vec3 u = rotate_z(f.v[i], a);
      Vec3 ur = rotate_z({d1[i], d2[i], d3[i]}, a);
      Vec3 uth = rotate_z(rot_generator(f.v[i]), a) * double(f.m);
      acc += u.dot(ur.cross(uth)) * dtheta;
    }
    radial[i] = acc;
  }
  return -integrate(g, radial) / (4.0 * M_PI);
}

RadialGrid default_grid() { return RadialGrid::geometric(1e-4, 1e4, 4096); }

}  // namespace

TEST_CASE("harmonic profile values") {
  auto g = default_grid();
  auto Q1 = harmonic_profile(1, g);
  Q1.check_unit();
  // m=1, r=1 -> (1, 0, 0)
  CHECK(h1m(1, 1.0) == doctest::Approx(1.0));
  CHECK(h3m(1, 1.0) == doctest::Approx(0.0));
  // limits by tags
  CHECK(pole_vec(Q1.origin_pole).z == doctest::Approx(-1.0));
  CHECK(pole_vec(Q1.infinity_pole).z == doctest::Approx(1.0));
  // m=2, r=1 -> (1, 0, 0)
  CHECK(h1m(2, 1.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(harmonic_profile(0, g), Error);
}

TEST_CASE("energy of Q^m is 4 pi m within 0.1%") {
  auto g = default_grid();
  for (int m : {1, 2, 3}) {
    auto Q = harmonic_profile(m, g);
    CHECK(energy(Q) == doctest::Approx(4.0 * M_PI * m).epsilon(1e-3));
  }
  auto k = constant_field(Pole::Up, g);
  CHECK(energy(k) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("energy converges with order >= 2 under refinement") {
  // coarse enough that quadrature error dominates the window-truncation floor
  double e_coarse = std::abs(energy(harmonic_profile(1, RadialGrid::geometric(1e-4, 1e4, 256))) - 4.0 * M_PI);
  double e_fine = std::abs(energy(harmonic_profile(1, RadialGrid::geometric(1e-4, 1e4, 512))) - 4.0 * M_PI);
  CHECK(e_coarse / e_fine > 4.0);
}

TEST_CASE("degree from tags, checked against the 2-D quadrature oracle") {
  auto g = default_grid();
  for (int m : {1, 2}) {
    auto Q = harmonic_profile(m, g);
    CHECK(degree(Q) == doctest::Approx(double(m)));
    CHECK(degree_quadrature_oracle(Q) == doctest::Approx(double(m)).epsilon(1e-4));
  }
  CHECK(degree(constant_field(Pole::Up, g)) == doctest::Approx(0.0));

  // reflected profile v3 -> -v3 has degree -1 (oracle check)
  auto R = harmonic_profile(1, g);
  for (auto& p : R.v) p.z = -p.z;
  R.origin_pole = Pole::Up;
  R.infinity_pole = Pole::Down;
  CHECK(degree(R) == doctest::Approx(-1.0));
  CHECK(degree_quadrature_oracle(R) == doctest::Approx(-1.0).epsilon(1e-4));

  // non-compactified field errors
  auto g2 = RadialGrid::geometric(0.5, 2.0, 64);
  auto bad = harmonic_profile(1, g2);
  CHECK_THROWS_WITH_AS(degree(bad), doctest::Contains("non-compactified"), Error);
}

TEST_CASE("stereographic projection point values and round trip") {
  CHECK(stereo_point({0.0, 0.0, 1.0}) == Complex{0.0, 0.0});
  CHECK(stereo_point({1.0, 0.0, 0.0}) == Complex{1.0, 0.0});

  auto g = RadialGrid::geometric(1e-3, 1e3, 512);
  auto Q = harmonic_profile(1, g);
  auto back = stereo_inv(stereo(Q));
  double err = 0.0;
  for (std::size_t i = 0; i < Q.size(); ++i) err = std::max(err, (back.v[i] - Q.v[i]).norm());
  CHECK(err <= 1e-12);

  // stereographic image of Q is 1/r (up to cancellation noise in 1+v3)
  auto w = stereo(Q);
  for (std::size_t i = 0; i < w.w.size(); i += 37)
    CHECK(std::abs(w.w[i] - 1.0 / g[i]) <= 1e-10 / g[i]);

  SphereField south = constant_field(Pole::Down, g);
  CHECK_THROWS_WITH_AS(stereo(south), doctest::Contains("south pole"), Error);
}

TEST_CASE("frame decompose/reconstruct") {
  auto g = RadialGrid::geometric(1e-2, 1e2, 256);
  auto Q = harmonic_profile(1, g);
  auto c = frame_decompose(Q);
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(std::abs(c.z1[i]) <= 1e-14);
    CHECK(std::abs(c.z2[i]) <= 1e-14);
    CHECK(std::abs(c.gamma[i]) <= 1e-14);
  }

  // gamma = sqrt(1-|z|^2) - 1 for unit fields in the chart
  FrameCoords p;
  p.grid = g;
  p.z1.assign(g.size(), 0.1);
  p.z2.assign(g.size(), 0.0);
  p.gamma.assign(g.size(), std::sqrt(0.99) - 1.0);
  auto V = frame_reconstruct(p);
  V.check_unit(1e-12);
  CHECK(p.gamma[0] == doctest::Approx(-0.0050126).epsilon(1e-3));

  auto c2 = frame_decompose(V);
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(c2.z1[i] == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(std::abs(c2.gamma[i] - (std::sqrt(0.99) - 1.0)) <= 1e-12);
  }
}

TEST_CASE("group action scaling and rotation") {
  auto g = RadialGrid::geometric(1e-4, 1e4, 1024);
  auto Q = harmonic_profile(1, g);
  // t=1: identity
  Vec3 a = group_action(Q, 1.5, 0.7, 1.0, 2.0);
  Vec3 b = eval(Q, 2.0);
  CHECK((a - b).norm() <= 1e-12);
  // nu=1, t=0.25 -> lambda = 8
  Vec3 c = group_action(Q, 1.0, 0.0, 0.25, 0.5);
  Vec3 d = eval(Q, 8.0 * 0.5);
  CHECK((c - d).norm() <= 1e-12);
  // e^{alpha R} k = k
  Vec3 k = rotate_z(kPoleUp, 1.234);
  CHECK((k - kPoleUp).norm() == doctest::Approx(0.0));
}

TEST_CASE("static-solution identities hold on the grid") {
  auto g = RadialGrid::geometric(1e-2, 1e2, 1024);
  const std::size_t n = g.size();
  RealVec H1(n), H3(n);
  for (std::size_t i = 0; i < n; ++i) {
    H1[i] = h1(g[i]);
    H3[i] = h3(g[i]);
  }
  auto dH1 = deriv1(g, H1);
  auto dH3 = deriv1(g, H3);
  double e1 = 0.0, e2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    e1 = std::max(e1, std::abs(dH1[i] + H1[i] * H3[i] / g[i]));
    e2 = std::max(e2, std::abs(dH3[i] - H1[i] * H1[i] / g[i]));
  }
  CHECK(e1 <= 1e-8);
  CHECK(e2 <= 1e-8);

  // Delta Q + R^2 Q / r^2 = kappa Q componentwise
  auto L1 = radial_laplacian(g, H1);
  auto L3 = radial_laplacian(g, H3);
  double e3 = 0.0;
  for (std::size_t i = 3; i + 3 < n; ++i) {  // interior: one-sided ends excluded
    const double r = g[i];
    e3 = std::max(e3, std::abs(L1[i] - H1[i] / (r * r) - kappa(r) * H1[i]));
    e3 = std::max(e3, std::abs(L3[i] - kappa(r) * H3[i]));
  }
  CHECK(e3 <= 1e-7);
}
