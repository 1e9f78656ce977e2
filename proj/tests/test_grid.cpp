#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "llflow/fd.hpp"
#include "llflow/grid.hpp"
#include "llflow/quadrature.hpp"

using namespace llflow;

TEST_CASE("geometric grid construction and validation") {
  auto g = RadialGrid::geometric(1e-3, 1e3, 601);
  CHECK(g.size() == 601);
  CHECK(g.rmin() == doctest::Approx(1e-3));
  CHECK(g.rmax() == doctest::Approx(1e3));
  CHECK(g.spacing() == Spacing::Geometric);
  CHECK(g.nodes_per_decade() >= 16);
  // constant ratio
  double ratio = g[1] / g[0];
  for (std::size_t i = 1; i + 1 < g.size(); ++i)
    CHECK(g[i + 1] / g[i] == doctest::Approx(ratio).epsilon(1e-12));

  CHECK_THROWS_AS(RadialGrid::geometric(0.0, 1.0, 32), Error);
  CHECK_THROWS_AS(RadialGrid::geometric(1e-6, 1e6, 24), Error);  // too sparse
}

TEST_CASE("uniform grid and from_nodes inference") {
  auto g = RadialGrid::uniform(0.5, 2.5, 21);
  CHECK(g.spacing() == Spacing::Uniform);
  CHECK(g.step() == doctest::Approx(0.1));

  auto gg = RadialGrid::from_nodes(RadialGrid::geometric(0.1, 10.0, 64).nodes());
  CHECK(gg.spacing() == Spacing::Geometric);
}

TEST_CASE("quadrature: exact on simple closed forms") {
  auto g = RadialGrid::geometric(1e-4, 1e4, 2048);
  RealVec f(g.size());
  // int_0^inf r/(1+r^2)^2 dr = 1/2 (full-line value; window truncation ~1e-8)
  for (std::size_t i = 0; i < g.size(); ++i) f[i] = g[i] / sq(1.0 + sq(g[i]));
  CHECK(integrate(g, f) == doctest::Approx(0.5).epsilon(1e-6));

  auto u = RadialGrid::uniform(0.0 + 1e-12, 1.0, 501);
  RealVec p(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) p[i] = sq(u[i]) * u[i];  // r^3
  CHECK(integrate(u, p) == doctest::Approx(0.25).epsilon(1e-8));
}

TEST_CASE("cumulative quadrature matches antiderivative") {
  auto g = RadialGrid::geometric(0.01, 100.0, 800);
  RealVec f(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) f[i] = std::exp(-g[i]);
  auto F = cumulative(g, f);
  for (std::size_t i = 0; i < g.size(); i += 97) {
    double exact = std::exp(-g[0]) - std::exp(-g[i]);
    CHECK(F[i] == doctest::Approx(exact).epsilon(1e-7));
  }
}

TEST_CASE("derivatives are 4th order on geometric grids") {
  double err_c = 0.0, err_f = 0.0;
  for (int pass = 0; pass < 2; ++pass) {
    std::size_t n = pass == 0 ? 200 : 400;
    auto g = RadialGrid::geometric(0.1, 10.0, n);
    RealVec f(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) f[i] = std::sin(g[i]);
    auto d1 = deriv1(g, f);
    auto d2 = deriv2(g, f);
    double e = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      e = std::max(e, std::abs(d1[i] - std::cos(g[i])));
      e = std::max(e, std::abs(d2[i] + std::sin(g[i])));
    }
    (pass == 0 ? err_c : err_f) = e;
  }
  // halving h should shrink the error by ~16; allow slack for end stencils
  CHECK(err_c / err_f > 10.0);
}

TEST_CASE("interpolation is locally cubic") {
  auto g = RadialGrid::geometric(0.1, 10.0, 512);
  RealVec f(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) f[i] = std::cos(g[i]);
  for (double r : {0.173, 1.41, 7.77})
    CHECK(interp(g, f, r) == doctest::Approx(std::cos(r)).epsilon(1e-7));
}
