#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "llflow/harmonic.hpp"
#include "llflow/inner.hpp"
#include "llflow/quadrature.hpp"

using namespace llflow;

namespace {

Params params_default() { return Params::make(0.5, 1.5, 0.0, 2); }

// Exact derivatives of the kernel elements (quotient rule for h2).
double h1p(double s) { return -h1(s) * h3(s) / s; }
double h2p(double s) {
  const double num = s * s * s * s + 4.0 * s * s * std::log(s) - 1.0;
  const double nump = 4.0 * s * s * s + 8.0 * s * std::log(s) + 4.0 * s;
  const double den = s * s * s + s;
  const double denp = 3.0 * s * s + 1.0;
  return (nump * den - num * denp) / (den * den);
}

double rel_sup(const RadialGrid& g, const ComplexVec& num, const ComplexVec& den,
               double rlo, double rhi) {
  double nmax = 0.0, dmax = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] < rlo || g[i] > rhi) continue;
    nmax = std::max(nmax, std::abs(num[i]));
    dmax = std::max(dmax, std::abs(den[i]));
  }
  return nmax / dmax;
}

// Vector-flow residual of V(rho, t) = Q + Z against the rescaled equation
//   t^{1+2nu} V_t + alpha0 t^{2nu} R V - t^{2nu}(nu+1/2) rho V_rho
//     = a1 V x H - a2 V x (V x H),  H = Delta V + R^2 V / rho^2.
// Completely independent of the projected z-equation machinery.
double vector_flow_residual_sup(const InnerStack& st, double t, double rho_lo, double rho_hi) {
  const auto& g = st.grid;
  const std::size_t n = g.size();
  std::array<RealVec, 3> comp;
  for (auto& c : comp) c.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vec3 V = v_inner(st, t, g[i]);
    comp[0][i] = V.x;
    comp[1][i] = V.y;
    comp[2][i] = V.z;
  }
  std::array<RealVec, 3> d1c, lapc;
  for (int c = 0; c < 3; ++c) {
    d1c[std::size_t(c)] = deriv1(g, comp[std::size_t(c)]);
    lapc[std::size_t(c)] = radial_laplacian(g, comp[std::size_t(c)]);
  }
  const Params& p = st.params;
  const double t2nu = std::pow(t, 2.0 * p.nu);
  double sup = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double rho = g[i];
    if (rho < rho_lo || rho > rho_hi) continue;
    const Vec3 V{comp[0][i], comp[1][i], comp[2][i]};
    const Vec3 Vt = v_inner_dt(st, t, rho);
    const Vec3 Vr{d1c[0][i], d1c[1][i], d1c[2][i]};
    const Vec3 H{lapc[0][i] - V.x / (rho * rho), lapc[1][i] - V.y / (rho * rho), lapc[2][i]};
    const Vec3 rhs = p.a1() * V.cross(H) - p.a2 * V.cross(V.cross(H));
    const Vec3 lhs = std::pow(t, 1.0 + 2.0 * p.nu) * Vt + p.alpha0 * t2nu * rot_generator(V) -
                     t2nu * (p.nu + 0.5) * rho * Vr;
    sup = std::max(sup, (lhs - rhs).norm());
  }
  return sup;
}

}  // namespace

TEST_CASE("apply_L annihilates the explicit kernel h1, h2") {
  auto g = RadialGrid::geometric(1e-3, 1e3, 1152);
  const std::size_t n = g.size();
  ComplexVec H1(n), H2(n);
  for (std::size_t i = 0; i < n; ++i) {
    H1[i] = h1(g[i]);
    H2[i] = h2(g[i]);
  }
  auto L1 = apply_L(g, H1);
  auto L2 = apply_L(g, H2);
  // L h = 0 is a cancellation of O(f/rho^2) terms; measure the sup residual
  // against the sup of that term scale over the window.
  double n1 = 0.0, n2 = 0.0, s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = g[i];
    if (r < 1e-2 || r > 1e2) continue;
    const double pot = std::abs(1.0 - 2.0 * sq(h1(r))) / (r * r);
    n1 = std::max(n1, std::abs(L1[i]));
    n2 = std::max(n2, std::abs(L2[i]));
    s1 = std::max(s1, pot * std::abs(H1[i]));
    s2 = std::max(s2, pot * std::abs(H2[i]));
  }
  CHECK(n1 / s1 <= 1e-6);
  CHECK(n2 / s2 <= 1e-6);
}

TEST_CASE("apply_L on rho^3 equals the closed form") {
  auto g = RadialGrid::geometric(1e-2, 1e2, 512);
  ComplexVec f(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) f[i] = std::pow(g[i], 3);
  auto Lf = apply_L(g, f);
  for (std::size_t i = 4; i + 4 < g.size(); i += 17) {
    const double r = g[i];
    const double expect = -9.0 * r + (1.0 - 2.0 * sq(h1(r))) * r;
    CHECK(std::abs(Lf[i] - expect) <= 1e-6 * std::max(1.0, std::abs(expect)));
  }
}

TEST_CASE("Wronskian: s (h1 h2' - h1' h2) = 4") {
  for (double s : {0.1, 0.5, 1.0, 3.0, 10.0, 100.0}) {
    const double w = s * (h1(s) * h2p(s) - h1p(s) * h2(s));
    CHECK(w == doctest::Approx(4.0).epsilon(1e-8));
  }
}

TEST_CASE("solve_L: plug-back residual and paper example constants") {
  auto p = params_default();
  auto g = RadialGrid::geometric(1e-3, 3e4, 720);
  const std::size_t n = g.size();

  // k=1 example forcing as displayed in the source construction
  ComplexVec F(n);
  const Complex K = p.a1() * p.d() / p.ac();
  for (std::size_t i = 0; i < n; ++i) F[i] = -K * h1(g[i]);
  auto z1 = solve_L(g, F);

  // L z = F to 1e-6 relative (L2 over a wide interior window)
  auto Lz = apply_L(g, z1);
  ComplexVec diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = Lz[i] - F[i];
  CHECK(rel_sup(g, diff, F, 1e-2, 1e2) <= 1e-6);

  // origin order 3 +- 0.2 via log-log slope
  double s0 = std::log(std::abs(interp(g, z1, 3e-3)));
  double s1 = std::log(std::abs(interp(g, z1, 3e-2)));
  CHECK(std::abs((s1 - s0) / std::log(10.0) - 3.0) <= 0.2);

  // far-field rho ln rho coefficient equals K, and c_{1,0} = -c_{1,1}
  std::vector<double> ys;
  ComplexVec fs;
  for (std::size_t i = 0; i < n; ++i)
    if (g[i] >= 1e2 && g[i] <= 1e4) {
      ys.push_back(g[i]);
      fs.push_back(z1[i]);
    }
  auto fit = fit_series(ys, fs,
                        {{1.0, 1}, {1.0, 0}, {-1.0, 0}, {-1.0, 1}, {-1.0, 2}, {-3.0, 0},
                         {-3.0, 1}, {-3.0, 2}});
  CHECK(std::abs(fit.coeffs[0] - K) <= 0.01 * std::abs(K));
  CHECK(std::abs(fit.coeffs[1] + fit.coeffs[0]) <= 0.01 * std::abs(K));
}

TEST_CASE("assemble_rhs_Fk: k=1 errors; zero lower layers give the transport-only form") {
  auto p = params_default();
  auto st = build_stack(p, 2);
  CHECK_THROWS_WITH_AS(assemble_rhs_Fk(st, 1), doctest::Contains("closed form"), Error);

  // zero out z^1: F_2 must vanish identically (F, Ftilde at least quadratic)
  InnerStack z0 = st;
  for (auto& v : z0.z[1]) v = Complex{};
  for (auto& v : z0.dz[1]) v = Complex{};
  for (auto& v : z0.d2z[1]) v = Complex{};
  auto F2 = assemble_rhs_Fk(z0, 2);
  double sup = 0.0;
  for (auto& v : F2) sup = std::max(sup, std::abs(v));
  CHECK(sup == doctest::Approx(0.0));
}

TEST_CASE("assemble_rhs_Fk: quadratic part scales like eps^2 (Richardson oracle)") {
  auto p = params_default();
  auto st = build_stack(p, 2);
  auto scaled_stack = [&](double eps) {
    InnerStack s = st;
    for (auto* arr : {&s.z, &s.dz, &s.d2z})
      for (auto& v : (*arr)[1]) v *= eps;
    return s;
  };
  auto F1 = assemble_rhs_Fk(scaled_stack(1.0), 2);
  auto F2 = assemble_rhs_Fk(scaled_stack(0.5), 2);
  auto F4 = assemble_rhs_Fk(scaled_stack(0.25), 2);
  // Q(eps) = eps * linear + eps^2 * quad: Q(1)-2Q(1/2) = quad/2, Q(1/2)-2Q(1/4) = quad/8
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < F1.size(); ++i) {
    if (st.grid[i] < 1e-1 || st.grid[i] > 1e2) continue;
    const Complex a = F1[i] - 2.0 * F2[i];
    const Complex b = F2[i] - 2.0 * F4[i];
    num = std::max(num, std::abs(a - 4.0 * b));
    den = std::max(den, std::abs(a));
  }
  CHECK(num / den < 1e-8);
}

TEST_CASE("build_stack: origin orders 2k+1 and tail log-power bound") {
  auto p = params_default();
  auto st = build_stack(p, 2);
  CHECK(std::abs(st.origin_orders[1] - 3.0) <= 0.2);
  CHECK(std::abs(st.origin_orders[2] - 5.0) <= 0.2);

  // z^2 tail is fully described by log powers l <= 4 (Lemma 2.2 lattice):
  // the stored fit on that lattice reproduces z^2 to small relative residual,
  // leaving no room for an l=5 component
  CHECK(st.tails[2].cols() <= 5);
  CHECK(st.tail_residuals[2] <= 1e-6);
}

TEST_CASE("build_stack: Schrodinger specialization a1=1,a2=0 matches the closed form") {
  Params p = Params::make(0.0, 1.5, 0.0, 2);  // a2=0 -> a1=1, ac=1
  auto st = build_stack(p, 1);
  // z^1 = -d * (1/4) int [h1 h2' - ...] h1 s ds with ac=1; oracle: solve_L directly
  ComplexVec F(st.grid.size());
  for (std::size_t i = 0; i < st.grid.size(); ++i) F[i] = -p.d() * h1(st.grid[i]);
  auto oracle = solve_L(st.grid, F);
  double sup = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < st.grid.size(); ++i) {
    sup = std::max(sup, std::abs(oracle[i] - st.z[1][i]));
    ref = std::max(ref, std::abs(oracle[i]));
  }
  CHECK(sup / ref <= 1e-12);
}

TEST_CASE("uniqueness: doubling grid density changes z^k only at quadrature order") {
  auto p = params_default();
  // nested grids: 2n-1 nodes doubles the interval count
  auto g1 = RadialGrid::geometric(1e-3, 3e4, 2881);
  auto g2 = RadialGrid::geometric(1e-3, 3e4, 5761);
  auto s1 = build_stack(p, 2, &g1);
  auto s2 = build_stack(p, 2, &g2);
  double sup = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < g1.size(); ++i) {
    sup = std::max(sup, std::abs(s1.z[2][i] - s2.z[2][2 * i]));
    ref = std::max(ref, std::abs(s2.z[2][2 * i]));
  }
  CHECK(sup / ref < 1e-5);
}

TEST_CASE("vector-flow oracle: V_in satisfies the rescaled flow to high order in t") {
  // The decisive check of the k=1 forcing normalization: with the forcing
  // d t^{2nu} h1 the full 3-vector residual of V_in against the rescaled
  // Landau-Lifshitz equation drops at the t^{4nu} truncation rate; a k=1
  // layer scaled by a1 != 1 would leave an O(t^{2nu}) defect.
  auto p = params_default();
  auto st = build_stack(p, 2);

  // probe where the truncation term dominates the discretization floor
  const double t1 = 0.6, t2 = 0.3;
  const double r1 = vector_flow_residual_sup(st, t1, 0.05, 1.0);
  const double r2 = vector_flow_residual_sup(st, t2, 0.05, 1.0);
  // truncation at N=2 decays like t^{2nu(N+1)} = t^9 (measured ~8.9)
  const double slope = std::log(r1 / r2) / std::log(t1 / t2);
  CHECK(slope > 2.0 * p.nu + 2.0);

  // scaling the k=1 layer by a1 (the transcription variant) leaves an
  // O(t^{2nu}) defect: residual ~ |1 - a1| |d| h1 t^{2nu}
  InnerStack bad = st;
  for (auto* arr : {&bad.z, &bad.dz, &bad.d2z})
    for (auto& v : (*arr)[1]) v *= p.a1();
  const double b1 = vector_flow_residual_sup(bad, t1, 0.05, 1.0);
  const double b2 = vector_flow_residual_sup(bad, t2, 0.05, 1.0);
  const double bad_slope = std::log(b1 / b2) / std::log(t1 / t2);
  CHECK(bad_slope < 2.0 * p.nu + 1.0);  // stuck at the t^{2nu} defect
  CHECK(b1 > 10.0 * r1);
}

TEST_CASE("inner_residual: X_0 convention, N=1 leading power, report boundedness") {
  auto p = params_default();

  // at z = 0 (stack with zeroed layers), X reduces to d t^{2nu} h1 exactly
  auto st0 = build_stack(p, 1);
  for (auto* arr : {&st0.z, &st0.dz, &st0.d2z})
    for (auto& v : (*arr)[1]) v = Complex{};
  const double t = 1e-2;
  auto X0 = inner_residual_field(st0, t);
  const double t2nu = std::pow(t, 2.0 * p.nu);
  double err = 0.0;
  for (std::size_t i = 0; i < st0.grid.size(); ++i) {
    const Complex expect = p.d() * t2nu * h1(st0.grid[i]);
    err = std::max(err, std::abs(X0[i] - expect));
  }
  CHECK(err <= 1e-12 * t2nu);

  // N=1: leading t-power of X_1 on a fixed rho-window is ~ 4 nu
  auto st1 = build_stack(p, 1);
  auto supX = [&](double tt) {
    auto X = inner_residual_field(st1, tt);
    double s = 0.0;
    for (std::size_t i = 0; i < st1.grid.size(); ++i)
      if (st1.grid[i] >= 0.5 && st1.grid[i] <= 3.0) s = std::max(s, std::abs(X[i]));
    return s;
  };
  // probe above the solver's cancellation floor of the tau^1 layer
  const double slope = std::log(supX(0.2) / supX(0.05)) / std::log(4.0);
  CHECK(std::abs(slope - 4.0 * p.nu) <= 0.4);

  // report: the (E2.27)-shaped ratio stays bounded (the bound is not
  // violated at any probed t; it is not sharp, so no growth check below
  // the numerical floor)
  auto st2 = build_stack(p, 2);
  const double r3 = inner_residual(st2, 0.3).sup_ratio;
  const double r1 = inner_residual(st2, 0.1).sup_ratio;
  CHECK(r1 <= 10.0 * r3);  // signal-dominated decade: non-growth
  // below t ~ 1e-3 the computable X sits on the solver noise floor
  // (~1e-9 relative of the tau^1 layer), so the bound is probed above it
  for (double tt : {1e-1, 1e-2})
    CHECK(inner_residual(st2, tt).sup_ratio <= 1.0);
}

TEST_CASE("inner norm-suite shapes: selected Lemma 2.3 exponents within 0.3") {
  auto p = params_default();
  auto st = build_stack(p, 2);
  const auto& g = st.grid;

  // Z_in = V_in - Q as 3-vector; norms over rho <= 10 t^{-nu+eps1}
  auto norms_at = [&](double t) {
    const double rho_max = 10.0 * std::pow(t, -p.nu + p.eps1);
    std::array<RealVec, 3> c;
    for (auto& v : c) v.assign(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      Vec3 V = v_inner(st, t, g[i]);
      c[0][i] = V.x - h1(g[i]);
      c[1][i] = V.y;
      c[2][i] = V.z - h3(g[i]);
    }
    std::array<RealVec, 3> d;
    for (int k = 0; k < 3; ++k) d[std::size_t(k)] = deriv1(g, c[std::size_t(k)]);
    RealVec dens(g.size(), 0.0);
    double sup_rdz = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g[i] > rho_max) break;
      const double dz2 = sq(d[0][i]) + sq(d[1][i]) + sq(d[2][i]);
      dens[i] = dz2 * g[i];
      sup_rdz = std::max(sup_rdz, g[i] * std::sqrt(dz2));
    }
    return std::pair<double, double>{std::sqrt(integrate(g, dens)), sup_rdz};
  };
  auto [l2a, supa] = norms_at(1e-2);
  auto [l2b, supb] = norms_at(1e-3);
  const double e_l2 = std::log(l2a / l2b) / std::log(10.0);
  const double e_sup = std::log(supa / supb) / std::log(10.0);
  // (E2.30)/(E2.32) are upper bounds <= C t^nu; the achieved rate is
  // faster (~ t^{nu+eps1}); check non-violation one-sided
  CHECK(e_l2 >= p.nu - 0.3);
  CHECK(e_sup >= p.nu - 0.3);
}
