#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "llflow/glue.hpp"
#include "llflow/harmonic.hpp"

using namespace llflow;

namespace {
const GluedProfile& profile2() {
  static GluedProfile gp = build_glued(Params::make(0.5, 1.5, 0.0, 2), 2);
  return gp;
}
}  // namespace

TEST_CASE("region membership and unit modulus") {
  const auto& gp = profile2();
  const double t = 1e-2;
  // below rho_a/2 the output equals V_in exactly
  const double rho = 0.25 * std::pow(t, -gp.params.nu + gp.params.eps1);
  const Vec3 a = glued_V(gp, t, rho);
  const Vec3 b = v_inner(*gp.inner, t, rho);
  CHECK((a - b).norm() == 0.0);

  // |u| = 1 across scattered (rho, t)
  for (double tt : {3e-3, 1e-2, 3e-2})
    for (double rr : {0.01, 0.5, 3.0, 40.0, 500.0, 2e4}) {
      const Vec3 v = glued_V(gp, tt, rr);
      CHECK(std::abs(v.norm() - 1.0) <= 1e-10);
    }
}

TEST_CASE("blend continuity across the inner switch") {
  const auto& gp = profile2();
  const double t = 1e-2;
  const double rho_a = std::pow(t, -gp.params.nu + gp.params.eps1);
  // jump of the blend at 16 points around the switch radius is bounded by
  // the measured overlap mismatch of the two regional representations
  double worst_jump = 0.0, overlap = 0.0;
  for (int i = 0; i < 16; ++i) {
    const double rho = rho_a * (0.4 + 0.05 * i);
    const Complex a = w_inner(*gp.inner, t, std::pow(t, gp.params.nu) * rho);
    const Complex b = w_selfsim(*gp.ss, gp.N, t, std::pow(t, gp.params.nu) * rho);
    overlap = std::max(overlap, std::abs(a - b));
    const Vec3 lo = glued_V(gp, t, rho * (1.0 - 1e-9));
    const Vec3 hi = glued_V(gp, t, rho * (1.0 + 1e-9));
    worst_jump = std::max(worst_jump, (lo - hi).norm());
  }
  CHECK(worst_jump <= 4.0 * overlap + 1e-12);
}

TEST_CASE("exact time derivative matches finite differences") {
  const auto& gp = profile2();
  const double t = 1e-2;
  for (double rho : {0.5, 30.0, 1.5e3, 2e4}) {
    const double h = 1e-5 * t;
    const Vec3 fd = (glued_V(gp, t + h, rho) - glued_V(gp, t - h, rho)) * (1.0 / (2.0 * h));
    const Vec3 ex = glued_V_dt(gp, t, rho);
    CHECK((fd - ex).norm() <= 1e-5 * std::max(1e-8, fd.norm()));
  }
}

TEST_CASE("global residual: dt cross-check and rotation invariance") {
  const auto& gp = profile2();
  auto rep = global_residual(gp, 5e-3);
  CHECK(rep.dt_crosscheck <= 1e-6);
  CHECK(std::isfinite(rep.l2));
  CHECK(std::isfinite(rep.h3));
  CHECK(std::isfinite(rep.weighted));

  // residual norms are invariant under u -> e^{cR} u: the norms only see
  // |components|, and rotation acts isometrically on (v1,v2)
  auto f = glued_field(gp, 5e-3, RadialGrid::geometric(1e-6, 5.0, 512));
  double before = 0.0, after = 0.0;
  for (const auto& v : f.v) before += sq(v.x) + sq(v.y) + sq(v.z);
  for (const auto& v : f.v) {
    const Vec3 r = rotate_z(v, 0.7);
    after += sq(r.x) + sq(r.y) + sq(r.z);
  }
  CHECK(std::abs(before - after) <= 1e-10 * before);
}

TEST_CASE("global residual scaling in t (the E2.11 stand-in)") {
  const auto& gp = profile2();
  std::vector<double> ts{1e-2, 5.6e-3, 3.2e-3, 1.8e-3, 1e-3}, ls;
  for (double t : ts) ls.push_back(global_residual(gp, t).l2);
  auto fit = fit_power_law(ts, ls);
  MESSAGE("N=2 fitted L2 slope: ", fit.exponent);
  CHECK(fit.exponent >= 2.0 - 0.5);
}

TEST_CASE("estimate suite exponents") {
  const auto& gp = profile2();
  auto rows = estimate_suite(gp, {1e-2, 4.6e-3, 2.2e-3, 1e-3});
  for (const auto& row : rows) {
    MESSAGE(row.name, " fitted ", row.fitted_exponent, " stated ", row.stated_exponent);
    CHECK(row.ok);
  }
}

TEST_CASE("snapshot Cauchy behaviour toward the t->0 limit") {
  const auto& gp = profile2();
  // H1-type distance between t and t/2 snapshots decreases with t
  auto dist = [&](double t) {
    auto g = RadialGrid::geometric(1e-4, 5.0, 1024);
    auto a = glued_field(gp, t, g);
    auto b = glued_field(gp, t / 2.0, g);
    std::vector<RealVec> d(3, RealVec(g.size()));
    for (std::size_t i = 0; i < g.size(); ++i) {
      // compare the lambda-frame profiles in physical variables
      d[0][i] = a.v[i].x - b.v[i].x;
      d[1][i] = a.v[i].y - b.v[i].y;
      d[2][i] = a.v[i].z - b.v[i].z;
    }
    auto rep = sobolev_norms(g, d, 1);
    return std::sqrt(sq(rep.get("L2")) + sq(rep.get("H1")));
  };
  const double d1 = dist(2e-2), d2 = dist(5e-3), d3 = dist(1.25e-3);
  CHECK(d2 < d1);
  CHECK(d3 < d2);
}

TEST_CASE("blowup-rate fit on the constructed family") {
  const auto& gp = profile2();
  std::vector<double> ts{3e-2, 1.7e-2, 9.4e-3, 5.3e-3, 3e-3}, rs;
  for (double t : ts) {
    auto g = RadialGrid::geometric(1e-7, 1.0, 1536);
    rs.push_back(detect_scale(glued_field(gp, t, g)));
  }
  auto fit = fit_power_law(ts, rs);
  CHECK(std::abs(fit.exponent - (0.5 + gp.params.nu)) <= 0.01 * (0.5 + gp.params.nu));
}
