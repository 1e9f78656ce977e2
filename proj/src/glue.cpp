#include "llflow/glue.hpp"

#include <cmath>

#include "llflow/harmonic.hpp"
#include "llflow/quadrature.hpp"
#include "llflow/remote.hpp"

namespace llflow {

GluedProfile build_glued(const Params& p, int N) {
  require(N >= 1, "build_glued: need N >= 1");
  GluedProfile gp;
  gp.params = p;
  gp.N = N;
  auto stack = std::make_shared<InnerStack>(build_stack(p, N + 1));
  auto data = derive_matching_data(*stack, N);
  auto fam = std::make_shared<SelfSimFamily>(build_selfsim(p, N, data));
  auto beta = farfield_tables(*fam);
  auto rem = std::make_shared<RemoteFamily>(build_remote(p, beta, N));
  gp.inner = stack;
  gp.ss = fam;
  gp.rem = rem;
  return gp;
}

namespace {

struct Blend {
  double wa, wb;        // theta(t^{nu-eps1} rho), theta(t^{nu+eps2} rho)
  double dwa_dt, dwb_dt;
};

Blend blend_at(const Params& p, double t, double rho) {
  Blend b;
  const double xa = std::pow(t, p.nu - p.eps1) * rho;
  const double xb = std::pow(t, p.nu + p.eps2) * rho;
  b.wa = cutoff_theta(xa);
  b.wb = cutoff_theta(xb);
  b.dwa_dt = cutoff_theta_d1(xa) * (p.nu - p.eps1) * xa / t;
  b.dwb_dt = cutoff_theta_d1(xb) * (p.nu + p.eps2) * xb / t;
  return b;
}

}  // namespace

Complex glued_W(const GluedProfile& gp, double t, double rho) {
  const Params& p = gp.params;
  const Blend b = blend_at(p, t, rho);
  Complex out{};
  if (b.wa > 0.0) out += b.wa * w_inner(*gp.inner, t, std::pow(t, p.nu) * rho);
  if ((1.0 - b.wa) * b.wb > 0.0)
    out += (1.0 - b.wa) * b.wb * w_selfsim(*gp.ss, gp.N, t, std::pow(t, p.nu) * rho);
  if (1.0 - b.wb > 0.0)
    out += (1.0 - b.wb) * w_remote(*gp.rem, t, std::pow(t, p.nu + 0.5) * rho);
  return out;
}

Vec3 glued_V(const GluedProfile& gp, double t, double rho) {
  if (rho <= gp.rho_switch(t)) return v_inner(*gp.inner, t, rho);
  return stereo_inv_point(glued_W(gp, t, rho));
}

namespace {

// d/dt of the exterior composite at fixed rho
Complex glued_W_dt(const GluedProfile& gp, double t, double rho) {
  const Params& p = gp.params;
  const Blend b = blend_at(p, t, rho);
  const double y = std::pow(t, p.nu) * rho;
  const double rr = std::pow(t, p.nu + 0.5) * rho;

  // d/dt[wa Win + (1-wa) wb Wss + (1-wb) Wrm]
  //  = dwa (Win - wb Wss) + dwb ((1-wa) Wss - Wrm)
  //    + wa dWin + (1-wa) wb dWss + (1-wb) dWrm
  const Complex Win = (b.wa > 0.0 || b.dwa_dt != 0.0) ? w_inner(*gp.inner, t, y) : Complex{};
  const Complex Wss = ((1.0 - b.wa) * b.wb > 0.0 || b.dwa_dt != 0.0 || b.dwb_dt != 0.0)
                          ? w_selfsim(*gp.ss, gp.N, t, y)
                          : Complex{};
  const Complex Wrm = (1.0 - b.wb > 0.0 || b.dwb_dt != 0.0) ? w_remote(*gp.rem, t, rr) : Complex{};
  Complex out{};
  out += b.dwa_dt * (Win - b.wb * Wss);
  out += b.dwb_dt * ((1.0 - b.wa) * Wss - Wrm);
  if (b.wa > 0.0) {
    // W_in(t^nu rho, t) = stereo(V_in(rho,t)): exact chain through stereo
    const Vec3 V = v_inner(*gp.inner, t, rho);
    const Vec3 Vt = v_inner_dt(*gp.inner, t, rho);
    const double opz = 1.0 + V.z;
    const Complex num{V.x, V.y};
    const Complex dnum{Vt.x, Vt.y};
    out += b.wa * (dnum / opz - num * Vt.z / (opz * opz));
  }
  if ((1.0 - b.wa) * b.wb > 0.0) {
    const Complex dss = w_selfsim_dt(*gp.ss, gp.N, t, y) +
                        p.nu * std::pow(t, p.nu - 1.0) * rho * w_selfsim_dy(*gp.ss, gp.N, t, y);
    out += (1.0 - b.wa) * b.wb * dss;
  }
  if (1.0 - b.wb > 0.0) {
    const Complex drm = w_remote_dt(*gp.rem, t, rr) +
                        (p.nu + 0.5) * std::pow(t, p.nu - 0.5) * rho * w_remote_dr(*gp.rem, t, rr);
    out += (1.0 - b.wb) * drm;
  }
  return out;
}

}  // namespace

Vec3 glued_V_dt(const GluedProfile& gp, double t, double rho) {
  if (rho <= gp.rho_switch(t)) return v_inner_dt(*gp.inner, t, rho);
  const Complex W = glued_W(gp, t, rho);
  const Complex Wt = glued_W_dt(gp, t, rho);
  // d stereo^{-1}: v = (2Re W, 2Im W, 1-|W|^2)/(1+|W|^2)
  const double n = std::norm(W);
  const double den = 1.0 + n;
  const double dn = 2.0 * (W.real() * Wt.real() + W.imag() * Wt.imag());
  Vec3 out;
  out.x = 2.0 * Wt.real() / den - 2.0 * W.real() * dn / (den * den);
  out.y = 2.0 * Wt.imag() / den - 2.0 * W.imag() * dn / (den * den);
  out.z = -dn / den - (1.0 - n) * dn / (den * den);
  return out;
}

SphereField glued_field(const GluedProfile& gp, double t, const RadialGrid& rgrid) {
  SphereField f;
  f.grid = rgrid;
  f.m = 1;
  f.v.resize(rgrid.size());
  const double lam = gp.params.lambda(t);
  const double al = gp.params.alpha(t);
  for (std::size_t i = 0; i < rgrid.size(); ++i)
    f.v[i] = rotate_z(glued_V(gp, t, lam * rgrid[i]).normalized(), al);
  f.origin_pole = Pole::Down;
  f.infinity_pole = Pole::Up;
  return f;
}

GlobalResidualReport global_residual(const GluedProfile& gp, double t) {
  const Params& p = gp.params;
  const double lam = p.lambda(t);
  // rho grid covering the inner core through the remote region
  const double rho_max = lam * 0.95 * gp.rem->rgrid.rmax();
  auto g = RadialGrid::geometric(1e-3, rho_max, std::size_t(192.0 * std::log10(rho_max / 1e-3)));

  const std::size_t n = g.size();
  std::array<RealVec, 3> V, Vt;
  for (auto& c : V) c.resize(n);
  for (auto& c : Vt) c.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 v = glued_V(gp, t, g[i]);
    const Vec3 vt = glued_V_dt(gp, t, g[i]);
    V[0][i] = v.x;
    V[1][i] = v.y;
    V[2][i] = v.z;
    Vt[0][i] = vt.x;
    Vt[1][i] = vt.y;
    Vt[2][i] = vt.z;
  }
  // FD cross-check of the time derivative at scattered nodes
  GlobalResidualReport rep;
  {
    const double h = 1e-4 * t;
    for (std::size_t i = n / 10; i < n; i += n / 7) {
      const Vec3 a = glued_V(gp, t + h, g[i]);
      const Vec3 bm = glued_V(gp, t - h, g[i]);
      const Vec3 fd = (a - bm) * (1.0 / (2.0 * h));
      const Vec3 ex{Vt[0][i], Vt[1][i], Vt[2][i]};
      const double scale = std::max(1e-12, fd.norm());
      rep.dt_crosscheck = std::max(rep.dt_crosscheck, (fd - ex).norm() / scale);
    }
  }

  std::array<RealVec, 3> d1c, lapc;
  for (int c = 0; c < 3; ++c) {
    d1c[std::size_t(c)] = deriv1(g, V[std::size_t(c)]);
    lapc[std::size_t(c)] = radial_laplacian(g, V[std::size_t(c)]);
  }
  // residual in V-variables (the lambda^2 scalings restored in the norms):
  //   R = -[alpha0 R V - (1/2+nu) rho V_rho + t V_t]/t + lambda_t... all terms
  // written as the v-equation residual divided by lambda^2:
  //   Rv(rho) = -t^{-1-2nu}[t^{1+2nu} V_t + alpha0 t^{2nu} RV - t^{2nu}(nu+1/2) rho V_rho]
  //           + a1 V x H - a2 V x (V x H),   H = Delta V + R^2 V / rho^2
  std::array<RealVec, 3> R;
  for (auto& c : R) c.resize(n);
  const double t2nu = std::pow(t, 2.0 * p.nu);
  for (std::size_t i = 0; i < n; ++i) {
    const double rho = g[i];
    const Vec3 v{V[0][i], V[1][i], V[2][i]};
    const Vec3 vt{Vt[0][i], Vt[1][i], Vt[2][i]};
    const Vec3 vr{d1c[0][i], d1c[1][i], d1c[2][i]};
    const Vec3 H{lapc[0][i] - v.x / (rho * rho), lapc[1][i] - v.y / (rho * rho), lapc[2][i]};
    const Vec3 lhs = std::pow(t, 1.0 + 2.0 * p.nu) * vt + p.alpha0 * t2nu * rot_generator(v) -
                     t2nu * (p.nu + 0.5) * rho * vr;
    const Vec3 rhs = p.a1() * v.cross(H) - p.a2 * v.cross(v.cross(H));
    const Vec3 res = (rhs - lhs) * std::pow(t, -1.0 - 2.0 * p.nu);  // v-equation residual / lambda^2
    R[0][i] = res.x;
    R[1][i] = res.y;
    R[2][i] = res.z;
  }
  // norms in x variables: r = rho/lambda
  // ||r||_{L2(dx)}^2 = 2 pi lambda^2 int |R|^2 rho drho  (r field = lambda^2 R(lambda r))
  RealVec dens(n), densw(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s2 = sq(R[0][i]) + sq(R[1][i]) + sq(R[2][i]);
    dens[i] = s2 * g[i];
    densw[i] = s2 * (1.0 + sq(g[i] / lam)) * g[i];
  }
  rep.l2 = lam * std::sqrt(2.0 * M_PI * integrate(g, dens));
  rep.weighted = lam * std::sqrt(2.0 * M_PI * integrate(g, densw));
  // H3: sum of the k-th derivative families with lambda^k scalings
  auto rep3 = sobolev_norms(g, {R[0], R[1], R[2]}, 3);
  double acc = sq(rep3.get("L2"));
  for (int m = 1; m <= 3; ++m)
    acc += sq(std::pow(lam, m) * rep3.get("H" + std::to_string(m)));
  rep.h3 = lam * std::sqrt(2.0 * M_PI) * std::sqrt(acc);
  return rep;
}

std::vector<EstimateRow> estimate_suite(const GluedProfile& gp, const std::vector<double>& ts) {
  const Params& p = gp.params;
  std::vector<std::vector<double>> series;  // per-norm series over ts
  std::vector<std::string> names{"sup_rho_drho_Z", "L2_k1l0_Z", "L2_k2_Z", "L2_k3_Z"};
  std::vector<double> stated{0.0, p.nu, 0.5 + p.nu, 2.0 * p.nu};
  series.resize(names.size());

  for (double t : ts) {
    const double rho_max = 10.0 * std::pow(t, -p.nu - p.eps2);
    auto g = RadialGrid::geometric(1e-2, rho_max,
                                   std::size_t(96.0 * std::log10(rho_max / 1e-2)));
    const std::size_t n = g.size();
    std::vector<RealVec> Z(3, RealVec(n));
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 v = glued_V(gp, t, g[i]);
      Z[0][i] = v.x - h1(g[i]);
      Z[1][i] = v.y;
      Z[2][i] = v.z - h3(g[i]);
    }
    auto rep = sobolev_norms(g, Z, 3);
    // sup of rho dZ/drho
    auto d0 = deriv1(g, Z[0]);
    auto d1v = deriv1(g, Z[1]);
    auto d2v = deriv1(g, Z[2]);
    double suprd = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      suprd = std::max(suprd, g[i] * std::sqrt(sq(d0[i]) + sq(d1v[i]) + sq(d2v[i])));
    series[0].push_back(suprd);
    series[1].push_back(rep.get("L2_k1l0"));
    series[2].push_back(rep.get("H2"));
    series[3].push_back(rep.get("H3"));
  }

  std::vector<EstimateRow> rows;
  for (std::size_t j = 0; j < names.size(); ++j) {
    EstimateRow row;
    row.name = names[j];
    row.stated_exponent = stated[j];
    auto fit = fit_power_law(ts, series[j]);
    row.fitted_exponent = fit.exponent;
    row.ok = fit.exponent >= stated[j] - 0.3;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace llflow
