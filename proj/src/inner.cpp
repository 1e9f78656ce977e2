#include "llflow/inner.hpp"

#include <algorithm>
#include <cmath>

#include "llflow/harmonic.hpp"
#include "llflow/quadrature.hpp"

namespace llflow {

namespace {

RadialGrid default_inner_grid() { return RadialGrid::geometric(1e-3, 3e4, 2880); }

// ---- shared profile vectors ------------------------------------------------

struct Profiles {
  RealVec H1, H3, two_h1_over_r, two_h1h3_over_r2, Lpot;  // Lpot = (1-2h1^2)/r^2
  explicit Profiles(const RadialGrid& g) {
    const std::size_t n = g.size();
    H1.resize(n);
    H3.resize(n);
    two_h1_over_r.resize(n);
    two_h1h3_over_r2.resize(n);
    Lpot.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double r = g[i];
      H1[i] = h1(r);
      H3[i] = h3(r);
      two_h1_over_r[i] = 2.0 * H1[i] / r;
      two_h1h3_over_r2[i] = 2.0 * H1[i] * H3[i] / (r * r);
      Lpot[i] = (1.0 - 2.0 * H1[i] * H1[i]) / (r * r);
    }
  }
};

// ---- rings for the shared nonlinearity -------------------------------------

struct GridRing {
  const RadialGrid& g;
  using V = ComplexVec;
  V add(const V& a, const V& b) const {
    V o(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) o[i] = a[i] + b[i];
    return o;
  }
  V sub(const V& a, const V& b) const {
    V o(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) o[i] = a[i] - b[i];
    return o;
  }
  V mul(const V& a, const V& b) const {
    V o(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) o[i] = a[i] * b[i];
    return o;
  }
  V scale(const V& a, Complex s) const {
    V o(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) o[i] = a[i] * s;
    return o;
  }
  V conj(const V& a) const {
    V o(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) o[i] = std::conj(a[i]);
    return o;
  }
  V mulprof(const V& a, const RealVec& p) const {
    V o(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) o[i] = a[i] * p[i];
    return o;
  }
  V d1(const V& a) const { return deriv1(g, a); }
  V lap(const V& a) const { return radial_laplacian(g, a); }
  V one() const { return V(g.size(), Complex{1.0, 0.0}); }
};

// tau-series-of-grid-function ring, truncated at tau^K.
struct TauRing {
  const RadialGrid& g;
  int K;
  using V = TauFn;
  V zero() const { return V(std::size_t(K) + 1, ComplexVec(g.size(), Complex{})); }
  V add(const V& a, const V& b) const {
    V o = a;
    for (std::size_t k = 0; k < o.size(); ++k)
      for (std::size_t i = 0; i < o[k].size(); ++i) o[k][i] += b[k][i];
    return o;
  }
  V sub(const V& a, const V& b) const {
    V o = a;
    for (std::size_t k = 0; k < o.size(); ++k)
      for (std::size_t i = 0; i < o[k].size(); ++i) o[k][i] -= b[k][i];
    return o;
  }
  V mul(const V& a, const V& b) const {
    V o = zero();
    for (std::size_t k1 = 0; k1 < a.size(); ++k1)
      for (std::size_t k2 = 0; k1 + k2 < o.size() && k2 < b.size(); ++k2)
        for (std::size_t i = 0; i < o[0].size(); ++i) o[k1 + k2][i] += a[k1][i] * b[k2][i];
    return o;
  }
  V scale(const V& a, Complex s) const {
    V o = a;
    for (auto& row : o)
      for (auto& v : row) v *= s;
    return o;
  }
  V conj(const V& a) const {
    V o = a;
    for (auto& row : o)
      for (auto& v : row) v = std::conj(v);
    return o;
  }
  V mulprof(const V& a, const RealVec& p) const {
    V o = a;
    for (auto& row : o)
      for (std::size_t i = 0; i < row.size(); ++i) row[i] *= p[i];
    return o;
  }
  V d1(const V& a) const {
    V o = a;
    for (auto& row : o) row = deriv1(g, row);
    return o;
  }
  V lap(const V& a) const {
    V o = a;
    for (auto& row : o) row = radial_laplacian(g, row);
    return o;
  }
  V one() const {
    V o = zero();
    for (auto& v : o[0]) v = Complex{1.0, 0.0};
    return o;
  }
  bool is_zero(const V& a) const {
    for (const auto& row : a)
      for (const auto& v : row)
        if (std::abs(v) != 0.0) return false;
    return true;
  }
};

// gamma = sqrt(1 - z zbar) - 1 as a truncated tau series (binomial series).
TauFn gamma_series(const TauRing& R, const TauFn& z) {
  const TauFn w = R.mul(z, R.conj(z));
  TauFn gamma = R.zero();
  TauFn wpow = w;
  double an = -0.5;
  for (int n = 1; 2 * n <= R.K && !R.is_zero(wpow); ++n) {
    gamma = R.add(gamma, R.scale(wpow, Complex{an, 0.0}));
    wpow = R.mul(wpow, w);
    an = -an * (0.5 - double(n)) / double(n + 1);
  }
  return gamma;
}

// Nonlinear remainder of the projected inner equation:
//   NL(z) = a1 gamma Lz + i a2 |z|^2 Lz
//         + [a1 - i a2 (1+gamma)] (z P + (2 h1/rho)(1+gamma) gamma_rho)
//         - a2 F3 z,
//   P  = Delta gamma - (2 h1 h3/rho^2) z1 + (2 h1/rho) d_rho z1,
//   F3 = z1 Delta z2 - z2 Delta z1 + (2 h1/rho) z2 gamma_rho.
// Linear transport, L, and forcing terms are handled by the callers.
template <typename Ring>
typename Ring::V nonlinear_remainder(const Ring& R, const Profiles& P,
                                     const typename Ring::V& z,
                                     const typename Ring::V& gamma,
                                     const typename Ring::V& Lz, const Params& par) {
  using V = typename Ring::V;
  const Complex a1{par.a1(), 0.0};
  const Complex ia2{0.0, par.a2};
  const V zb = R.conj(z);
  const V z1 = R.scale(R.add(z, zb), 0.5);
  const V z2 = R.scale(R.sub(z, zb), Complex{0.0, -0.5});
  const V opg = R.add(R.one(), gamma);
  const V gr = R.d1(gamma);

  V Pv = R.lap(gamma);
  Pv = R.sub(Pv, R.mulprof(z1, P.two_h1h3_over_r2));
  Pv = R.add(Pv, R.mulprof(R.d1(z1), P.two_h1_over_r));

  const V core = R.add(R.mul(z, Pv), R.mulprof(R.mul(opg, gr), P.two_h1_over_r));
  const V coef = R.sub(R.scale(R.one(), a1), R.scale(opg, ia2));

  V F3 = R.sub(R.mul(z1, R.lap(z2)), R.mul(z2, R.lap(z1)));
  F3 = R.add(F3, R.mulprof(R.mul(z2, gr), P.two_h1_over_r));

  V out = R.scale(R.mul(gamma, Lz), a1);
  out = R.add(out, R.scale(R.mul(R.mul(z, zb), Lz), ia2));
  out = R.add(out, R.mul(coef, core));
  out = R.sub(out, R.scale(R.mul(F3, z), Complex{par.a2, 0.0}));
  return out;
}

ComplexVec apply_L_with(const Profiles& P, const RadialGrid& g, const ComplexVec& f) {
  auto lap = radial_laplacian(g, f);
  ComplexVec out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = -lap[i] + P.Lpot[i] * f[i];
  return out;
}

ComplexVec solve_L_on(const RadialGrid& g, const ComplexVec& F) {
  const std::size_t n = g.size();
  ComplexVec i1_int(n), i2_int(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = g[i];
    i1_int[i] = h1(s) * F[i] * s;
    i2_int[i] = h2(s) * F[i] * s;
  }
  auto I1 = cumulative(g, i1_int);
  auto I2 = cumulative(g, i2_int);
  const Complex head1 = head_correction(g, i1_int);
  const Complex head2 = head_correction(g, i2_int);
  ComplexVec z(n);
  for (std::size_t i = 0; i < n; ++i)
    z[i] = (h1(g[i]) * (I2[i] + head2) - h2(g[i]) * (I1[i] + head1)) * 0.25;
  return z;
}

std::vector<FitTerm> tail_template(int k, int jmin) {
  std::vector<FitTerm> terms;
  for (int j = k; j >= jmin; --j) {
    const int lmax = std::min(2 * (k - j) + 1, 2 * k);
    for (int l = 0; l <= lmax; ++l) terms.push_back({double(2 * j - 1), l});
  }
  return terms;
}

// Least-squares tail fit; when the full Lemma 2.2 template is too
// ill-conditioned for the window, peel off the worst column (lowest
// exponent, highest log power) and retry.
FitResult fit_tail_adaptive(const std::vector<double>& ys, const ComplexVec& fs,
                            std::vector<FitTerm>& terms) {
  for (;;) {
    try {
      return fit_series(ys, fs, terms);
    } catch (const Error&) {
      require(terms.size() > 2, "build_stack: tail fit failed");
      std::size_t drop = 0;
      for (std::size_t j = 1; j < terms.size(); ++j) {
        if (terms[j].exponent < terms[drop].exponent ||
            (terms[j].exponent == terms[drop].exponent &&
             terms[j].log_power > terms[drop].log_power))
          drop = j;
      }
      terms.erase(terms.begin() + long(drop));
    }
  }
}

}  // namespace

ComplexVec apply_L(const RadialGrid& g, const ComplexVec& f) {
  Profiles P(g);
  return apply_L_with(P, g, f);
}

ComplexVec solve_L(const RadialGrid& g, const ComplexVec& F, bool checked) {
  auto z = solve_L_on(g, F);
  if (checked) {
    // Richardson check against the half-density solve.
    RealVec nodes;
    ComplexVec Fh;
    for (std::size_t i = 0; i < g.size(); i += 2) {
      nodes.push_back(g[i]);
      Fh.push_back(F[i]);
    }
    auto gh = RadialGrid::from_nodes(nodes);
    auto zh = solve_L_on(gh, Fh);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < zh.size(); ++i) {
      num = std::max(num, std::abs(zh[i] - z[2 * i]));
      den = std::max(den, std::abs(z[2 * i]));
    }
    require(den == 0.0 || num / den < 1e-6, "solve_L: quadrature non-convergence");
  }
  return z;
}

ComplexVec assemble_rhs_Fk(const InnerStack& stack, int k) {
  require(k >= 2, "assemble_rhs_Fk: k=1 is the closed form, not recursive");
  require(k - 1 <= stack.N, "assemble_rhs_Fk: lower layers missing");
  const RadialGrid& g = stack.grid;
  const Profiles P(g);
  const Params& par = stack.params;

  TauRing R{g, k};
  TauFn z = R.zero();
  for (int j = 1; j < k && j <= stack.N; ++j) z[std::size_t(j)] = stack.z[std::size_t(j)];
  const TauFn gamma = gamma_series(R, z);
  TauFn Lz = R.zero();
  for (int j = 1; j < k; ++j) Lz[std::size_t(j)] = apply_L_with(P, g, z[std::size_t(j)]);
  const TauFn NL = nonlinear_remainder(R, P, z, gamma, Lz, par);

  const std::size_t n = g.size();
  const auto& zkm1 = stack.z[std::size_t(k - 1)];
  const auto& dzkm1 = stack.dz[std::size_t(k - 1)];
  ComplexVec F(n);
  const Complex d = par.d();
  for (std::size_t i = 0; i < n; ++i) {
    const Complex lhs = I * 2.0 * par.nu * double(k - 1) * zkm1[i] -
                        par.alpha0 * P.H3[i] * zkm1[i] -
                        I * (0.5 + par.nu) * g[i] * dzkm1[i];
    const Complex dterm = d * P.H1[i] * gamma[std::size_t(k - 1)][i];
    F[i] = (lhs - dterm - NL[std::size_t(k)][i]) / par.ac();
  }
  return F;
}

InnerStack build_stack(const Params& params, int N_build, const RadialGrid* grid) {
  InnerStack st;
  st.params = params;
  st.grid = grid ? *grid : default_inner_grid();
  const int N = N_build > 0 ? N_build : std::min(params.N, 4);
  st.N = 0;
  st.z.resize(std::size_t(N) + 1);
  st.dz.resize(std::size_t(N) + 1);
  st.d2z.resize(std::size_t(N) + 1);
  st.tails.resize(std::size_t(N) + 1);
  st.tail_residuals.assign(std::size_t(N) + 1, 0.0);
  st.origin_orders.assign(std::size_t(N) + 1, 0.0);

  const Profiles P(st.grid);
  const std::size_t n = st.grid.size();

  std::vector<std::size_t> origin_idx, tail_idx;
  for (std::size_t i = 0; i < n; ++i) {
    if (st.grid[i] >= 2e-3 && st.grid[i] <= 3e-2) origin_idx.push_back(i);
    if (st.grid[i] >= 1e2 && st.grid[i] <= 3e4) tail_idx.push_back(i);
  }
  require(origin_idx.size() >= 8 && tail_idx.size() >= 32, "build_stack: grid too narrow");

  for (int k = 1; k <= N; ++k) {
    ComplexVec F;
    if (k == 1) {
      F.resize(n);
      for (std::size_t i = 0; i < n; ++i) F[i] = -params.d() * P.H1[i] / params.ac();
    } else {
      F = assemble_rhs_Fk(st, k);
    }
    auto zk = solve_L(st.grid, F);
    st.z[std::size_t(k)] = zk;
    st.dz[std::size_t(k)] = deriv1(st.grid, zk);
    st.d2z[std::size_t(k)] = deriv2(st.grid, zk);
    st.N = k;

    // origin order: least-squares slope of ln|z^k| vs ln rho
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto i : origin_idx) {
      const double x = std::log(st.grid[i]);
      const double y = std::log(std::abs(zk[i]));
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double m = double(origin_idx.size());
    st.origin_orders[std::size_t(k)] = (m * sxy - sx * sy) / (m * sxx - sx * sx);

    // far-field tail fit on the Lemma 2.2 lattice
    std::vector<double> ys;
    ComplexVec fs;
    for (auto i : tail_idx) {
      ys.push_back(st.grid[i]);
      fs.push_back(zk[i]);
    }
    const int jmin = -1;
    auto terms = tail_template(k, jmin);
    auto fit = fit_tail_adaptive(ys, fs, terms);
    const double lo = 2.0 * jmin - 1.0;
    LogPowerSeries tail(lo, std::size_t(k - jmin) + 1, std::size_t(2 * k) + 1);
    for (std::size_t j = 0; j < terms.size(); ++j) {
      const long row = std::lround((terms[j].exponent - lo) / 2.0);
      tail.at(std::size_t(row), std::size_t(terms[j].log_power)) = fit.coeffs[j];
    }
    st.tails[std::size_t(k)] = tail.trimmed();
    st.tail_residuals[std::size_t(k)] = fit.residual;
  }
  return st;
}

ComplexVec InnerStack::z_at(double t, double rho_max) const {
  const std::size_t n = grid.size();
  ComplexVec out(n, Complex{});
  for (int k = 1; k <= N; ++k) {
    const double w = std::pow(t, 2.0 * params.nu * double(k));
    for (std::size_t i = 0; i < n; ++i) {
      if (rho_max > 0.0 && grid[i] > rho_max) break;
      out[i] += w * z[std::size_t(k)][i];
    }
  }
  return out;
}

ComplexVec inner_residual_field(const InnerStack& stack, double t) {
  const RadialGrid& g = stack.grid;
  const Profiles P(g);
  const Params& par = stack.params;
  const std::size_t n = g.size();

  ComplexVec zin(n, Complex{}), zt(n, Complex{});
  for (int k = 1; k <= stack.N; ++k) {
    const double w = std::pow(t, 2.0 * par.nu * double(k));
    for (std::size_t i = 0; i < n; ++i) {
      zin[i] += w * stack.z[std::size_t(k)][i];
      zt[i] += 2.0 * par.nu * double(k) * (w / t) * stack.z[std::size_t(k)][i];
    }
  }
  GridRing R{g};
  ComplexVec gamma(n);
  for (std::size_t i = 0; i < n; ++i)
    gamma[i] = std::sqrt(std::max(0.0, 1.0 - std::norm(zin[i]))) - 1.0;
  const ComplexVec Lz = apply_L_with(P, g, zin);
  const ComplexVec NL = nonlinear_remainder(R, P, zin, gamma, Lz, par);
  const ComplexVec dz = deriv1(g, zin);

  const double t2nu = std::pow(t, 2.0 * par.nu);
  ComplexVec X(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Complex E = I * t * t2nu * zt[i] - par.alpha0 * t2nu * P.H3[i] * zin[i] -
                      I * (0.5 + par.nu) * t2nu * g[i] * dz[i] - par.ac() * Lz[i] -
                      par.d() * t2nu * P.H1[i] * (1.0 + gamma[i]) - NL[i];
    X[i] = -E;
  }
  return X;
}

InnerResidualReport inner_residual(const InnerStack& stack, double t) {
  require(t > 0.0 && t <= 1.0, "inner_residual: need 0 < t <= 1");
  auto X = inner_residual_field(stack, t);
  InnerResidualReport rep;
  rep.rho_max = 10.0 * std::pow(t, -stack.params.nu + stack.params.eps1);
  const double tN = std::pow(t, 2.0 * stack.params.nu * double(stack.N));
  const double tN1 = std::pow(t, 2.0 * stack.params.nu * double(stack.N + 1));
  // interior margins keep one-sided boundary stencils out of the sup
  for (std::size_t i = 4; i + 4 < stack.grid.size(); ++i) {
    const double rho = stack.grid[i];
    if (rho > rep.rho_max) break;
    const double shape =
        std::pow(std::sqrt(1.0 + rho * rho), 2.0 * stack.N + 1.0) * std::log(2.0 + rho);
    rep.sup_ratio = std::max(rep.sup_ratio, std::abs(X[i]) / (tN * shape));
    rep.sup_ratio_next = std::max(rep.sup_ratio_next, std::abs(X[i]) / (tN1 * shape));
  }
  return rep;
}

Vec3 v_inner(const InnerStack& stack, double t, double rho) {
  Complex z{};
  for (int k = 1; k <= stack.N; ++k)
    z += std::pow(t, 2.0 * stack.params.nu * double(k)) *
         interp(stack.grid, stack.z[std::size_t(k)], rho);
  const double z1 = z.real(), z2 = z.imag();
  const double gamma = std::sqrt(std::max(0.0, 1.0 - std::norm(z))) - 1.0;
  const double H1 = h1(rho), H3 = h3(rho);
  return Vec3{H1 * (1.0 + gamma) + z1 * H3, z2, H3 * (1.0 + gamma) - z1 * H1};
}

Vec3 v_inner_dt(const InnerStack& stack, double t, double rho) {
  Complex z{}, zt{};
  for (int k = 1; k <= stack.N; ++k) {
    const double w = std::pow(t, 2.0 * stack.params.nu * double(k));
    const Complex zk = interp(stack.grid, stack.z[std::size_t(k)], rho);
    z += w * zk;
    zt += 2.0 * stack.params.nu * double(k) * (w / t) * zk;
  }
  const double gamma = std::sqrt(std::max(0.0, 1.0 - std::norm(z))) - 1.0;
  const double gdot = -(z.real() * zt.real() + z.imag() * zt.imag()) / (1.0 + gamma);
  const double H1 = h1(rho), H3 = h3(rho);
  return Vec3{H1 * gdot + zt.real() * H3, zt.imag(), H3 * gdot - zt.real() * H1};
}

Complex w_inner(const InnerStack& stack, double t, double y) {
  const double rho = y * std::pow(t, -stack.params.nu);
  return stereo_point(v_inner(stack, t, rho));
}

}  // namespace llflow
