#include "llflow/selfsim.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "llflow/tripleseries.hpp"

namespace llflow {

namespace {

constexpr double kYmax = 30.0;
constexpr int kSeriesTerms = 18;  // Frobenius truncation y^(2M+1)

RadialGrid default_ygrid() { return RadialGrid::uniform(1e-3, kYmax, 30000); }

// ---- Frobenius series of the basis -----------------------------------------

// e1 = sum a_m y^{2m+1}, a_0 = 1,
// a_{m+1} = [i(2m+1)/(2ac) - mu~] a_m / [(2m+3)^2 - 1].
LogPowerSeries e1_series(Complex ac, Complex mut) {
  LogPowerSeries s(1.0, kSeriesTerms, 1);
  Complex a{1.0, 0.0};
  for (int m = 0; m < kSeriesTerms; ++m) {
    s.at(std::size_t(m), 0) = a;
    a = (I * (2.0 * m + 1.0) / (2.0 * ac) - mut) * a / (sq(2.0 * m + 3.0) - 1.0);
  }
  return s;
}

// etilde (odd, O(y^3)) from (Lcal - mu~) etilde = kappa [2(e1'-1)/y - i e1/(2ac)];
// b_{m+1} = ([i(2m+1)/(2ac) - mu~] b_m - r_m) / [(2m+3)^2 - 1],
// r_m = kappa [2(2m+3) a_{m+1} - i a_m/(2ac)].
LogPowerSeries etilde_series(Complex ac, Complex mut, Complex kap, const LogPowerSeries& e1s) {
  LogPowerSeries s(1.0, kSeriesTerms, 1);
  Complex b{0.0, 0.0};
  for (int m = 0; m + 1 < kSeriesTerms; ++m) {
    s.at(std::size_t(m), 0) = b;
    const Complex am = e1s.at(std::size_t(m), 0);
    const Complex am1 = e1s.at(std::size_t(m) + 1, 0);
    const Complex rm = kap * (2.0 * (2.0 * m + 3.0) * am1 - I * am / (2.0 * ac));
    b = ((I * (2.0 * m + 1.0) / (2.0 * ac) - mut) * b - rm) / (sq(2.0 * m + 3.0) - 1.0);
  }
  return s;
}

// ---- marching ---------------------------------------------------------------

// RK4 on f'' = -f'/y + f/y^2 + (i/(2ac)) y f' - mu~ f - S(y), outward from
// index i0 with S given at nodes (midpoints interpolated).
struct Marcher {
  Complex ac, mut;
  const RadialGrid& g;
  const ComplexVec* S = nullptr;  // may be null (homogeneous)

  Complex source_mid(std::size_t i) const {
    if (!S) return Complex{};
    const auto& s = *S;
    const std::size_t n = s.size();
    if (i == 0 || i + 2 >= n) return 0.5 * (s[i] + s[std::min(i + 1, n - 1)]);
    return (-s[i - 1] + 9.0 * s[i] + 9.0 * s[i + 1] - s[i + 2]) / 16.0;
  }
  Complex source_node(std::size_t i) const { return S ? (*S)[i] : Complex{}; }

  void rhs(double y, Complex f, Complex fp, Complex src, Complex& df, Complex& dfp) const {
    df = fp;
    dfp = -fp / y + f / (y * y) + I * y * fp / (2.0 * ac) - mut * f - src;
  }

  void run(std::size_t i0, Complex f0, Complex fp0, ComplexVec& f, ComplexVec& fp) const {
    f[i0] = f0;
    fp[i0] = fp0;
    const double h = g.step();
    for (std::size_t i = i0; i + 1 < g.size(); ++i) {
      const double y = g[i];
      const Complex sm = source_mid(i);
      const Complex s0 = source_node(i);
      const Complex s1 = source_node(i + 1);
      Complex k1f, k1p, k2f, k2p, k3f, k3p, k4f, k4p;
      rhs(y, f[i], fp[i], s0, k1f, k1p);
      rhs(y + 0.5 * h, f[i] + 0.5 * h * k1f, fp[i] + 0.5 * h * k1p, sm, k2f, k2p);
      rhs(y + 0.5 * h, f[i] + 0.5 * h * k2f, fp[i] + 0.5 * h * k2p, sm, k3f, k3p);
      rhs(y + h, f[i] + h * k3f, fp[i] + h * k3p, s1, k4f, k4p);
      f[i + 1] = f[i] + (h / 6.0) * (k1f + 2.0 * k2f + 2.0 * k3f + k4f);
      fp[i + 1] = fp[i] + (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
    }
  }
};

// ---- origin-series solver ----------------------------------------------

// Solves (Lcal - mu~) u = F for u = sum u_i y^{2i-1} with u_1 = 0.
// Coefficient ladder: [1-(2m+1)^2] u_{m+1} + [i(2m-1)/(2ac) - mu~] u_m = s_m.
// m = 0 determines u_0 = s_0/(2 kappa); m = -1 is the obstruction slot.
struct SeriesSolve {
  LogPowerSeries u;
  Complex A{};  // y^-3 obstruction (must vanish for solvability)
};

SeriesSolve solve_series(const LogPowerSeries& F, Complex ac, Complex mut, Complex kap,
                         int Mtop) {
  SeriesSolve out;
  int mmin = 1;  // homogeneous: u starts at y^3
  if (F.rows() > 0) mmin = int(std::lround((F.base() + 1.0) / 2.0));
  const int ulo = std::min(mmin + 1, 0);
  LogPowerSeries u(2.0 * ulo - 1.0, std::size_t(Mtop - ulo) + 1, 1);
  auto uget = [&](int m) -> Complex {
    if (m < ulo || m > Mtop) return Complex{};
    return u.at(std::size_t(m - ulo), 0);
  };
  auto uset = [&](int m, Complex v) {
    if (m >= ulo && m <= Mtop) u.at(std::size_t(m - ulo), 0) = v;
  };
  auto sget = [&](int m) -> Complex {
    if (F.rows() == 0) return Complex{};
    const double e = 2.0 * m - 1.0;
    if (e < F.base() - 0.5 || e > F.top_exponent() + 0.5) return Complex{};
    return F.coeff(e, 0);
  };
  for (int m = std::min(mmin, -2); m < Mtop; ++m) {
    const Complex Dm = I * (2.0 * m - 1.0) / (2.0 * ac) - mut;
    if (m == -1) {
      out.A = sget(-1) - Dm * uget(-1);
    } else if (m == 0) {
      uset(0, sget(0) / (2.0 * kap));
      uset(1, Complex{});
    } else {
      uset(m + 1, (sget(m) - Dm * uget(m)) / (1.0 - sq(2.0 * m + 1.0)));
    }
  }
  out.u = u.trimmed();
  return out;
}

// ---- layer algebra for the nonlinearity G ----------------------------------

template <typename Ring>
struct Layers {
  const Ring* R = nullptr;
  int nmax = 0, lmax = 0;
  std::vector<std::vector<typename Ring::V>> e;
  std::vector<std::vector<char>> has;

  Layers(const Ring& r, int n, int l)
      : R(&r), nmax(n), lmax(l),
        e(std::size_t(n) + 1, std::vector<typename Ring::V>(std::size_t(l) + 1)),
        has(std::size_t(n) + 1, std::vector<char>(std::size_t(l) + 1, 0)) {}

  void add(int n, int l, const typename Ring::V& v) {
    if (n > nmax || l > lmax) return;
    auto& slot = e[std::size_t(n)][std::size_t(l)];
    if (has[std::size_t(n)][std::size_t(l)])
      slot = R->add(slot, v);
    else {
      slot = v;
      has[std::size_t(n)][std::size_t(l)] = 1;
    }
  }
  Layers mul(const Layers& o) const {
    Layers out(*R, nmax, lmax);
    for (int n1 = 0; n1 <= nmax; ++n1)
      for (int l1 = 0; l1 <= lmax; ++l1) {
        if (!has[std::size_t(n1)][std::size_t(l1)]) continue;
        for (int n2 = 0; n1 + n2 <= nmax; ++n2)
          for (int l2 = 0; l1 + l2 <= lmax; ++l2) {
            if (n2 > o.nmax || l2 > o.lmax) continue;
            if (!o.has[std::size_t(n2)][std::size_t(l2)]) continue;
            out.add(n1 + n2, l1 + l2,
                    R->mul(e[std::size_t(n1)][std::size_t(l1)],
                           o.e[std::size_t(n2)][std::size_t(l2)]));
          }
      }
    return out;
  }
  Layers conj() const {
    Layers out(*R, nmax, lmax);
    for (int n = 0; n <= nmax; ++n)
      for (int l = 0; l <= lmax; ++l)
        if (has[std::size_t(n)][std::size_t(l)])
          out.add(n, l, R->conj(e[std::size_t(n)][std::size_t(l)]));
    return out;
  }
  Layers scale(Complex s) const {
    Layers out(*R, nmax, lmax);
    for (int n = 0; n <= nmax; ++n)
      for (int l = 0; l <= lmax; ++l)
        if (has[std::size_t(n)][std::size_t(l)])
          out.add(n, l, R->scale(e[std::size_t(n)][std::size_t(l)], s));
    return out;
  }
  Layers plus(const Layers& o) const {
    Layers out = *this;
    for (int n = 0; n <= o.nmax && n <= nmax; ++n)
      for (int l = 0; l <= o.lmax && l <= lmax; ++l)
        if (o.has[std::size_t(n)][std::size_t(l)])
          out.add(n, l, o.e[std::size_t(n)][std::size_t(l)]);
    return out;
  }
  // 1/(1 + X) where X = *this has min layer >= 1 (Neumann, terminates).
  Layers recip_one_plus() const {
    Layers out(*R, nmax, lmax);
    out.add(0, 0, R->one());
    Layers pow = *this;
    double sign = -1.0;
    for (int it = 1; it <= nmax; ++it) {
      out = out.plus(pow.scale(Complex{sign, 0.0}));
      pow = pow.mul(*this);
      sign = -sign;
    }
    return out;
  }
};

// grid ring on the uniform y grid
struct YGridRing {
  const RadialGrid& g;
  using V = ComplexVec;
  V add(const V& a, const V& b) const {
    V o(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) o[i] = a[i] + b[i];
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
  V div_y(const V& a) const {
    V o(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) o[i] = a[i] / g[i];
    return o;
  }
  V one() const { return V(g.size(), Complex{1.0, 0.0}); }
};

// origin-series ring
struct SeriesRing {
  using V = LogPowerSeries;
  V add(const V& a, const V& b) const { return add_exact(a, b); }
  V mul(const V& a, const V& b) const { return llflow::mul(a, b); }
  V scale(const V& a, Complex s) const { return a.scaled(s); }
  V conj(const V& a) const {
    V o = a;
    for (std::size_t k = 0; k < o.rows(); ++k)
      for (std::size_t l = 0; l < o.cols(); ++l) o.at(k, l) = std::conj(o.at(k, l));
    return o;
  }
  V div_y(const V& a) const { return a.shifted(-1.0); }
  V one() const { return LogPowerSeries::monomial(0.0, 0, 1.0); }
};

// shared gridwise G assembly from level accessors (levels jj < j)
template <typename GetW, typename GetWp>
std::vector<ComplexVec> g_layers_grid(const RadialGrid& g, int j, GetW getW, GetWp getWp) {
  const int nmax = 2 * j + 1, lmax = 2 * j + 1;
  YGridRing GR{g};
  Layers<YGridRing> Wg(GR, nmax, lmax), Wyg(GR, nmax, lmax);
  for (int jj = 0; jj < j; ++jj)
    for (int l = 0; l <= 2 * jj + 1; ++l) {
      Wg.add(2 * jj + 1, l, getW(jj, l));
      Wyg.add(2 * jj + 1, l, getWp(jj, l));
      if (l >= 1) Wyg.add(2 * jj + 1, l - 1, GR.scale(GR.div_y(getW(jj, l)), double(l)));
    }
  auto Wb = Wg.conj();
  auto WW = Wg.mul(Wb);
  Layers<YGridRing> Woy(GR, nmax, lmax);
  for (int n = 0; n <= nmax; ++n)
    for (int l = 0; l <= lmax; ++l)
      if (Wg.has[std::size_t(n)][std::size_t(l)])
        Woy.add(n, l, GR.div_y(Wg.e[std::size_t(n)][std::size_t(l)]));
  auto core = Wyg.mul(Wyg).plus(Woy.mul(Woy).scale(Complex{-1.0, 0.0}));
  auto G = Wb.scale(Complex{2.0, 0.0}).mul(core).mul(WW.recip_one_plus());
  std::vector<ComplexVec> out(std::size_t(2 * j + 2), ComplexVec{});
  for (int l = 0; l <= 2 * j + 1; ++l)
    if (G.has[std::size_t(2 * j + 1)][std::size_t(l)])
      out[std::size_t(l)] = GR.scale(G.e[std::size_t(2 * j + 1)][std::size_t(l)],
                                     Complex{-1.0, 0.0});
  return out;
}

// ---- family construction ----------------------------------------------------

struct LevelWork {
  ComplexVec w0, w0p;   // particular solution on the grid
  LogPowerSeries ser0;  // particular origin series
  Complex c{};          // e1 multiple
};

struct Builder {
  Params p;
  RadialGrid g = default_ygrid();
  double y_switch = 0.5;
  SpectralData spec;
  std::vector<BasisPair> basis;
  std::vector<std::vector<LevelWork>> lv;  // [j][l]
  MatchingData data;
  std::size_t i0 = 0;  // first marching index (y >= y_switch)

  explicit Builder(const Params& par) : p(par), spec(spectral_data(par)) {
    while (g[i0] < y_switch) ++i0;
  }

  ComplexVec level_w(int j, int l) const {
    const auto& L = lv[std::size_t(j)][std::size_t(l)];
    ComplexVec o = L.w0;
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += L.c * basis[std::size_t(j)].e1[i];
    return o;
  }
  ComplexVec level_wp(int j, int l) const {
    const auto& L = lv[std::size_t(j)][std::size_t(l)];
    ComplexVec o = L.w0p;
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += L.c * basis[std::size_t(j)].e1p[i];
    return o;
  }
  LogPowerSeries level_ser(int j, int l) const {
    const auto& L = lv[std::size_t(j)][std::size_t(l)];
    if (std::abs(L.c) == 0.0) return L.ser0;
    if (L.ser0.rows() == 0) return basis[std::size_t(j)].e1_series.scaled(L.c);
    return add_exact(L.ser0, basis[std::size_t(j)].e1_series.scaled(L.c));
  }

  // nonlinearity layers for level j, both rings (depends on levels < j only)
  void g_layers(int j, std::vector<LogPowerSeries>& gser, std::vector<ComplexVec>& ggrid) const {
    const int nmax = 2 * j + 1, lmax = 2 * j + 1;
    SeriesRing SR;
    Layers<SeriesRing> Ws(SR, nmax, lmax), Wys(SR, nmax, lmax);
    for (int jj = 0; jj < j; ++jj)
      for (int l = 0; l <= 2 * jj + 1; ++l) {
        auto s = level_ser(jj, l);
        Ws.add(2 * jj + 1, l, s);
        Wys.add(2 * jj + 1, l, differentiate(s));
        // d/dy of the (ln y - nu ln t)^l symbol adds l W / y at power l-1
        if (l >= 1) Wys.add(2 * jj + 1, l - 1, SR.scale(SR.div_y(s), double(l)));
      }

    gser.assign(std::size_t(2 * j + 2), LogPowerSeries{});
    ggrid.assign(std::size_t(2 * j + 2), ComplexVec{});

    {  // series ring
      auto Wb = Ws.conj();
      auto WW = Ws.mul(Wb);
      Layers<SeriesRing> Woy(SR, nmax, lmax);
      for (int n = 0; n <= nmax; ++n)
        for (int l = 0; l <= lmax; ++l)
          if (Ws.has[std::size_t(n)][std::size_t(l)])
            Woy.add(n, l, SR.div_y(Ws.e[std::size_t(n)][std::size_t(l)]));
      auto core = Wys.mul(Wys).plus(Woy.mul(Woy).scale(Complex{-1.0, 0.0}));
      auto G = Wb.scale(Complex{2.0, 0.0}).mul(core).mul(WW.recip_one_plus());
      for (int l = 0; l <= 2 * j + 1; ++l)
        if (G.has[std::size_t(2 * j + 1)][std::size_t(l)])
          gser[std::size_t(l)] = G.e[std::size_t(2 * j + 1)][std::size_t(l)].scaled(-1.0);
    }
    {  // grid ring via the shared helper
      std::vector<std::vector<ComplexVec>> Wv, Wpv;
      Wv.resize(std::size_t(j));
      Wpv.resize(std::size_t(j));
      for (int jj = 0; jj < j; ++jj)
        for (int l = 0; l <= 2 * jj + 1; ++l) {
          Wv[std::size_t(jj)].push_back(level_w(jj, l));
          Wpv[std::size_t(jj)].push_back(level_wp(jj, l));
        }
      ggrid = g_layers_grid(
          g, j,
          [&](int jj, int l) -> const ComplexVec& { return Wv[std::size_t(jj)][std::size_t(l)]; },
          [&](int jj, int l) -> const ComplexVec& { return Wpv[std::size_t(jj)][std::size_t(l)]; });
    }
  }

  // F_{j,l} = G_{j,l} - i(l+1)(1/2+nu)/ac W_{j,l+1} + 2(l+1) W'_{j,l+1}/y
  //           + (l+1)(l+2) W_{j,l+2}/y^2
  LogPowerSeries source_series(int j, int l, const std::vector<LogPowerSeries>& gser) const {
    SeriesRing SR;
    LogPowerSeries F = gser[std::size_t(l)];
    const double lp1 = double(l + 1);
    if (l + 1 <= 2 * j + 1) {
      auto W1 = level_ser(j, l + 1);
      if (W1.rows() > 0) {
        F = add_exact(F, W1.scaled(-I * lp1 * (0.5 + p.nu) / p.ac()));
        F = add_exact(F, SR.div_y(differentiate(W1)).scaled(2.0 * lp1));
      }
    }
    if (l + 2 <= 2 * j + 1) {
      auto W2 = level_ser(j, l + 2);
      if (W2.rows() > 0) F = add_exact(F, W2.shifted(-2.0).scaled(lp1 * double(l + 2)));
    }
    return F;
  }
  ComplexVec source_grid(int j, int l, const std::vector<ComplexVec>& ggrid) const {
    ComplexVec F = ggrid[std::size_t(l)];
    if (F.empty()) F.assign(g.size(), Complex{});
    const double lp1 = double(l + 1);
    if (l + 1 <= 2 * j + 1) {
      const auto W1 = level_w(j, l + 1);
      const auto W1p = level_wp(j, l + 1);
      for (std::size_t i = 0; i < F.size(); ++i)
        F[i] += -I * lp1 * (0.5 + p.nu) / p.ac() * W1[i] + 2.0 * lp1 * W1p[i] / g[i];
    }
    if (l + 2 <= 2 * j + 1) {
      const auto W2 = level_w(j, l + 2);
      for (std::size_t i = 0; i < F.size(); ++i)
        F[i] += lp1 * double(l + 2) * W2[i] / (g[i] * g[i]);
    }
    return F;
  }

  void solve_level(int j, int l, const std::vector<LogPowerSeries>& gser,
                   const std::vector<ComplexVec>& ggrid, Complex* A_out = nullptr) {
    const Complex mut = spec.mu_tilde(j), kap = spec.kappa(j);
    auto Fser = source_series(j, l, gser);
    auto sol = solve_series(Fser, p.ac(), mut, kap, kSeriesTerms);
    if (A_out) *A_out = sol.A;
    auto& L = lv[std::size_t(j)][std::size_t(l)];
    L.ser0 = sol.u;
    L.w0.assign(g.size(), Complex{});
    L.w0p.assign(g.size(), Complex{});
    auto Fgrid = source_grid(j, l, ggrid);
    const auto du = differentiate(sol.u);
    for (std::size_t i = 0; i < i0; ++i) {
      L.w0[i] = sol.u.evaluate(g[i]);
      L.w0p[i] = du.evaluate(g[i]);
    }
    Marcher M{p.ac(), mut, g, &Fgrid};
    M.run(i0, sol.u.evaluate(g[i0]), du.evaluate(g[i0]), L.w0, L.w0p);
  }

  void build_level_j(int j) {
    basis.push_back(build_basis(p, j, g, y_switch));
    lv.emplace_back(std::size_t(2 * j + 2));
    std::vector<LogPowerSeries> gser;
    std::vector<ComplexVec> ggrid;
    g_layers(j, gser, ggrid);

    for (int l = 2 * j + 1; l >= 0; --l) {
      if (l <= 2 * j - 1) {
        // solvability: drive the y^-3 obstruction of F_{j,l} to zero with
        // the e1 multiple of level l+2 (linear two-probe root solve)
        auto& upper = lv[std::size_t(j)][std::size_t(l + 2)];
        Complex A0, A1;
        upper.c = Complex{};
        solve_level(j, l + 1, gser, ggrid);
        solve_level(j, l, gser, ggrid, &A0);
        upper.c = Complex{1.0, 0.0};
        solve_level(j, l + 1, gser, ggrid);
        solve_level(j, l, gser, ggrid, &A1);
        require(std::abs(A1 - A0) > 0.0, "matching failure at level (j,l): degenerate probe");
        upper.c = -A0 / (A1 - A0);
        solve_level(j, l + 1, gser, ggrid);
        Complex Afinal;
        solve_level(j, l, gser, ggrid, &Afinal);
        const double scale = std::max({std::abs(A0), std::abs(A1), 1e-30});
        require(std::abs(Afinal) <= 1e-6 * scale, "matching failure at level (j,l)");
      } else {
        solve_level(j, l, gser, ggrid);
      }
      if (l == 1) {
        lv[std::size_t(j)][1].c = data.a[std::size_t(j)];
      }
    }
    lv[std::size_t(j)][0].c = data.b[std::size_t(j)];
  }
};

// joint least squares with explicit complex columns
struct ColumnFit {
  ComplexVec coeffs;
  double residual = 0.0;
};
ColumnFit lsq_columns(const std::vector<ComplexVec>& cols, const ComplexVec& rhs) {
  const std::size_t n = rhs.size(), m = cols.size();
  const Eigen::Index ni = Eigen::Index(n), mi = Eigen::Index(m);
  Eigen::MatrixXcd A(ni, mi);
  Eigen::VectorXcd b(ni);
  std::vector<double> scale(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < n; ++i) scale[j] = std::max(scale[j], std::abs(cols[j][i]));
    if (scale[j] == 0.0) scale[j] = 1.0;
    for (std::size_t i = 0; i < n; ++i)
      A(Eigen::Index(i), Eigen::Index(j)) = cols[j][i] / scale[j];
  }
  for (std::size_t i = 0; i < n; ++i) b(Eigen::Index(i)) = rhs[i];
  auto svd = A.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-12);
  Eigen::VectorXcd x = svd.solve(b);
  ColumnFit out;
  out.coeffs.resize(m);
  for (std::size_t j = 0; j < m; ++j) out.coeffs[j] = x(Eigen::Index(j)) / scale[j];
  double fmax = 0.0;
  for (std::size_t i = 0; i < n; ++i) fmax = std::max(fmax, std::abs(rhs[i]));
  Eigen::VectorXcd r = A * x - b;
  for (std::size_t i = 0; i < n; ++i)
    out.residual = std::max(out.residual, std::abs(r(Eigen::Index(i))) / (fmax > 0 ? fmax : 1.0));
  return out;
}

}  // namespace

ComplexVec apply_Lcal(const Params& p, const RadialGrid& g, const ComplexVec& f) {
  auto d1 = deriv1(g, f);
  auto d2 = deriv2(g, f);
  ComplexVec out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double y = g[i];
    out[i] = -d2[i] - d1[i] / y + f[i] / (y * y) + I * y * d1[i] / (2.0 * p.ac());
  }
  return out;
}

BasisPair build_basis(const Params& p, int j, const RadialGrid& g, double y_switch) {
  BasisPair bp;
  const auto spec = spectral_data(p);
  const Complex mut = spec.mu_tilde(j);
  bp.kappa_j = spec.kappa(j);
  bp.e1_series = e1_series(p.ac(), mut);
  bp.et2_series = etilde_series(p.ac(), mut, bp.kappa_j, bp.e1_series);

  std::size_t i0 = 0;
  while (g[i0] < y_switch) ++i0;
  const auto de1 = differentiate(bp.e1_series);
  const auto det = differentiate(bp.et2_series);

  bp.e1.assign(g.size(), Complex{});
  bp.e1p.assign(g.size(), Complex{});
  bp.e2.assign(g.size(), Complex{});
  bp.e2p.assign(g.size(), Complex{});
  auto e2_eval = [&](double y, Complex& v, Complex& dv) {
    const Complex e1v = bp.e1_series.evaluate(y), e1d = de1.evaluate(y);
    const double ly = std::log(y);
    v = 1.0 / y + bp.kappa_j * e1v * ly + bp.et2_series.evaluate(y);
    dv = -1.0 / (y * y) + bp.kappa_j * (e1d * ly + e1v / y) + det.evaluate(y);
  };
  for (std::size_t i = 0; i < i0; ++i) {
    bp.e1[i] = bp.e1_series.evaluate(g[i]);
    bp.e1p[i] = de1.evaluate(g[i]);
    e2_eval(g[i], bp.e2[i], bp.e2p[i]);
  }
  Marcher M{p.ac(), mut, g, nullptr};
  M.run(i0, bp.e1_series.evaluate(g[i0]), de1.evaluate(g[i0]), bp.e1, bp.e1p);
  Complex v0, dv0;
  e2_eval(g[i0], v0, dv0);
  M.run(i0, v0, dv0, bp.e2, bp.e2p);
  return bp;
}

MatchingData derive_matching_data(const InnerStack& stack, int jmax) {
  require(stack.N >= jmax + 1, "derive_matching_data: order deficit");
  const int kmax = jmax + 1;
  std::vector<LogPowerSeries> fam(std::size_t(kmax) + 1);
  for (int k = 1; k <= kmax; ++k) fam[std::size_t(k)] = stack.tails[std::size_t(k)];
  auto W = stereo_compose_tails(fam, kmax, -13, 2 * kmax + 2);
  auto slices = W.slices(-1);
  auto table = reexpand_inner_to_selfsim(slices, jmax, 1, 1);
  MatchingData out;
  out.a.resize(std::size_t(jmax) + 1);
  out.b.resize(std::size_t(jmax) + 1);
  for (int j = 0; j <= jmax; ++j) {
    out.a[std::size_t(j)] = table.get(j, 1, 1);
    out.b[std::size_t(j)] = table.get(j, 1, 0);
  }
  return out;
}

SelfSimFamily build_selfsim(const Params& p, int J, const MatchingData& data) {
  require(int(data.a.size()) > J && int(data.b.size()) > J,
          "build_selfsim: matching data missing levels");
  Builder B(p);
  B.data = data;
  for (int j = 0; j <= J; ++j) B.build_level_j(j);

  SelfSimFamily f;
  f.params = p;
  f.J = J;
  f.ygrid = B.g;
  f.y_switch = B.y_switch;
  f.basis = B.basis;
  f.data = data;
  f.W.resize(std::size_t(J) + 1);
  for (int j = 0; j <= J; ++j) {
    f.W[std::size_t(j)].resize(std::size_t(2 * j + 2));
    for (int l = 0; l <= 2 * j + 1; ++l) {
      LevelFn L;
      L.w = B.level_w(j, l);
      L.wp = B.level_wp(j, l);
      L.origin = B.level_ser(j, l);
      L.c = B.lv[std::size_t(j)][std::size_t(l)].c;
      f.W[std::size_t(j)][std::size_t(l)] = std::move(L);
    }
  }
  return f;
}

Complex eval_W(const SelfSimFamily& f, int j, int l, double y) {
  const auto& L = f.W[std::size_t(j)][std::size_t(l)];
  if (y < f.y_switch) return L.origin.evaluate(y);
  return interp(f.ygrid, L.w, y);
}

Complex eval_W_deriv(const SelfSimFamily& f, int j, int l, double y) {
  const auto& L = f.W[std::size_t(j)][std::size_t(l)];
  if (y < f.y_switch) return differentiate(L.origin).evaluate(y);
  return interp(f.ygrid, L.wp, y);
}

Complex w_selfsim(const SelfSimFamily& f, int N, double t, double y) {
  const double lg = std::log(y) - f.params.nu * std::log(t);
  Complex out{};
  for (int j = 0; j <= std::min(N, f.J); ++j) {
    const double tw = std::pow(t, f.params.nu * (2.0 * j + 1.0));
    double lp = 1.0;
    for (int l = 0; l <= 2 * j + 1; ++l) {
      out += tw * lp * eval_W(f, j, l, y);
      lp *= lg;
    }
  }
  return out;
}

Complex w_selfsim_dy(const SelfSimFamily& f, int N, double t, double y) {
  const double lg = std::log(y) - f.params.nu * std::log(t);
  Complex out{};
  for (int j = 0; j <= std::min(N, f.J); ++j) {
    const double tw = std::pow(t, f.params.nu * (2.0 * j + 1.0));
    for (int l = 0; l <= 2 * j + 1; ++l) {
      out += tw * std::pow(lg, l) * eval_W_deriv(f, j, l, y);
      if (l >= 1) out += tw * double(l) * std::pow(lg, l - 1) * eval_W(f, j, l, y) / y;
    }
  }
  return out;
}

Complex w_selfsim_dt(const SelfSimFamily& f, int N, double t, double y) {
  const double lg = std::log(y) - f.params.nu * std::log(t);
  const double nu = f.params.nu;
  Complex out{};
  for (int j = 0; j <= std::min(N, f.J); ++j) {
    const double tw = std::pow(t, nu * (2.0 * j + 1.0));
    for (int l = 0; l <= 2 * j + 1; ++l) {
      const Complex W = eval_W(f, j, l, y);
      out += nu * (2.0 * j + 1.0) * (tw / t) * std::pow(lg, l) * W;
      if (l >= 1) out += tw * double(l) * std::pow(lg, l - 1) * (-nu / t) * W;
    }
  }
  return out;
}

namespace {

// per-level log-dressed fit; osc identifiability window shrinks with damping
FarfieldRec fit_level_tail(const SelfSimFamily& f, int j, int l, double ylo, double yhi) {
  if (yhi <= 0.0) yhi = 0.9 * f.ygrid.rmax();
  const double smooth_lo = (ylo > 0.0) ? ylo : 8.0;
  const auto& L = f.W[std::size_t(j)][std::size_t(l)];
  const double P = 2.0 * f.params.nu * (2.0 * j + 1.0);
  const double a0 = f.params.alpha0;
  const Complex iac = I / (4.0 * f.params.ac());
  const int pmax = 2 * j + 1 - l;
  const int K = 4, Ko = 2;

  auto window = [&](double lo, double hi, std::vector<double>& ys, ComplexVec& vals) {
    ys.clear();
    vals.clear();
    for (std::size_t i = 0; i < f.ygrid.size(); i += 4) {
      const double y = f.ygrid[i];
      if (y < lo || y > hi) continue;
      ys.push_back(y);
      vals.push_back(L.w[i]);
    }
  };
  auto smooth_col = [&](const std::vector<double>& ys, int k, int p) {
    ComplexVec c(ys.size());
    for (std::size_t i = 0; i < ys.size(); ++i)
      c[i] = std::pow(Complex{ys[i], 0.0}, Complex{P - 2.0 * k, 2.0 * a0}) *
             std::pow(std::log(ys[i]), p);
    return c;
  };
  auto osc_col = [&](const std::vector<double>& ys, int k, int p) {
    ComplexVec c(ys.size());
    for (std::size_t i = 0; i < ys.size(); ++i)
      c[i] = std::exp(iac * ys[i] * ys[i]) *
             std::pow(Complex{ys[i], 0.0}, Complex{-P - 2.0 - 2.0 * k, -2.0 * a0}) *
             std::pow(std::log(ys[i]), p);
    return c;
  };

  FarfieldRec out;
  out.smooth.assign(K, ComplexVec(std::size_t(pmax) + 1, Complex{}));
  out.osc.assign(Ko, ComplexVec(std::size_t(pmax) + 1, Complex{}));
  std::vector<double> ys;
  ComplexVec vals;

  if (f.params.a2 < 1e-6) {
    // undamped oscillation: alternate a smooth-only fit on osc-subtracted
    // data with Hann-weighted demodulation for the oscillatory part; the
    // cross-leakage contracts quadratically per sweep
    window(smooth_lo, yhi, ys, vals);
    require(ys.size() >= 32, "farfield: window not asymptotic");
    const std::size_t n = ys.size();
    RealVec wts(n);
    const double ylo_w = ys.front(), yspan = ys.back() - ys.front();
    for (std::size_t i = 0; i < n; ++i)
      wts[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * (ys[i] - ylo_w) / yspan);
    std::vector<ComplexVec> scols, dcols;
    for (int k = 0; k < K; ++k)
      for (int p = 0; p <= pmax; ++p) scols.push_back(smooth_col(ys, k, p));
    for (int k = 0; k < Ko; ++k)
      for (int p = 0; p <= pmax; ++p) {
        ComplexVec c(n);
        for (std::size_t i = 0; i < n; ++i)
          c[i] = std::pow(ys[i], -2.0 * k) * std::pow(std::log(ys[i]), p) * wts[i];
        dcols.push_back(std::move(c));
      }
    for (int sweep = 0; sweep < 3; ++sweep) {
      ComplexVec r = vals;  // minus the current osc model
      for (std::size_t i = 0; i < n; ++i)
        for (int k = 0; k < Ko; ++k)
          for (int p = 0; p <= pmax; ++p)
            r[i] -= out.osc[std::size_t(k)][std::size_t(p)] * std::exp(iac * ys[i] * ys[i]) *
                    std::pow(Complex{ys[i], 0.0}, Complex{-P - 2.0 - 2.0 * k, -2.0 * a0}) *
                    std::pow(std::log(ys[i]), p);
      auto fit1 = lsq_columns(scols, r);
      std::size_t idx = 0;
      for (int k = 0; k < K; ++k)
        for (int p = 0; p <= pmax; ++p)
          out.smooth[std::size_t(k)][std::size_t(p)] = fit1.coeffs[idx++];
      out.residual = fit1.residual;

      ComplexVec dw(n);
      for (std::size_t i = 0; i < n; ++i) {
        Complex rr = vals[i];
        for (int k = 0; k < K; ++k)
          for (int p = 0; p <= pmax; ++p)
            rr -= out.smooth[std::size_t(k)][std::size_t(p)] *
                  std::pow(Complex{ys[i], 0.0}, Complex{P - 2.0 * k, 2.0 * a0}) *
                  std::pow(std::log(ys[i]), p);
        dw[i] = rr * std::exp(-iac * ys[i] * ys[i]) *
                std::pow(Complex{ys[i], 0.0}, Complex{P + 2.0, 2.0 * a0}) * wts[i];
      }
      auto fit2 = lsq_columns(dcols, dw);
      idx = 0;
      for (int k = 0; k < Ko; ++k)
        for (int p = 0; p <= pmax; ++p)
          out.osc[std::size_t(k)][std::size_t(p)] = fit2.coeffs[idx++];
    }
  } else {
    // stage 1: smooth part where the damped oscillation is dead
    window(smooth_lo, yhi, ys, vals);
    require(ys.size() >= 32, "farfield: window not asymptotic");
    std::vector<ComplexVec> cols;
    for (int k = 0; k < K; ++k)
      for (int p = 0; p <= pmax; ++p) cols.push_back(smooth_col(ys, k, p));
    auto fit1 = lsq_columns(cols, vals);
    std::size_t idx = 0;
    for (int k = 0; k < K; ++k)
      for (int p = 0; p <= pmax; ++p) out.smooth[std::size_t(k)][std::size_t(p)] = fit1.coeffs[idx++];
    out.residual = fit1.residual;
    // stage 2: oscillatory part from the residual where the damped template
    // still has weight: a2 y^2/(4|ac|^2) <= 8
    const double rate = f.params.a2 / (4.0 * std::norm(f.params.ac()));
    const double yhi2 = std::min(9.0, std::sqrt(8.0 / rate));
    window(std::max(1.5, yhi2 / 4.0), yhi2, ys, vals);
    if (ys.size() >= 16) {
      for (std::size_t i = 0; i < ys.size(); ++i)
        for (int k = 0; k < K; ++k)
          for (int p = 0; p <= pmax; ++p)
            vals[i] -= out.smooth[std::size_t(k)][std::size_t(p)] *
                       std::pow(Complex{ys[i], 0.0}, Complex{P - 2.0 * k, 2.0 * a0}) *
                       std::pow(std::log(ys[i]), p);
      std::vector<ComplexVec> ocols;
      for (int k = 0; k < Ko; ++k)
        for (int p = 0; p <= pmax; ++p) ocols.push_back(osc_col(ys, k, p));
      auto fit2 = lsq_columns(ocols, vals);
      idx = 0;
      for (int k = 0; k < Ko; ++k)
        for (int p = 0; p <= pmax; ++p) out.osc[std::size_t(k)][std::size_t(p)] = fit2.coeffs[idx++];
    }
  }
  require(out.residual <= 1e-4, "farfield: window not asymptotic");
  return out;
}

double binom(int n, int k) {
  double v = 1.0;
  for (int i = 0; i < k; ++i) v = v * double(n - i) / double(i + 1);
  return v;
}

}  // namespace

BetaTables farfield_tables(const SelfSimFamily& f) {
  BetaTables T;
  const double nu = f.params.nu;
  T.beta0.resize(std::size_t(f.J) + 1);
  T.beta1.resize(std::size_t(f.J) + 1);
  for (int j = 0; j <= f.J; ++j) {
    std::vector<FarfieldRec> recs;
    for (int l = 0; l <= 2 * j + 1; ++l) recs.push_back(fit_level_tail(f, j, l, 0.0, 0.0));
    T.beta0[std::size_t(j)].resize(std::size_t(2 * j + 2));
    T.beta1[std::size_t(j)].resize(std::size_t(2 * j + 2));
    // rebasing (ln y - nu ln t)^l -> (ln y +- ln t/2)^q bases:
    //   beta0(j,q) = (-2nu)^q sum_{l>=q} C(l,q) (1+2nu)^{l-q} w0[l][k=0][p=l-q]
    //   beta1(j,q) = (+2nu)^q sum_{l>=q} C(l,q) (1-2nu)^{l-q} w1[l][k=0][p=l-q]
    for (int q = 0; q <= 2 * j + 1; ++q) {
      Complex b0{}, b1{};
      for (int l = q; l <= 2 * j + 1; ++l) {
        const int p = l - q;
        b0 += binom(l, q) * std::pow(1.0 + 2.0 * nu, p) * recs[std::size_t(l)].smooth[0][std::size_t(p)];
        b1 += binom(l, q) * std::pow(1.0 - 2.0 * nu, p) * recs[std::size_t(l)].osc[0][std::size_t(p)];
      }
      T.beta0[std::size_t(j)][std::size_t(q)] = std::pow(-2.0 * nu, q) * b0;
      T.beta1[std::size_t(j)][std::size_t(q)] = std::pow(2.0 * nu, q) * b1;
    }
  }
  return T;
}

FarfieldRec farfield_decompose(const SelfSimFamily& f, int j, int l, double ylo, double yhi) {
  FarfieldRec rec = fit_level_tail(f, j, l, ylo, yhi);
  auto T = farfield_tables(f);
  rec.beta0 = T.beta0[std::size_t(j)][std::size_t(l)];
  rec.beta1 = T.beta1[std::size_t(j)][std::size_t(l)];
  return rec;
}

MatchReport matching_check_inner(const SelfSimFamily& f, const InnerStack& stack, int N,
                                 const std::vector<double>& ts) {
  MatchReport rep;
  rep.ts = ts;
  for (double t : ts) {
    const double yc = std::pow(t, f.params.eps1);
    double sup = 0.0;
    const int ns = 48;
    for (int i = 0; i <= ns; ++i) {
      const double y = (yc / 10.0) * std::pow(100.0, double(i) / ns);
      sup = std::max(sup, std::abs(w_selfsim(f, N, t, y) - w_inner(stack, t, y)));
    }
    rep.sup_diffs.push_back(sup);
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double x = std::log(ts[i]), yv = std::log(rep.sup_diffs[i]);
    sx += x;
    sy += yv;
    sxx += x * x;
    sxy += x * yv;
  }
  const double n = double(ts.size());
  rep.exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return rep;
}


std::vector<ComplexVec> selfsim_G_layers(const SelfSimFamily& f, int j) {
  require(j <= f.J, "selfsim_G_layers: level not built");
  return g_layers_grid(
      f.ygrid, j,
      [&](int jj, int l) -> const ComplexVec& { return f.W[std::size_t(jj)][std::size_t(l)].w; },
      [&](int jj, int l) -> const ComplexVec& { return f.W[std::size_t(jj)][std::size_t(l)].wp; });
}

}  // namespace llflow
