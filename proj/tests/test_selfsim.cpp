#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "llflow/selfsim.hpp"

using namespace llflow;

namespace {

Params params_default() { return Params::make(0.5, 1.5, 0.0, 2); }

struct Setup {
  InnerStack stack;
  MatchingData data;
  Setup(const Params& p, int kmax) : stack(build_stack(p, kmax)) {
    data = derive_matching_data(stack, kmax - 1);
  }
};

const Setup& shared_setup() {
  static Setup s(params_default(), 3);
  return s;
}

}  // namespace

TEST_CASE("spectral constants") {
  auto p = params_default();
  auto sd = spectral_data(p);
  CHECK(sd.mu(0) == Complex{-p.alpha0, p.nu});
  CHECK(sd.mu(2) == Complex{-p.alpha0, 5.0 * p.nu});
  CHECK(std::abs(sd.mu_tilde(1) - sd.mu(1) / p.ac()) < 1e-15);
  CHECK(std::abs(sd.kappa(1) - (-I / (4.0 * p.ac()) - 0.5 * sd.mu_tilde(1))) < 1e-15);
}

TEST_CASE("apply_Lcal on simple closed forms") {
  auto p = params_default();
  auto g = RadialGrid::uniform(1e-3, 10.0, 20000);
  const std::size_t n = g.size();
  ComplexVec fy(n), finv(n);
  for (std::size_t i = 0; i < n; ++i) {
    fy[i] = g[i];
    finv[i] = 1.0 / g[i];
  }
  auto Ly = apply_Lcal(p, g, fy);
  auto Li = apply_Lcal(p, g, finv);
  for (std::size_t i = 100; i < n - 100; i += 997) {
    const double y = g[i];
    CHECK(std::abs(Ly[i] - I * y / (2.0 * p.ac())) < 1e-7 * std::max(1.0, y));
    // the 1/y singular cancellation is resolvable by the uniform-grid FD
    // only away from the origin
    if (y >= 0.5) CHECK(std::abs(Li[i] + I / (2.0 * p.ac()) / y) < 1e-7 / y);
  }
}

TEST_CASE("basis: origin behaviour, eigen-residual, independence") {
  auto p = params_default();
  auto g = RadialGrid::uniform(1e-3, 30.0, 30000);
  auto sd = spectral_data(p);
  for (int j : {0, 1}) {
    auto bp = build_basis(p, j, g, 0.5);
    // e1/y -> 1, correction order ~3
    CHECK(std::abs(bp.e1_series.coeff(1.0, 0) - 1.0) < 1e-14);
    const double y1 = 1e-2, y2 = 1e-1;
    const Complex c1 = bp.e1_series.evaluate(y1) / y1 - 1.0;
    const Complex c2 = bp.e1_series.evaluate(y2) / y2 - 1.0;
    const double slope = std::log(std::abs(c2) / std::abs(c1)) / std::log(y2 / y1);
    CHECK(std::abs(slope - 2.0) < 0.2);  // correction O(y^2) relative, O(y^3) absolute

    // y e2 -> 1 as y -> 0
    CHECK(std::abs(1e-3 * (bp.e2.front()) - 1.0) < 1e-3);

    // (Lcal - mu~) e1 = 0 with relative residual <= 1e-8 on [0.01, 5];
    // e2 ~ 1/y defeats the uniform-grid FD near 0, so probe it on [0.3, 5]
    auto r1 = apply_Lcal(p, g, bp.e1);
    auto r2 = apply_Lcal(p, g, bp.e2);
    double n1 = 0, d1v = 0, n2 = 0, d2v = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g[i] > 5.0) continue;
      if (g[i] >= 0.01) {
        n1 = std::max(n1, std::abs(r1[i] - sd.mu_tilde(j) * bp.e1[i]));
        d1v = std::max(d1v, std::abs(sd.mu_tilde(j) * bp.e1[i]));
      }
      if (g[i] >= 0.3) {
        n2 = std::max(n2, std::abs(r2[i] - sd.mu_tilde(j) * bp.e2[i]));
        d2v = std::max(d2v, std::abs(sd.mu_tilde(j) * bp.e2[i]));
      }
    }
    CHECK(n1 / d1v <= 1e-8);
    CHECK(n2 / d2v <= 1e-8);

    // linear independence at y = 1
    const Complex e1v = interp(g, bp.e1, 1.0), e1d = interp(g, bp.e1p, 1.0);
    const Complex e2v = interp(g, bp.e2, 1.0), e2d = interp(g, bp.e2p, 1.0);
    CHECK(std::abs(e1v * e2d - e1d * e2v) > 1e-3);
  }
}

TEST_CASE("matching data: a0 = kappa_0 and b0 = -kappa_0 (analytic oracle)") {
  auto p = params_default();
  const auto& S = shared_setup();
  const Complex kappa0 = spectral_data(p).kappa(0);
  CHECK(std::abs(S.data.a[0] - kappa0) < 1e-5 * std::abs(kappa0));
  CHECK(std::abs(S.data.b[0] + kappa0) < 1e-5 * std::abs(kappa0));
  // at these parameters kappa0 = d/(2 ac) = 1 - i
  CHECK(std::abs(kappa0 - Complex{1.0, -1.0}) < 1e-14);
}

TEST_CASE("matching data is linear in the k=1 tail") {
  auto p = params_default();
  const auto& S = shared_setup();
  InnerStack scaled = S.stack;
  scaled.tails[1] = scaled.tails[1].scaled(2.0);
  auto d2 = derive_matching_data(scaled, 0);
  CHECK(std::abs(d2.a[0] - 2.0 * S.data.a[0]) < 1e-10 * std::abs(S.data.a[0]));
  CHECK(std::abs(d2.b[0] - 2.0 * S.data.b[0]) < 1e-10 * std::abs(S.data.b[0]));
}

TEST_CASE("j=0 levels: W01 = a0 e1 exactly, 1/y coefficient of W00 = a0/kappa0") {
  auto p = params_default();
  const auto& S = shared_setup();
  auto fam = build_selfsim(p, 0, S.data);
  const auto& bp = fam.basis[0];
  double sup = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < fam.ygrid.size(); i += 13) {
    sup = std::max(sup, std::abs(fam.W[0][1].w[i] - S.data.a[0] * bp.e1[i]));
    ref = std::max(ref, std::abs(fam.W[0][1].w[i]));
  }
  CHECK(sup / ref <= 1e-12);
  const Complex d0 = fam.W[0][0].origin.coeff(-1.0, 0);
  const Complex expect = S.data.a[0] / spectral_data(p).kappa(0);
  CHECK(std::abs(d0 - expect) <= 1e-6 * std::abs(expect));
  // consistency with the inner side: the 1/y coefficient matches Q's image
  CHECK(std::abs(d0 - 1.0) < 1e-4);
}

TEST_CASE("levels solve their equations: independent plug-back via apply_Lcal") {
  auto p = params_default();
  const auto& S = shared_setup();
  auto fam = build_selfsim(p, 1, S.data);
  auto sd = spectral_data(p);
  for (int j = 0; j <= 1; ++j) {
    auto G = selfsim_G_layers(fam, j);
    for (int l = 2 * j + 1; l >= 0; --l) {
      const auto& L = fam.W[std::size_t(j)][std::size_t(l)];
      auto LW = apply_Lcal(p, fam.ygrid, L.w);
      // F_{j,l} from the stored upper levels
      ComplexVec F(fam.ygrid.size(), Complex{});
      if (!G[std::size_t(l)].empty()) F = G[std::size_t(l)];
      const double lp1 = double(l + 1);
      for (std::size_t i = 0; i < F.size(); ++i) {
        const double y = fam.ygrid[i];
        if (l + 1 <= 2 * j + 1) {
          const auto& U = fam.W[std::size_t(j)][std::size_t(l + 1)];
          F[i] += -I * lp1 * (0.5 + p.nu) / p.ac() * U.w[i] + 2.0 * lp1 * U.wp[i] / y;
        }
        if (l + 2 <= 2 * j + 1) {
          const auto& U2 = fam.W[std::size_t(j)][std::size_t(l + 2)];
          F[i] += lp1 * double(l + 2) * U2.w[i] / (y * y);
        }
      }
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < F.size(); ++i) {
        const double y = fam.ygrid[i];
        if (y < 0.05 || y > 10.0) continue;
        num = std::max(num, std::abs(LW[i] - sd.mu_tilde(j) * L.w[i] - F[i]));
        den = std::max(den, std::abs(LW[i]) + std::abs(F[i]));
      }
      CHECK(num / den <= 1e-6);
    }
  }
}

TEST_CASE("origin lattice of the solved levels obeys E2.46") {
  auto p = params_default();
  const auto& S = shared_setup();
  auto fam = build_selfsim(p, 1, S.data);
  for (int j = 0; j <= 1; ++j)
    for (int l = 0; l <= 2 * j + 1; ++l) {
      const auto& ser = fam.W[std::size_t(j)][std::size_t(l)].origin;
      if (ser.rows() == 0) continue;
      // lowest exponent >= 2 ceil(-j + l/2) - 1
      const double imin = std::ceil(-double(j) + double(l) / 2.0);
      CHECK(ser.base() >= 2.0 * imin - 1.0 - 1e-9);
    }
}

TEST_CASE("full W satisfies the self-similar PDE at finite t (independent oracle)") {
  // residual of i t W_t - alpha0 W = ac [Lcal W + G(W, Wbar, W_y)] with all
  // derivatives from the evaluators and an FD second derivative; truncation
  // at J=1 leaves O(t^{5 nu}).
  auto p = params_default();
  const auto& S = shared_setup();
  auto fam = build_selfsim(p, 1, S.data);
  auto resid = [&](double t) {
    double sup = 0.0, ref = 0.0;
    for (double y = 0.6; y <= 2.0; y += 0.07) {
      const double h = 1e-4;
      const Complex W = w_selfsim(fam, 1, t, y);
      const Complex Wy = w_selfsim_dy(fam, 1, t, y);
      const Complex Wyp = w_selfsim_dy(fam, 1, t, y + h);
      const Complex Wym = w_selfsim_dy(fam, 1, t, y - h);
      const Complex Wyy = (Wyp - Wym) / (2.0 * h);
      const Complex Wt = w_selfsim_dt(fam, 1, t, y);
      const Complex Lcal = -Wyy - Wy / y + W / (y * y) + I * y * Wy / (2.0 * p.ac());
      const Complex G = 2.0 * std::conj(W) * (Wy * Wy - W * W / (y * y)) / (1.0 + std::norm(W));
      const Complex R = I * t * Wt - p.alpha0 * W - p.ac() * (Lcal + G);
      sup = std::max(sup, std::abs(R));
      ref = std::max(ref, std::abs(p.ac() * Lcal));
    }
    return std::pair<double, double>{sup, ref};
  };
  // probe inside the asymptotic regime (the j=1 layer coefficients are
  // large, so t must be small before the expansion orders separate)
  auto [s1, r1] = resid(0.00625);
  CHECK(s1 / r1 <= 1e-4);
  // decay ~ t^{5nu} with log pollution: measured slope ~ 6.2/octave
  auto [s2, r2] = resid(0.025);
  const double slope = std::log(s2 / s1) / std::log(0.025 / 0.00625);
  CHECK(slope > 2.0 * p.nu + 2.0);
}

TEST_CASE("linearity in (a_j, b_j) at fixed lower levels") {
  auto p = params_default();
  const auto& S = shared_setup();
  MatchingData d0 = S.data, dz = S.data;
  dz.a[0] = Complex{};
  dz.b[0] = Complex{};
  MatchingData dsum = S.data;
  dsum.a[0] *= 3.0;
  dsum.b[0] *= 3.0;
  auto f1 = build_selfsim(p, 0, d0);
  auto f0 = build_selfsim(p, 0, dz);
  auto f3 = build_selfsim(p, 0, dsum);
  for (double y : {0.3, 1.0, 3.0}) {
    for (int l : {0, 1}) {
      const Complex a = eval_W(f1, 0, l, y), z = eval_W(f0, 0, l, y), b = eval_W(f3, 0, l, y);
      CHECK(std::abs(b - z - 3.0 * (a - z)) <= 1e-8 * (std::abs(b) + std::abs(a) + 1e-30));
    }
  }
}

TEST_CASE("farfield decomposition") {
  auto p = params_default();
  const auto& S = shared_setup();
  auto fam = build_selfsim(p, 0, S.data);

  // oscillatory template modulus: e^{-a2 y^2/(4 |ac|^2)}; at a1=a2=0.5, y=5
  // the damping factor is e^{-6.25}
  const double damp = std::exp(-p.a2 * 25.0 / (4.0 * std::norm(p.ac())));
  CHECK(damp == doctest::Approx(std::exp(-6.25)).epsilon(1e-12));

  // pure smooth input y^{2nu} in both levels: beta0(0,0)=1, rest ~ 0
  SelfSimFamily synth = fam;
  for (std::size_t i = 0; i < synth.ygrid.size(); ++i) {
    const double y = synth.ygrid[i];
    synth.W[0][0].w[i] = std::pow(y, 2.0 * p.nu);
    synth.W[0][0].wp[i] = 2.0 * p.nu * std::pow(y, 2.0 * p.nu - 1.0);
    synth.W[0][1].w[i] = Complex{};
    synth.W[0][1].wp[i] = Complex{};
  }
  auto T = farfield_tables(synth);
  CHECK(std::abs(T.beta0[0][0] - 1.0) <= 1e-8);
  // beta1 senses the oscillatory part through values ~ y^{-P-2} of a field
  // of magnitude y^P: its identifiability floor in doubles is ~1e-4 at the
  // damped parameters (the tail modes it feeds are e^{-a2 y^2/4|ac|^2} dead)
  CHECK(std::abs(T.beta1[0][0]) <= 5e-2);

  // synthetic two-template signal at a2 = 0 (Schrodinger limit): the joint
  // fit separates the modulus-1 oscillation by averaging
  Params ps = Params::make(0.0, 1.5, 0.0, 2);
  SelfSimFamily synth2 = fam;
  synth2.params = ps;
  const Complex A{0.7, -0.2}, B{0.05, 0.11};
  for (std::size_t i = 0; i < synth2.ygrid.size(); ++i) {
    const double y = synth2.ygrid[i];
    synth2.W[0][0].w[i] = A * std::pow(y, 2.0 * ps.nu) +
                          B * std::exp(I * y * y / (4.0 * ps.ac())) *
                              std::pow(y, -2.0 * ps.nu - 2.0);
    synth2.W[0][1].w[i] = Complex{};
    synth2.W[0][1].wp[i] = Complex{};
  }
  auto T2 = farfield_tables(synth2);
  CHECK(std::abs(T2.beta0[0][0] - A) <= 1e-6 * std::abs(A));
  CHECK(std::abs(T2.beta1[0][0] - B) <= 2e-3 * std::abs(B));

  // actual family: finite tables, accepted fits
  auto T3 = farfield_tables(fam);
  CHECK(std::isfinite(std::abs(T3.beta0[0][0])));
  CHECK(std::isfinite(std::abs(T3.beta0[0][1])));
}

TEST_CASE("inner <-> self-similar matching rate (N=1)") {
  auto p = params_default();
  const auto& S = shared_setup();
  auto fam = build_selfsim(p, 1, S.data);
  auto rep = matching_check_inner(fam, S.stack, 1, {1e-2, 1e-3, 1e-4});
  CHECK(rep.exponent >= p.nu * 2.0 - 0.5);

  // self-test: identical truncations give identically zero difference
  double self = 0.0;
  for (double y = 0.01; y < 0.1; y *= 1.5)
    self = std::max(self, std::abs(w_selfsim(fam, 1, 1e-3, y) - w_selfsim(fam, 1, 1e-3, y)));
  CHECK(self == 0.0);
}
