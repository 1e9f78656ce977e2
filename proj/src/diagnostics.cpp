#include "llflow/diagnostics.hpp"

#include <cmath>

#include "llflow/quadrature.hpp"

namespace llflow {

namespace {

double l2_weighted(const RadialGrid& g, const std::vector<RealVec>& comps, int l) {
  RealVec dens(g.size(), 0.0);
  for (const auto& c : comps) {
    if (c.empty()) continue;
    for (std::size_t i = 0; i < g.size(); ++i)
      dens[i] += sq(c[i] * std::pow(g[i], -l)) * g[i];
  }
  return std::sqrt(integrate(g, dens));
}

double sup_weighted(const RadialGrid& g, const std::vector<RealVec>& comps, int l) {
  double m = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double s2 = 0.0;
    for (const auto& c : comps)
      if (!c.empty()) s2 += sq(c[i]);
    m = std::max(m, std::sqrt(s2) * std::pow(g[i], -l));
  }
  return m;
}

}  // namespace

NormReport sobolev_norms(const RadialGrid& g, const std::vector<RealVec>& components,
                         int kmax) {
  require(kmax >= 0 && kmax <= 3, "sobolev_norms: k <= 3");
  NormReport rep;
  std::vector<std::vector<RealVec>> deriv(std::size_t(kmax) + 1);
  deriv[0] = components;
  for (int k = 1; k <= kmax; ++k)
    for (const auto& c : deriv[std::size_t(k - 1)])
      deriv[std::size_t(k)].push_back(c.empty() ? RealVec{} : deriv1(g, c));

  rep.values["L2"] = l2_weighted(g, deriv[0], 0);
  rep.values["sup"] = sup_weighted(g, deriv[0], 0);
  for (int k = 0; k <= kmax; ++k)
    for (int l = 0; k + l <= kmax; ++l) {
      const std::string key = "k" + std::to_string(k) + "l" + std::to_string(l);
      rep.values["L2_" + key] = l2_weighted(g, deriv[std::size_t(k)], l);
      rep.values["sup_" + key] = sup_weighted(g, deriv[std::size_t(k)], l);
    }
  // H^k: root sum of squares of the k-th order family (k+l = m)
  for (int m = 1; m <= kmax; ++m) {
    double acc = 0.0;
    for (int k = 0; k <= m; ++k)
      acc += sq(rep.get("L2_k" + std::to_string(k) + "l" + std::to_string(m - k)));
    rep.values["H" + std::to_string(m)] = std::sqrt(acc);
  }
  return rep;
}

FitReport fit_power_law(const std::vector<double>& t, const std::vector<double>& value) {
  require(t.size() == value.size(), "fit_power_law: size mismatch");
  require(t.size() >= 4, "fit_power_law: need >= 4 samples");
  double tmin = t.front(), tmax = t.front();
  for (double v : t) {
    tmin = std::min(tmin, v);
    tmax = std::max(tmax, v);
  }
  require(tmax / tmin >= 10.0 * (1.0 - 1e-9), "fit_power_law: need >= 1 decade");
  for (double v : value) require(v > 0.0, "fit_power_law: non-positive values");

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = double(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double x = std::log(t[i]), y = std::log(value[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  FitReport rep;
  rep.exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  rep.prefactor = std::exp((sy - rep.exponent * sx) / n);
  rep.tmin = tmin;
  rep.tmax = tmax;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double model = rep.prefactor * std::pow(t[i], rep.exponent);
    rep.residual = std::max(rep.residual, std::abs(value[i] / model - 1.0));
  }
  return rep;
}

double detect_scale(const SphereField& f) {
  int crossings = 0;
  double r_star = 0.0;
  for (std::size_t i = 0; i + 1 < f.size(); ++i) {
    const double a = f.v[i].z, b = f.v[i + 1].z;
    if (a == 0.0) continue;
    if ((a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0)) {
      ++crossings;
      const double w = a / (a - b);
      r_star = f.grid[i] * std::pow(f.grid[i + 1] / f.grid[i], w);
    }
  }
  require(crossings == 1, "detect_scale: ambiguous scale");
  return r_star;
}

}  // namespace llflow
