#include "llflow/quadrature.hpp"

#include <cmath>

namespace llflow {

namespace {

// Integrand in the evenly spaced working coordinate.
template <typename T>
std::vector<T> working_integrand(const RadialGrid& g, const std::vector<T>& f) {
  std::vector<T> w(f.size());
  if (g.spacing() == Spacing::Geometric) {
    for (std::size_t i = 0; i < f.size(); ++i) w[i] = f[i] * g[i];
  } else {
    w = f;
  }
  return w;
}

template <typename T>
T simpson_even(const std::vector<T>& w, double h) {
  // Composite Simpson over an even number of intervals, 3/8 tail otherwise.
  const std::size_t n = w.size();
  T sum{};
  std::size_t last = n - 1;
  bool tail38 = (n - 1) % 2 != 0;
  if (tail38) last = n - 4;  // leave three intervals for the 3/8 rule
  for (std::size_t i = 0; i + 2 <= last; i += 2)
    sum += (w[i] + 4.0 * w[i + 1] + w[i + 2]) * (h / 3.0);
  if (tail38)
    sum += (w[n - 4] + 3.0 * w[n - 3] + 3.0 * w[n - 2] + w[n - 1]) * (3.0 * h / 8.0);
  return sum;
}

template <typename T>
std::vector<T> cumulative_impl(const RadialGrid& g, const std::vector<T>& f) {
  require(f.size() == g.size(), "quadrature: size mismatch");
  require(g.size() >= 4, "quadrature: need at least 4 nodes");
  const auto w = working_integrand(g, f);
  const double h = g.step();
  const std::size_t n = f.size();
  std::vector<T> F(n);
  F[0] = T{};
  // Segment integrals from the local cubic through four neighbours.
  F[1] = F[0] + (9.0 * w[0] + 19.0 * w[1] - 5.0 * w[2] + w[3]) * (h / 24.0);
  for (std::size_t i = 1; i + 2 < n; ++i)
    F[i + 1] = F[i] + (-w[i - 1] + 13.0 * w[i] + 13.0 * w[i + 1] - w[i + 2]) * (h / 24.0);
  F[n - 1] = F[n - 2] +
             (w[n - 4] - 5.0 * w[n - 3] + 19.0 * w[n - 2] + 9.0 * w[n - 1]) * (h / 24.0);
  return F;
}

}  // namespace

double integrate(const RadialGrid& g, const RealVec& f) {
  require(f.size() == g.size(), "quadrature: size mismatch");
  require(g.size() >= 3, "quadrature: need at least 3 nodes");
  return simpson_even(working_integrand(g, f), g.step());
}

Complex integrate(const RadialGrid& g, const ComplexVec& f) {
  require(f.size() == g.size(), "quadrature: size mismatch");
  require(g.size() >= 3, "quadrature: need at least 3 nodes");
  return simpson_even(working_integrand(g, f), g.step());
}

RealVec cumulative(const RadialGrid& g, const RealVec& f) { return cumulative_impl(g, f); }
ComplexVec cumulative(const RadialGrid& g, const ComplexVec& f) { return cumulative_impl(g, f); }

Complex head_correction(const RadialGrid& g, const ComplexVec& f) {
  // Fit f ~ c r^p through the first two nodes with usable magnitude.
  const double r0 = g[0], r1 = g[1];
  const Complex f0 = f[0], f1 = f[1];
  if (std::abs(f0) == 0.0 || std::abs(f1) == 0.0) return Complex{};
  const double p = std::log(std::abs(f1) / std::abs(f0)) / std::log(r1 / r0);
  if (!(p > -1.0 + 1e-9)) throw Error("quadrature: head integrand not integrable");
  // c r0^{p+1}/(p+1), with the complex amplitude taken at the first node.
  return f0 * r0 / (p + 1.0);
}

}  // namespace llflow
