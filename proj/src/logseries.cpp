#include "llflow/logseries.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace llflow {

namespace {
constexpr double kTrimTol = 1e-14;

bool lattice_compatible(double a1, double a2) {
  const double d = (a1 - a2) / 2.0;
  return std::abs(d - std::round(d)) < 1e-9;
}
}  // namespace

LogPowerSeries LogPowerSeries::monomial(double exponent, int log_power, Complex coeff) {
  LogPowerSeries s(exponent, 1, std::size_t(log_power) + 1);
  s.at(0, std::size_t(log_power)) = coeff;
  return s;
}

Complex LogPowerSeries::coeff(double exponent, std::size_t l) const {
  if (rows() == 0) return Complex{};
  require(lattice_compatible(exponent, base_), "lattice mismatch");
  const long k = std::lround((exponent - base_) / 2.0);
  if (k >= long(rows())) return Complex{};
  if (k < 0) throw Error("order deficit");
  if (l >= cols()) return Complex{};
  return c_[std::size_t(k)][l];
}

LogPowerSeries LogPowerSeries::trimmed() const {
  std::size_t K = rows();
  auto row_zero = [&](std::size_t k) {
    for (const auto& v : c_[k])
      if (std::abs(v) > kTrimTol) return false;
    return true;
  };
  while (K > 0 && row_zero(K - 1)) --K;
  std::size_t L = 0;
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t l = 0; l < cols(); ++l)
      if (std::abs(c_[k][l]) > kTrimTol) L = std::max(L, l + 1);
  LogPowerSeries out(base_, K, std::max<std::size_t>(L, 1));
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t l = 0; l < std::min(L, cols()); ++l) out.c_[k][l] = c_[k][l];
  return out;
}

bool LogPowerSeries::equals(const LogPowerSeries& o, double tol) const {
  const auto A = trimmed();
  const auto B = o.trimmed();
  if (A.rows() == 0 && B.rows() == 0) return true;
  if (A.rows() == 0 || B.rows() == 0) return false;
  if (!lattice_compatible(A.base_, B.base_)) return false;
  if (std::abs(A.base_ - B.base_) > 1e-9) return false;
  if (A.rows() != B.rows() || A.cols() != B.cols()) return false;
  for (std::size_t k = 0; k < A.rows(); ++k)
    for (std::size_t l = 0; l < A.cols(); ++l)
      if (std::abs(A.c_[k][l] - B.c_[k][l]) > tol) return false;
  return true;
}

Complex LogPowerSeries::evaluate(double y) const {
  const double ly = std::log(y);
  Complex sum{};
  for (std::size_t k = 0; k < rows(); ++k) {
    const double yp = std::pow(y, base_ + 2.0 * double(k));
    double lp = 1.0;
    for (std::size_t l = 0; l < cols(); ++l) {
      sum += c_[k][l] * yp * lp;
      lp *= ly;
    }
  }
  return sum;
}

LogPowerSeries add(const LogPowerSeries& s1, const LogPowerSeries& s2) {
  if (s1.rows() == 0) return s2;
  if (s2.rows() == 0) return s1;
  require(lattice_compatible(s1.base_, s2.base_), "lattice mismatch");
  // Common reliable window, except when one series covers the other entirely.
  double lo = std::max(s1.base_, s2.base_);
  double hi = std::min(s1.top_exponent(), s2.top_exponent());
  if (s1.base_ <= s2.base_ + 1e-9 && s1.top_exponent() >= s2.top_exponent() - 1e-9) {
    lo = s1.base_;
    hi = s1.top_exponent();
  } else if (s2.base_ <= s1.base_ + 1e-9 && s2.top_exponent() >= s1.top_exponent() - 1e-9) {
    lo = s2.base_;
    hi = s2.top_exponent();
  }
  if (hi < lo) return LogPowerSeries(lo, 0, 1);
  const std::size_t K = std::size_t(std::lround((hi - lo) / 2.0)) + 1;
  const std::size_t L = std::max(s1.cols(), s2.cols());
  LogPowerSeries out(lo, K, L);
  for (std::size_t k = 0; k < K; ++k) {
    const double e = lo + 2.0 * double(k);
    for (std::size_t l = 0; l < L; ++l) {
      Complex v{};
      for (const auto* s : {&s1, &s2}) {
        const long kk = std::lround((e - s->base_) / 2.0);
        if (kk >= 0 && kk < long(s->rows()) && l < s->cols()) v += s->c_[std::size_t(kk)][l];
      }
      out.c_[k][l] = v;
    }
  }
  return out.trimmed();
}

LogPowerSeries add_exact(const LogPowerSeries& s1, const LogPowerSeries& s2) {
  if (s1.rows() == 0) return s2;
  if (s2.rows() == 0) return s1;
  require(lattice_compatible(s1.base_, s2.base_), "lattice mismatch");
  const double lo = std::min(s1.base_, s2.base_);
  const double hi = std::max(s1.top_exponent(), s2.top_exponent());
  const std::size_t K = std::size_t(std::lround((hi - lo) / 2.0)) + 1;
  const std::size_t L = std::max(s1.cols(), s2.cols());
  LogPowerSeries out(lo, K, L);
  for (std::size_t k = 0; k < K; ++k) {
    const double e = lo + 2.0 * double(k);
    for (std::size_t l = 0; l < L; ++l) {
      Complex v{};
      for (const auto* s : {&s1, &s2}) {
        const long kk = std::lround((e - s->base_) / 2.0);
        if (kk >= 0 && kk < long(s->rows()) && l < s->cols()) v += s->c_[std::size_t(kk)][l];
      }
      out.c_[k][l] = v;
    }
  }
  return out.trimmed();
}

LogPowerSeries mul(const LogPowerSeries& s1, const LogPowerSeries& s2) {
  if (s1.rows() == 0 || s2.rows() == 0) return LogPowerSeries(0, 0, 1);
  // Bases add, so any two lattices multiply onto the step-2 lattice at
  // base a1 + a2. Reliable up to the smaller relative order.
  const std::size_t K = std::min(s1.rows(), s2.rows());
  const std::size_t L = s1.cols() + s2.cols() - 1;
  LogPowerSeries out(s1.base_ + s2.base_, K, L);
  for (std::size_t k1 = 0; k1 < s1.rows(); ++k1)
    for (std::size_t k2 = 0; k2 < s2.rows(); ++k2) {
      if (k1 + k2 >= K) continue;
      for (std::size_t l1 = 0; l1 < s1.cols(); ++l1)
        for (std::size_t l2 = 0; l2 < s2.cols(); ++l2)
          out.c_[k1 + k2][l1 + l2] += s1.c_[k1][l1] * s2.c_[k2][l2];
    }
  return out.trimmed();
}

LogPowerSeries differentiate(const LogPowerSeries& s) {
  if (s.rows() == 0) return s;
  LogPowerSeries out(s.base_ - 1.0, s.rows(), s.cols());
  for (std::size_t k = 0; k < s.rows(); ++k) {
    const double p = s.base_ + 2.0 * double(k);
    for (std::size_t l = 0; l < s.cols(); ++l) {
      out.c_[k][l] += p * s.c_[k][l];
      if (l >= 1) out.c_[k][l - 1] += double(l) * s.c_[k][l];
    }
  }
  return out;
}

FitResult fit_series(const std::vector<double>& y, const ComplexVec& f,
                     const std::vector<FitTerm>& terms) {
  require(y.size() == f.size(), "fit_series: size mismatch");
  require(y.size() >= terms.size(), "fit_series: underdetermined");
  const std::size_t n = y.size(), m = terms.size();
  const Eigen::Index ni = Eigen::Index(n), mi = Eigen::Index(m);
  Eigen::MatrixXcd A(ni, mi);
  Eigen::VectorXcd b(ni);
  std::vector<double> scale(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const double v = std::pow(y[i], terms[j].exponent) *
                       std::pow(std::log(y[i]), terms[j].log_power);
      A(long(i), long(j)) = v;
      scale[j] = std::max(scale[j], std::abs(v));
    }
    require(scale[j] > 0.0, "fit_series: degenerate template column");
    for (std::size_t i = 0; i < n; ++i) A(long(i), long(j)) /= scale[j];
  }
  for (std::size_t i = 0; i < n; ++i) b(long(i)) = f[i];

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double cond = svd.singularValues()(0) / svd.singularValues()(long(m) - 1);
  if (!(cond < 1e8)) throw Error("fit window too narrow");
  Eigen::VectorXcd x = svd.solve(b);

  FitResult out;
  out.condition = cond;
  out.coeffs.resize(m);
  for (std::size_t j = 0; j < m; ++j) out.coeffs[j] = x(long(j)) / scale[j];
  double fmax = 0.0;
  for (std::size_t i = 0; i < n; ++i) fmax = std::max(fmax, std::abs(f[i]));
  Eigen::VectorXcd r = A * x - b;
  for (std::size_t i = 0; i < n; ++i)
    out.residual = std::max(out.residual, std::abs(r(long(i))) / (fmax > 0 ? fmax : 1.0));
  return out;
}

AlphaTable reexpand_inner_to_selfsim(const std::vector<LogPowerSeries>& family,
                                     int jmax, int itilde_min, int itilde_max) {
  AlphaTable table;
  for (int j = 0; j <= jmax; ++j) {
    for (int it = itilde_min; it <= itilde_max; ++it) {
      const int k = it + j;
      if (k < 0 || k >= int(family.size())) {
        if (k > 0 && k <= jmax + itilde_max) throw Error("order deficit");
        continue;
      }
      const auto& s = family[std::size_t(k)];
      if (s.rows() == 0) continue;
      const double e = 2.0 * double(it) - 1.0;
      for (std::size_t l = 0; l < std::max<std::size_t>(s.cols(), 1); ++l) {
        Complex c = s.coeff(e, l);  // throws "order deficit" below the window
        if (std::abs(c) > 0.0) table.a[{j, it, int(l)}] = c;
      }
    }
  }
  return table;
}

}  // namespace llflow
