#pragma once

#include <map>
#include <tuple>
#include <vector>

#include "llflow/util.hpp"

namespace llflow {

// Truncated formal sum  sum_{k,l} c[k][l] y^{a+2k} (ln y)^l  with complex
// coefficients. The exponent lattice has a real base offset `a` and fixed
// step 2; complex exponent factors like y^{2 i alpha0} are carried outside
// the series by the callers.
//
// Asymptotic-series semantics at y -> infinity: exponents above the top row
// are exactly zero, exponents below the base row are unknown (truncated).
class LogPowerSeries {
 public:
  LogPowerSeries() = default;
  LogPowerSeries(double base, std::size_t K, std::size_t Lmax_plus1)
      : base_(base), c_(K, ComplexVec(Lmax_plus1, Complex{})) {}

  static LogPowerSeries monomial(double exponent, int log_power, Complex coeff);

  double base() const { return base_; }
  std::size_t rows() const { return c_.size(); }
  std::size_t cols() const { return c_.empty() ? 0 : c_[0].size(); }
  double top_exponent() const { return base_ + 2.0 * double(rows() - 1); }

  Complex& at(std::size_t k, std::size_t l) { return c_[k][l]; }
  Complex at(std::size_t k, std::size_t l) const { return c_[k][l]; }

  // Coefficient of y^e (ln y)^l; zero above the stored window, throws
  // "order deficit" below it.
  Complex coeff(double exponent, std::size_t l) const;

  LogPowerSeries scaled(Complex s) const {
    LogPowerSeries out = *this;
    for (auto& row : out.c_)
      for (auto& v : row) v *= s;
    return out;
  }

  // Multiplication by the exact monomial y^d (no truncation).
  LogPowerSeries shifted(double dexp) const {
    LogPowerSeries out = *this;
    out.base_ += dexp;
    return out;
  }

  // Canonical form: trailing all-zero rows and log columns trimmed
  // (threshold 1e-14).
  LogPowerSeries trimmed() const;
  bool equals(const LogPowerSeries& o, double tol = 1e-12) const;

  Complex evaluate(double y) const;

 private:
  double base_ = 0.0;
  std::vector<ComplexVec> c_;

  friend LogPowerSeries add(const LogPowerSeries&, const LogPowerSeries&);
  friend LogPowerSeries add_exact(const LogPowerSeries&, const LogPowerSeries&);
  friend LogPowerSeries mul(const LogPowerSeries&, const LogPowerSeries&);
  friend LogPowerSeries differentiate(const LogPowerSeries&);
};

// Term-wise arithmetic, truncated to the smaller covered order.
// add/mul require compatible lattices (base difference an even integer);
// otherwise they throw "lattice mismatch".
LogPowerSeries add(const LogPowerSeries& s1, const LogPowerSeries& s2);

// Sum with convergent-series semantics: rows below a series' base are exact
// zeros, so the result covers the union of the windows (up to the smaller
// top when both extend upward).
LogPowerSeries add_exact(const LogPowerSeries& s1, const LogPowerSeries& s2);
LogPowerSeries mul(const LogPowerSeries& s1, const LogPowerSeries& s2);
LogPowerSeries differentiate(const LogPowerSeries& s);
inline Complex evaluate(const LogPowerSeries& s, double y) { return s.evaluate(y); }

// ---- least-squares extraction of expansion coefficients -------------------

struct FitTerm {
  double exponent = 0.0;
  int log_power = 0;
};

struct FitResult {
  ComplexVec coeffs;       // one per template term
  double residual = 0.0;   // max relative residual over the window
  double condition = 0.0;  // design-matrix condition estimate
};

// Fits samples (y_i, f_i) against sum_j c_j y^{p_j} (ln y)^{l_j}.
// Errors with "fit window too narrow" if the scaled design matrix has
// condition > 1e8.
FitResult fit_series(const std::vector<double>& y, const ComplexVec& f,
                     const std::vector<FitTerm>& terms);

// ---- reexpansion of inner-region tails into self-similar layers -----------

// Coefficients alpha(j, itilde, l) of
//   sum_j t^{nu(2j+1)} (ln y - nu ln t)^l sum_itilde alpha y^{2 itilde - 1}
// obtained from a family of rho->infinity expansions carrying t-weights
// t^{2 nu k}, k = 0..K, by the substitution rho = y t^{-nu},
// ln rho = ln y - nu ln t. Pure index regrouping: alpha(j, i, l) is the
// coefficient of rho^{2i-1} (ln rho)^l in family[i + j].
struct AlphaTable {
  std::map<std::tuple<int, int, int>, Complex> a;  // key (j, itilde, l)
  Complex get(int j, int itilde, int l) const {
    auto it = a.find({j, itilde, l});
    return it == a.end() ? Complex{} : it->second;
  }
};

AlphaTable reexpand_inner_to_selfsim(const std::vector<LogPowerSeries>& family,
                                     int jmax, int itilde_min, int itilde_max);

}  // namespace llflow
