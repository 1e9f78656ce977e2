#pragma once

#include <map>

#include "llflow/logseries.hpp"
#include "llflow/util.hpp"

namespace llflow {

// Formal series  sum c[k][e][l] tau^k rho^e (ln rho)^l  with tau = t^{2 nu},
// integer rho-exponents e, truncated at tau^kmax and rho^emin. Used to
// compose the stereographic projection on the inner-region tail expansions.
class TripleSeries {
 public:
  TripleSeries() = default;
  TripleSeries(int kmax, int emin, int lmax) : kmax_(kmax), emin_(emin), lmax_(lmax) {}

  int kmax() const { return kmax_; }
  int emin() const { return emin_; }
  int lmax() const { return lmax_; }

  Complex get(int k, int e, int l) const;
  void set(int k, int e, int l, Complex v);
  void add_to(int k, int e, int l, Complex v);
  bool empty() const { return c_.empty(); }

  TripleSeries operator+(const TripleSeries& o) const;
  TripleSeries operator-(const TripleSeries& o) const;
  TripleSeries operator*(const TripleSeries& o) const;
  TripleSeries operator*(Complex s) const;
  TripleSeries conj() const;

  // 1 / (*this); requires an invertible leading term: the (k=0,e=0,l=0)
  // coefficient nonzero and every other term with k >= 1 or e <= -1.
  TripleSeries reciprocal() const;

  // Per-k LogPowerSeries slices (coefficients of tau^k as series in rho).
  std::vector<LogPowerSeries> slices(int parity_base) const;

  // Iteration over stored terms.
  template <typename F>
  void for_each(F&& f) const {
    for (const auto& [key, v] : c_) f(key.k, key.e, key.l, v);
  }

 private:
  struct Key {
    int k, e, l;
    bool operator<(const Key& o) const {
      if (k != o.k) return k < o.k;
      if (e != o.e) return e < o.e;
      return l < o.l;
    }
  };
  int kmax_ = 0, emin_ = 0, lmax_ = 0;
  std::map<Key, Complex> c_;
};

// h1 and h3 tail expansions as tau^0 series down to rho^emin.
TripleSeries h1_tail_series(int kmax, int emin, int lmax);
TripleSeries h3_tail_series(int kmax, int emin, int lmax);

// Stereographic image  W = (V1 + i V2)/(1 + V3)  of
// V = Q + sum_k tau^k (z1^k f1 + z2^k f2) + gamma Q, built from the complex
// tail series z^k = z1^k + i z2^k (family[k], k >= 1; family[0] ignored).
// gamma = sqrt(1 - |z|^2) - 1 is expanded binomially.
TripleSeries stereo_compose_tails(const std::vector<LogPowerSeries>& z_tails,
                                  int kmax, int emin, int lmax);

}  // namespace llflow
