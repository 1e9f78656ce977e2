#include "llflow/tripleseries.hpp"

#include <cmath>

namespace llflow {

Complex TripleSeries::get(int k, int e, int l) const {
  auto it = c_.find({k, e, l});
  return it == c_.end() ? Complex{} : it->second;
}

void TripleSeries::set(int k, int e, int l, Complex v) {
  if (k > kmax_ || e < emin_ || l > lmax_) return;
  if (std::abs(v) == 0.0) {
    c_.erase({k, e, l});
    return;
  }
  c_[{k, e, l}] = v;
}

void TripleSeries::add_to(int k, int e, int l, Complex v) {
  if (k > kmax_ || e < emin_ || l > lmax_) return;
  auto& slot = c_[{k, e, l}];
  slot += v;
  if (std::abs(slot) < 1e-300) c_.erase({k, e, l});
}

TripleSeries TripleSeries::operator+(const TripleSeries& o) const {
  TripleSeries out(*this);
  for (const auto& [key, v] : o.c_) out.add_to(key.k, key.e, key.l, v);
  return out;
}

TripleSeries TripleSeries::operator-(const TripleSeries& o) const {
  TripleSeries out(*this);
  for (const auto& [key, v] : o.c_) out.add_to(key.k, key.e, key.l, -v);
  return out;
}

TripleSeries TripleSeries::operator*(const TripleSeries& o) const {
  TripleSeries out(kmax_, emin_, lmax_);
  for (const auto& [k1, v1] : c_)
    for (const auto& [k2, v2] : o.c_) {
      const int k = k1.k + k2.k, e = k1.e + k2.e, l = k1.l + k2.l;
      if (k > kmax_ || e < emin_ || l > lmax_) continue;
      out.add_to(k, e, l, v1 * v2);
    }
  return out;
}

TripleSeries TripleSeries::operator*(Complex s) const {
  TripleSeries out(kmax_, emin_, lmax_);
  for (const auto& [key, v] : c_) out.add_to(key.k, key.e, key.l, v * s);
  return out;
}

TripleSeries TripleSeries::conj() const {
  TripleSeries out(kmax_, emin_, lmax_);
  for (const auto& [key, v] : c_) out.set(key.k, key.e, key.l, std::conj(v));
  return out;
}

TripleSeries TripleSeries::reciprocal() const {
  const Complex lead = get(0, 0, 0);
  require(std::abs(lead) > 0.0, "tripleseries: reciprocal needs a unit term");
  // u := S/lead - 1 must be nilpotent under truncation: every term with
  // k >= 1 or e <= -1.
  TripleSeries u(kmax_, emin_, lmax_);
  for (const auto& [key, v] : c_) {
    if (key.k == 0 && key.e == 0 && key.l == 0) continue;
    require(key.k >= 1 || key.e <= -1, "tripleseries: reciprocal not nilpotent");
    u.set(key.k, key.e, key.l, v / lead);
  }
  // 1/S = (1/lead) sum_n (-u)^n
  TripleSeries out(kmax_, emin_, lmax_);
  out.set(0, 0, 0, 1.0);
  TripleSeries upow = u;
  double sign = -1.0;
  const int max_n = 2 * (kmax_ + 1) + std::abs(emin_) + 4;
  for (int n = 1; n <= max_n && !upow.empty(); ++n) {
    out = out + upow * Complex{sign, 0.0};
    upow = upow * u;
    sign = -sign;
  }
  return out * (1.0 / lead);
}

std::vector<LogPowerSeries> TripleSeries::slices(int parity_base) const {
  // Collect per-k windows.
  std::vector<LogPowerSeries> out;
  for (int k = 0; k <= kmax_; ++k) {
    int lo = 0, hi = 0;
    bool any = false;
    for (const auto& [key, v] : c_) {
      if (key.k != k) continue;
      if (!any) {
        lo = hi = key.e;
        any = true;
      } else {
        lo = std::min(lo, key.e);
        hi = std::max(hi, key.e);
      }
    }
    if (!any) {
      out.emplace_back();
      continue;
    }
    // widen to the requested parity lattice
    if ((lo - parity_base) % 2 != 0) --lo;
    if ((hi - parity_base) % 2 != 0) ++hi;
    const std::size_t K = std::size_t((hi - lo) / 2) + 1;
    LogPowerSeries s(double(lo), K, std::size_t(lmax_) + 1);
    for (const auto& [key, v] : c_) {
      if (key.k != k) continue;
      require((key.e - lo) % 2 == 0, "tripleseries: mixed parity slice");
      s.at(std::size_t((key.e - lo) / 2), std::size_t(key.l)) = v;
    }
    out.push_back(s.trimmed());
  }
  return out;
}

TripleSeries h1_tail_series(int kmax, int emin, int lmax) {
  // h1 = 2/rho * 1/(1 + rho^-2) = 2 sum_{n>=0} (-1)^n rho^{-1-2n}
  TripleSeries s(kmax, emin, lmax);
  double sign = 1.0;
  for (int n = 0; -1 - 2 * n >= emin; ++n) {
    s.set(0, -1 - 2 * n, 0, 2.0 * sign);
    sign = -sign;
  }
  return s;
}

TripleSeries h3_tail_series(int kmax, int emin, int lmax) {
  // h3 = 1 - 2 rho^-2/(1 + rho^-2) = 1 - 2 sum_{n>=1} (-1)^{n+1} rho^{-2n}
  TripleSeries s(kmax, emin, lmax);
  s.set(0, 0, 0, 1.0);
  double sign = 1.0;
  for (int n = 1; -2 * n >= emin; ++n) {
    s.set(0, -2 * n, 0, -2.0 * sign);
    sign = -sign;
  }
  return s;
}

TripleSeries stereo_compose_tails(const std::vector<LogPowerSeries>& z_tails,
                                  int kmax, int emin, int lmax) {
  TripleSeries z(kmax, emin, lmax);
  for (std::size_t k = 1; k < z_tails.size() && int(k) <= kmax; ++k) {
    const auto& s = z_tails[k];
    for (std::size_t kk = 0; kk < s.rows(); ++kk) {
      const int e = int(std::lround(s.base() + 2.0 * double(kk)));
      for (std::size_t l = 0; l < s.cols(); ++l)
        z.add_to(int(k), e, int(l), s.at(kk, l));
    }
  }
  const TripleSeries zb = z.conj();

  // gamma = sqrt(1 - w) - 1 with w = |z|^2 = z zbar (tau-grading >= 2);
  // sqrt(1 - w) = sum_n a_n w^n, a_0 = 1, a_{n+1} = -a_n (1/2 - n)/(n + 1).
  const TripleSeries w = z * zb;
  TripleSeries gamma(kmax, emin, lmax);
  TripleSeries wpow = w;
  double an = -0.5;  // a_1
  for (int n = 1; n <= kmax + 1 && !wpow.empty(); ++n) {
    gamma = gamma + wpow * Complex{an, 0.0};
    wpow = wpow * w;
    an = -an * (0.5 - double(n)) / double(n + 1);
  }

  const TripleSeries H1 = h1_tail_series(kmax, emin, lmax);
  const TripleSeries H3 = h3_tail_series(kmax, emin, lmax);
  TripleSeries one(kmax, emin, lmax);
  one.set(0, 0, 0, 1.0);

  // V1 + i V2 = h1 (1 + gamma) + z (h3+1)/2 + zbar (h3-1)/2
  const TripleSeries num =
      H1 * (one + gamma) + z * ((H3 + one) * Complex{0.5, 0.0}) + zb * ((H3 - one) * Complex{0.5, 0.0});
  // 1 + V3 = 1 + h3 (1 + gamma) - h1 (z + zbar)/2
  const TripleSeries den = one + H3 * (one + gamma) - H1 * ((z + zb) * Complex{0.5, 0.0});
  // den has leading 2 at (0,0,0) and corrections with k>=1 or e<=-2
  return num * den.reciprocal();
}

}  // namespace llflow
