#pragma once

#include "llflow/util.hpp"

namespace llflow {

// Model and construction parameters. a1 is derived from a2 (a1 + a2 = 1),
// d = alpha0 - i(1/2 + nu) is always recomputed from (alpha0, nu).
struct Params {
  double a2 = 0.5;       // damping coefficient, >= 0
  double nu = 1.5;       // blowup exponent, > 1
  double alpha0 = 0.0;   // rotation rate
  int N = 2;             // expansion order, >= 2
  double delta = 0.25;   // remote cutoff scale
  double eps1 = 0.75;    // inner/self-similar boundary exponent, default nu/2
  double eps2 = 0.2;     // self-similar/remote boundary exponent, in (0, 1/2)

  double a1() const { return 1.0 - a2; }
  Complex d() const { return Complex{alpha0, -(0.5 + nu)}; }
  // The complex coefficient a1 - i a2 multiplying every spatial operator.
  Complex ac() const { return Complex{a1(), -a2}; }

  double lambda(double t) const { return std::pow(t, -0.5 - nu); }
  double alpha(double t) const { return alpha0 * std::log(t); }

  void validate() const {
    require(a2 >= 0.0 && a2 <= 1.0, "params: need 0 <= a2 <= 1");
    require(nu > 1.0, "params: need nu > 1");
    require(N >= 2, "params: need N >= 2");
    require(delta > 0.0, "params: need delta > 0");
    require(eps1 > 0.0 && eps1 < nu, "params: need 0 < eps1 < nu");
    require(eps2 > 0.0 && eps2 < 0.5, "params: need 0 < eps2 < 1/2");
  }

  static Params make(double a2, double nu, double alpha0, int N, double delta = 0.25,
                     double eps2 = 0.2) {
    Params p;
    p.a2 = a2;
    p.nu = nu;
    p.alpha0 = alpha0;
    p.N = N;
    p.delta = delta;
    p.eps1 = nu / 2.0;
    p.eps2 = eps2;
    p.validate();
    return p;
  }
};

}  // namespace llflow
