#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace llflow {

using Complex = std::complex<double>;
using RealVec = std::vector<double>;
using ComplexVec = std::vector<Complex>;

inline constexpr Complex I{0.0, 1.0};

// Numerical failure or contract violation detected at runtime.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

inline double sq(double x) { return x * x; }
inline Complex sq(Complex x) { return x * x; }

}  // namespace llflow
