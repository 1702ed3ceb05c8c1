#pragma once
// Shared aliases and the error taxonomy used across the library.
//
// Error classes map onto the CLI exit-code contract:
//   domain_error    -> exit 2 (bad usage / parameter validation)
//   numerical_error -> exit 3 (non-convergence, non-consensus, degenerate draw)
//   io_error        -> exit 4 (file system / serialization)

#include <array>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace clink {

using cplx = std::complex<double>;
using Vec4 = std::array<double, 4>;

class domain_error : public std::runtime_error {
 public:
  explicit domain_error(const std::string& what) : std::runtime_error(what) {}
};

class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr double kPi = 3.141592653589793238462643383279502884;

inline double sqr(double x) { return x * x; }

}  // namespace clink
