#pragma once
// Special functions used by the sampling bound: the regularized incomplete
// beta function I_y(a,b) and Euclidean ball volumes.

#include <cmath>
#include <limits>
#include <string>

#include "clink/common.hpp"

namespace clink {

struct BetaArgs {
  double y;  // upper integration limit in [0,1]
  double a;  // > 0
  double b;  // > 0
};

namespace detail {

// Continued-fraction core for the incomplete beta (modified Lentz method).
// Converges rapidly when y < (a+1)/(a+b+2); the public wrapper applies the
// symmetry I_y(a,b) = 1 - I_{1-y}(b,a) to stay in that regime.
inline double beta_cf(double a, double b, double y) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 3e-16;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * y / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * y / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * y / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw numerical_error("incomplete beta continued fraction did not converge");
}

}  // namespace detail

// I_y(a,b) = B_y(a,b) / B(a,b), absolute error well below 1e-10.
inline double regularized_incomplete_beta(const BetaArgs& args) {
  const double y = args.y, a = args.a, b = args.b;
  if (!(y >= 0.0 && y <= 1.0))
    throw domain_error("regularized_incomplete_beta: y must lie in [0,1], got " +
                       std::to_string(y));
  if (!(a > 0.0) || !(b > 0.0))
    throw domain_error("regularized_incomplete_beta: a and b must be positive");

  if (y == 0.0) return 0.0;
  if (y == 1.0) return 1.0;

  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(y) + b * std::log1p(-y);
  const double front = std::exp(ln_front);
  if (y < (a + 1.0) / (a + b + 2.0)) {
    return front * detail::beta_cf(a, b, y) / a;
  }
  return 1.0 - std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                        b * std::log1p(-y) + a * std::log(y)) *
                   detail::beta_cf(b, a, 1.0 - y) / b;
}

inline double regularized_incomplete_beta(double y, double a, double b) {
  return regularized_incomplete_beta(BetaArgs{y, a, b});
}

// Vol of the k-dimensional Euclidean ball of radius x:
// pi^{k/2} x^k / Gamma(k/2 + 1).
inline double ball_volume(int k, double x) {
  if (k < 1) throw domain_error("ball_volume: dimension must be >= 1");
  if (!(x > 0.0)) throw domain_error("ball_volume: radius must be positive");
  const double kh = 0.5 * static_cast<double>(k);
  return std::pow(3.14159265358979323846, kh) * std::pow(x, k) /
         std::tgamma(kh + 1.0);
}

}  // namespace clink
