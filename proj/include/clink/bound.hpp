#pragma once
// Sample-size bound for uniform coverage of a compact manifold piece.
//
// For a k-dimensional piece M with area `volume` and regularity scale
// delta_M, the covering coefficient at scale x is
//
//   beta_M(x) = Vol(M) / [ (cos^k(theta) / 2^{k+1})
//                          * I_y((k+1)/2, 1/2) * Vol(B^k_x) ],
//   theta = arcsin(x / (4 delta_M)),
//   y     = 1 - x^2 cos^2(theta) / (16 delta_M^2),
//
// and the number of i.i.d. uniform samples that guarantees, with probability
// at least 1 - gamma, that every point of M has a sample within r is
//
//   N(r, gamma) = ceil( beta_M(r) * [ beta_M(r/2) + ln(1/gamma) ] ),
//
// valid for 0 < r < delta_M / 2.  Violated hypotheses are reported by name.

#include <cmath>
#include <cstdint>
#include <string>

#include "clink/common.hpp"
#include "clink/regularity.hpp"
#include "clink/specialfn.hpp"

namespace clink {

struct BoundQuery {
  double radius = 0.0;          // coverage radius r
  double confidence_gap = 0.0;  // gamma in (0, 1)
  RegularityData regularity;
};

// Covering coefficient beta_M(x).  Requires x > 0, delta_M > 0, volume > 0,
// and x <= 4 delta_M (arcsin domain).
inline double beta_M(const RegularityData& reg, double x) {
  if (!(x > 0.0)) throw domain_error("beta_M: scale x must be positive");
  if (!(reg.delta_M > 0.0))
    throw domain_error("beta_M: delta_M must be positive");
  if (!(reg.volume > 0.0)) throw domain_error("beta_M: volume must be positive");
  const int k = reg.intrinsic_dim;
  if (k < 1) throw domain_error("beta_M: intrinsic_dim must be >= 1");
  const double ratio = x / (4.0 * reg.delta_M);
  if (ratio > 1.0)
    throw domain_error(
        "beta_M: x / (4 delta_M) exceeds 1 (arcsin domain violated)");
  const double theta = std::asin(ratio);
  const double c = std::cos(theta);
  const double y = 1.0 - sqr(x) * sqr(c) / (16.0 * sqr(reg.delta_M));
  const double frac =
      regularized_incomplete_beta(y, (k + 1) / 2.0, 0.5);
  const double denom = (std::pow(c, k) / std::pow(2.0, k + 1)) * frac *
                       ball_volume(k, x);
  if (!(denom > 0.0))
    throw numerical_error("beta_M: degenerate covering denominator");
  return reg.volume / denom;
}

// Smallest guaranteed-coverage sample count N(r, gamma), rounded up.
// Hypotheses checked and named: radius_positive, radius_below_half_delta,
// confidence_gap_in_unit_interval, volume_positive, delta_positive.
inline std::uint64_t sample_size_bound(const BoundQuery& q) {
  if (!(q.regularity.delta_M > 0.0))
    throw domain_error("sample_size_bound: hypothesis delta_positive violated");
  if (!(q.regularity.volume > 0.0))
    throw domain_error("sample_size_bound: hypothesis volume_positive violated");
  if (!(q.radius > 0.0))
    throw domain_error("sample_size_bound: hypothesis radius_positive violated");
  if (!(q.radius < q.regularity.delta_M / 2.0))
    throw domain_error(
        "sample_size_bound: hypothesis radius_below_half_delta violated "
        "(need r < delta_M / 2)");
  if (!(q.confidence_gap > 0.0 && q.confidence_gap < 1.0))
    throw domain_error(
        "sample_size_bound: hypothesis confidence_gap_in_unit_interval "
        "violated");
  const double n = beta_M(q.regularity, q.radius) *
                   (beta_M(q.regularity, q.radius / 2.0) +
                    std::log(1.0 / q.confidence_gap));
  const double up = std::ceil(n);
  if (!(up < 9.0e18))
    throw numerical_error("sample_size_bound: count exceeds representable range");
  return static_cast<std::uint64_t>(up);
}

}  // namespace clink
