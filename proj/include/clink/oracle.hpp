#pragma once
// Exact ground truth for corpus curves: three independent computations of
// the multiplicity of the base point, cross-checked in a certificate.
//
//   1. order_of_vanishing - lowest total degree of the implicit plane
//      polynomial at the base point (classical multiplicity).
//   2. lambda0_by_roots   - the slicing-degree formula
//        Lambda0 = #{C cap level(c generic)} - #{C cap level(0)} + 1,
//      where level sets are taken for the complex-linear functional
//      conj(xi1) phi1(t) + conj(xi2) phi2(t) and intersection points are
//      counted as DISTINCT IMAGE points on the curve (several parameter
//      roots can map to one curve point - the node's t = +/-1 both map to
//      the base point - so clustering happens in the image).
//   3. link_points        - the slice level delta intersected with the
//      epsilon ball: the curve points whose cardinality the sampling
//      pipeline estimates, together with their separation mu and boundary
//      gap kappa.
//
// A certificate where the three integers disagree signals a degenerate
// draw (non-generic direction or too-large delta) and is reported as an
// error so the caller can redraw.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "clink/common.hpp"
#include "clink/corpus.hpp"
#include "clink/geometry.hpp"
#include "clink/poly.hpp"
#include "clink/rng.hpp"

namespace clink {

struct MultiplicityCertificate {
  std::string curve_id;
  int order_of_vanishing = 0;
  int lambda0 = 0;
  int link_cardinality = 0;
  LinkGeometry link_points;
};

// Lowest total degree among monomials of the implicit polynomial; the
// polynomial must vanish at the base point (the origin).
inline int order_of_vanishing(const CorpusCurve& curve) {
  if (curve.implicit_terms.empty())
    throw domain_error(curve.id + ": no implicit form available");
  int best = -1;
  for (const auto& t : curve.implicit_terms) {
    if (t.coeff == 0.0) continue;
    if (t.deg_x == 0 && t.deg_y == 0)
      throw domain_error(curve.id +
                         ": implicit polynomial does not vanish at the base "
                         "point");
    const int total = t.deg_x + t.deg_y;
    if (best < 0 || total < best) best = total;
  }
  if (best < 0)
    throw domain_error(curve.id + ": implicit polynomial is identically zero");
  return best;
}

namespace detail_oracle {

// Greedy 1e-6 clustering of plane points; returns the number of distinct
// image points.
inline int distinct_images(const std::vector<cplx>& xs,
                           const std::vector<cplx>& ys) {
  constexpr double kTol = 1e-6;
  std::vector<cplx> cx, cy;
  std::vector<int> sizes;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    bool merged = false;
    for (std::size_t c = 0; c < cx.size(); ++c) {
      if (std::abs(xs[i] - cx[c]) + std::abs(ys[i] - cy[c]) < kTol) {
        cx[c] = (cx[c] * static_cast<double>(sizes[c]) + xs[i]) /
                static_cast<double>(sizes[c] + 1);
        cy[c] = (cy[c] * static_cast<double>(sizes[c]) + ys[i]) /
                static_cast<double>(sizes[c] + 1);
        ++sizes[c];
        merged = true;
        break;
      }
    }
    if (!merged) {
      cx.push_back(xs[i]);
      cy.push_back(ys[i]);
      sizes.push_back(1);
    }
  }
  return static_cast<int>(cx.size());
}

// Polynomial conj(xi1) phi1(t) + conj(xi2) phi2(t) - c in t.
inline ComplexPolynomial level_polynomial(const CorpusCurve& curve, cplx xi1,
                                          cplx xi2, cplx c) {
  const std::size_t n =
      std::max(curve.param_x.size(), curve.param_y.size());
  ComplexPolynomial poly;
  poly.coefficients.assign(std::max<std::size_t>(n, 1), cplx(0.0, 0.0));
  for (std::size_t d = 0; d < curve.param_x.size(); ++d)
    poly.coefficients[d] += std::conj(xi1) * curve.param_x[d];
  for (std::size_t d = 0; d < curve.param_y.size(); ++d)
    poly.coefficients[d] += std::conj(xi2) * curve.param_y[d];
  poly.coefficients[0] -= c;
  return poly;
}

// Distinct curve points on the level set of the complex functional.
inline int count_level_points(const CorpusCurve& curve, cplx xi1, cplx xi2,
                              cplx c) {
  const auto roots = complex_roots(level_polynomial(curve, xi1, xi2, c));
  if (!roots.converged)
    throw numerical_error(curve.id + ": level-set root finding did not "
                                     "converge");
  std::vector<cplx> xs, ys;
  for (const auto& r : roots.roots) {
    xs.push_back(curve.phi1(r.value));
    ys.push_back(curve.phi2(r.value));
  }
  return distinct_images(xs, ys);
}

inline cplx slice_xi1(const SliceFunctional& s) { return s.direction[0]; }
inline cplx slice_xi2(const SliceFunctional& s) { return s.direction[1]; }

}  // namespace detail_oracle

// Slicing-degree formula evaluated by root counting, with consensus over
// `trials` independent generic draws (the supplied slice is draw zero).
inline int lambda0_by_roots(const CorpusCurve& curve,
                            const SliceFunctional& slice, int trials) {
  if (trials < 1) throw domain_error("lambda0_by_roots: trials must be >= 1");
  if (!slice.unit_within(1e-9))
    throw domain_error("lambda0_by_roots: slice direction must be unit");
  std::vector<int> values;
  Xoshiro256pp rng(derive_seed(0x6f2a1c9d4b0e37ull,
                               static_cast<std::uint64_t>(trials)));
  for (int k = 0; k < trials; ++k) {
    cplx xi1, xi2;
    double c;
    if (k == 0) {
      xi1 = detail_oracle::slice_xi1(slice);
      xi2 = detail_oracle::slice_xi2(slice);
      c = slice.offset;
    } else {
      double g1, g2, g3, g4;
      rng.normal_pair(g1, g2);
      rng.normal_pair(g3, g4);
      const double n = std::sqrt(g1 * g1 + g2 * g2 + g3 * g3 + g4 * g4);
      if (n < 1e-8) { --k; continue; }
      xi1 = cplx(g1 / n, g2 / n);
      xi2 = cplx(g3 / n, g4 / n);
      c = slice.offset * (0.4 + 0.8 * rng.u01());
    }
    const int generic =
        detail_oracle::count_level_points(curve, xi1, xi2, cplx(c, 0.0));
    const int through_p =
        detail_oracle::count_level_points(curve, xi1, xi2, cplx(0.0, 0.0));
    values.push_back(generic - through_p + 1);
  }
  for (int v : values)
    if (v != values[0])
      throw numerical_error(
          curve.id +
          ": lambda0 consensus failure across generic draws (degenerate "
          "direction; redraw)");
  return values[0];
}

// The finite set C cap B_eps(p) cap level(delta): images of the parameter
// roots that land inside the epsilon ball.  Every root image must be either
// near (< eps) or far (> 2 eps); anything in the ambiguous shell means delta
// is too large for a clean split.
inline LinkGeometry link_points(const CorpusCurve& curve,
                                const SliceFunctional& slice,
                                const AnnulusSpec& annulus) {
  if (!slice.unit_within(1e-9))
    throw domain_error("link_points: slice direction must be unit");
  if (!(slice.offset > 0.0))
    throw domain_error("link_points: slice offset must be positive");
  if (distance(slice.base, annulus.center) > 1e-12)
    throw domain_error("link_points: slice base must match annulus center");
  const double eps = annulus.outer;

  const auto poly = detail_oracle::level_polynomial(
      curve, detail_oracle::slice_xi1(slice), detail_oracle::slice_xi2(slice),
      cplx(slice.offset, 0.0));
  const auto roots = complex_roots(poly);
  if (!roots.converged)
    throw numerical_error(curve.id +
                          ": link root finding did not converge");

  // Cluster root images (distinct curve points), then split near/far.
  constexpr double kTol = 1e-6;
  std::vector<cplx> ix, iy;
  for (const auto& r : roots.roots) {
    const cplx x = curve.phi1(r.value), y = curve.phi2(r.value);
    bool merged = false;
    for (std::size_t c = 0; c < ix.size(); ++c)
      if (std::abs(x - ix[c]) + std::abs(y - iy[c]) < kTol) {
        merged = true;
        break;
      }
    if (!merged) {
      ix.push_back(x);
      iy.push_back(y);
    }
  }

  std::vector<ChartPoint> near;
  for (std::size_t c = 0; c < ix.size(); ++c) {
    const double dist_p = std::sqrt(std::norm(ix[c]) + std::norm(iy[c]));
    if (dist_p < eps) {
      near.push_back(ChartPoint::from_complex({ix[c], iy[c]}));
    } else if (dist_p <= 2.0 * eps) {
      throw numerical_error(
          curve.id +
          ": link split failure: a level point lies in the shell "
          "[eps, 2 eps]; request smaller delta");
    }
  }
  if (near.empty())
    throw numerical_error(curve.id +
                          ": link is empty (delta too large or degenerate "
                          "direction)");
  return LinkGeometry::from_points(near, annulus.center, eps);
}

// Full certificate: the three independent multiplicity computations must
// agree; a mismatch is reported loudly so the caller can redraw the slice.
inline MultiplicityCertificate certify(const CorpusCurve& curve,
                                       const SliceFunctional& slice,
                                       const AnnulusSpec& annulus,
                                       int lambda_trials = 5) {
  for (const auto& c : curve.chart_centers) {
    const ChartPoint img = curve.embed(c);
    if (distance(img, curve.base_point) > 1e-9)
      throw domain_error(curve.id +
                         ": base point does not lie on the curve");
  }
  MultiplicityCertificate cert;
  cert.curve_id = curve.id;
  cert.order_of_vanishing = order_of_vanishing(curve);
  cert.lambda0 = lambda0_by_roots(curve, slice, lambda_trials);
  cert.link_points = link_points(curve, slice, annulus);
  cert.link_cardinality = cert.link_points.cardinality;
  if (cert.order_of_vanishing != cert.lambda0 ||
      cert.lambda0 != cert.link_cardinality) {
    char msg[160];
    std::snprintf(msg, sizeof msg,
                  "%s: certificate disagreement (order=%d, lambda0=%d, "
                  "link=%d); degenerate slice, redraw",
                  curve.id.c_str(), cert.order_of_vanishing, cert.lambda0,
                  cert.link_cardinality);
    throw numerical_error(msg);
  }
  return cert;
}

// Uniformly random unit direction in C^2, for generic slice draws.
inline std::vector<cplx> random_unit_direction(Xoshiro256pp& rng) {
  for (;;) {
    double g1, g2, g3, g4;
    rng.normal_pair(g1, g2);
    rng.normal_pair(g3, g4);
    const double n = std::sqrt(g1 * g1 + g2 * g2 + g3 * g3 + g4 * g4);
    if (n < 1e-8) continue;
    return {cplx(g1 / n, g2 / n), cplx(g3 / n, g4 / n)};
  }
}

inline SliceFunctional draw_generic_slice(const ChartPoint& base, double delta,
                                          Xoshiro256pp& rng) {
  SliceFunctional s;
  s.base = base;
  s.direction = random_unit_direction(rng);
  s.offset = delta;
  return s;
}

}  // namespace clink
