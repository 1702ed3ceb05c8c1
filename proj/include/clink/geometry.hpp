#pragma once
// Affine-chart geometry: the real embedding of C^{n+1}, the slicing
// functional, the annulus membership test, and the joint validity predicate
// tying the slab thickness alpha to the derived separation quantities.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "clink/common.hpp"

namespace clink {

constexpr double kInf = std::numeric_limits<double>::infinity();

// A point of the affine chart C^{n+1} ~ R^{2n+2}; coords interleave real and
// imaginary parts: (Re z_0, Im z_0, Re z_1, Im z_1, ...).  This layout is the
// on-disk CSV layout as well, so it is fixed and documented.
struct ChartPoint {
  std::vector<double> coords;
  int ambient_complex_dim = 0;

  static ChartPoint from_complex(const std::vector<cplx>& z) {
    ChartPoint p;
    p.ambient_complex_dim = static_cast<int>(z.size());
    p.coords.reserve(2 * z.size());
    for (const auto& c : z) {
      p.coords.push_back(c.real());
      p.coords.push_back(c.imag());
    }
    return p;
  }

  static ChartPoint origin(int complex_dim) {
    ChartPoint p;
    p.ambient_complex_dim = complex_dim;
    p.coords.assign(2 * complex_dim, 0.0);
    return p;
  }

  cplx complex_coord(int i) const {
    return cplx(coords[2 * i], coords[2 * i + 1]);
  }

  bool valid() const {
    return static_cast<int>(coords.size()) == 2 * ambient_complex_dim;
  }
};

inline double distance(const ChartPoint& a, const ChartPoint& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.coords.size(); ++i)
    s += sqr(a.coords[i] - b.coords[i]);
  return std::sqrt(s);
}

inline double norm(const ChartPoint& a) {
  double s = 0.0;
  for (double c : a.coords) s += sqr(c);
  return std::sqrt(s);
}

// The slicing data (p, xi, delta):  pi(z) = Re<z - p, xi>  with the standard
// Hermitian inner product <w, xi> = sum_i w_i * conj(xi_i), and the offset
// level set pi^{-1}(delta).
struct SliceFunctional {
  ChartPoint base;              // p
  std::vector<cplx> direction;  // unit vector xi
  double offset = 0.0;          // delta > 0

  double direction_norm() const {
    double s = 0.0;
    for (const auto& c : direction) s += std::norm(c);
    return std::sqrt(s);
  }

  bool unit_within(double tol) const {
    return std::fabs(direction_norm() - 1.0) <= tol;
  }
};

inline void check_dimensions(const SliceFunctional& slice, const ChartPoint& z) {
  if (z.ambient_complex_dim != slice.base.ambient_complex_dim ||
      static_cast<int>(slice.direction.size()) != slice.base.ambient_complex_dim)
    throw domain_error("slice functional: ambient dimension mismatch");
}

// Re<z - p, xi>.  Expanding into real coordinates: Re(w * conj(xi)) =
// Re(w)Re(xi) + Im(w)Im(xi) summed over complex coordinates.
inline double pi_xi(const SliceFunctional& slice, const ChartPoint& z) {
  check_dimensions(slice, z);
  double acc = 0.0;
  for (int i = 0; i < z.ambient_complex_dim; ++i) {
    const double wr = z.coords[2 * i] - slice.base.coords[2 * i];
    const double wi = z.coords[2 * i + 1] - slice.base.coords[2 * i + 1];
    acc += wr * slice.direction[i].real() + wi * slice.direction[i].imag();
  }
  return acc;
}

// |pi(z) - delta|; equals the Euclidean distance from z to the level
// hyperplane because xi is unit.
inline double hyperplane_distance(const SliceFunctional& slice,
                                  const ChartPoint& z) {
  return std::fabs(pi_xi(slice, z) - slice.offset);
}

// The annulus B_eps(p) minus the open inner ball: closed on both boundaries.
struct AnnulusSpec {
  ChartPoint center;  // p
  double outer = 0.0;  // eps
  double inner = 0.0;  // eps0

  bool ranges_valid() const { return 0.0 < inner && inner < outer; }
};

inline bool in_annulus(const AnnulusSpec& annulus, const ChartPoint& z) {
  const double d = distance(annulus.center, z);
  return annulus.inner <= d && d <= annulus.outer;
}

// The finite point set C cap B_eps(p) cap pi^{-1}(delta) with its two derived
// separation quantities.  With a single point the pairwise minimum is empty;
// it is represented as +infinity so downstream gap conditions are vacuous.
struct LinkGeometry {
  std::vector<ChartPoint> points;
  int cardinality = 0;
  double min_pairwise = kInf;  // mu
  double boundary_gap = 0.0;   // kappa = min_i (eps - |p - x_i|)

  static LinkGeometry from_points(std::vector<ChartPoint> pts,
                                  const ChartPoint& p, double eps) {
    LinkGeometry g;
    g.points = std::move(pts);
    g.cardinality = static_cast<int>(g.points.size());
    g.min_pairwise = kInf;
    for (std::size_t i = 0; i < g.points.size(); ++i)
      for (std::size_t j = i + 1; j < g.points.size(); ++j)
        g.min_pairwise = std::min(g.min_pairwise,
                                  distance(g.points[i], g.points[j]));
    g.boundary_gap = kInf;
    for (const auto& x : g.points)
      g.boundary_gap = std::min(g.boundary_gap, eps - distance(p, x));
    if (g.points.empty()) g.boundary_gap = 0.0;
    return g;
  }
};

// Full parameter tuple for one estimation run.
struct LinkParameters {
  SliceFunctional slice;
  AnnulusSpec annulus;
  double thickness = 0.0;   // alpha
  double regularity = 0.0;  // Delta estimate for the annulus piece
  LinkGeometry link;
};

struct ValidityReport {
  bool ok = false;
  std::vector<std::string> violated;  // names of failed constraint terms
  // Term values, in the fixed order below, for diagnostics.
  double eps_minus_delta = 0.0;
  double delta_minus_eps0 = 0.0;
  double mu_over_4 = 0.0;
  double kappa = 0.0;
  double delta_reg_over_2 = 0.0;

  std::string describe() const {
    if (ok) return "ok";
    std::string s = "violated:";
    for (const auto& v : violated) s += " " + v;
    return s;
  }
};

// alpha must be strictly below all five of
//   eps - delta, delta - eps0, mu/4, kappa, Delta/2.
// Violations are data, not errors: every failed term is named.
inline ValidityReport validate_parameters(const LinkParameters& params) {
  ValidityReport r;
  const double eps = params.annulus.outer;
  const double eps0 = params.annulus.inner;
  const double delta = params.slice.offset;
  const double alpha = params.thickness;

  r.eps_minus_delta = eps - delta;
  r.delta_minus_eps0 = delta - eps0;
  r.mu_over_4 = params.link.min_pairwise / 4.0;
  r.kappa = params.link.boundary_gap;
  r.delta_reg_over_2 = params.regularity / 2.0;

  auto check = [&](double term, const char* name) {
    if (!(alpha < term)) r.violated.push_back(name);
  };
  check(r.eps_minus_delta, "eps_minus_delta");
  check(r.delta_minus_eps0, "delta_minus_eps0");
  check(r.mu_over_4, "mu_over_4");
  check(r.kappa, "kappa");
  check(r.delta_reg_over_2, "Delta_over_2");
  r.ok = r.violated.empty() && alpha > 0.0;
  if (!(alpha > 0.0)) r.violated.push_back("alpha_positive");
  return r;
}

}  // namespace clink
