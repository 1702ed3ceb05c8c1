#pragma once
// Regularity estimation for the sampled annulus piece C' of a corpus curve:
//
//   tau_M    - reach proxy for the interior, from the classical pairwise
//              bound  tau <= |q - q'|^2 / (2 dist(q' - q, T_q))  minimized
//              over ordered probe pairs, with tangent spaces from local PCA
//              over the 8 nearest probes.
//   tau_dM   - the same quantity restricted to the boundary curves
//              (|phi| = eps and |phi| = eps0), treated as a union: pairs are
//              taken across components as well, so narrow gaps between
//              boundary loops are detected.
//   rho_M    - local-diffeomorphism radius proxy: the smallest ambient
//              distance between probes whose intrinsic (graph-geodesic)
//              distance is much larger - i.e. the radius at which an ambient
//              ball first captures two distinct sheets of the curve.  When no
//              such pair exists the intrinsic diameter is used, capped by the
//              annulus diameter.
//
// Each estimate is multiplied by a 0.5 safety factor before being combined
// into delta_M = min{tau_M, tau_dM, rho_M}; all downstream parameter checks
// consume the scaled values.  Probe construction is fully deterministic
// (fixed grids, no RNG), so repeated runs agree to the bit.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <queue>
#include <vector>

#include "clink/common.hpp"
#include "clink/corpus.hpp"
#include "clink/geometry.hpp"

namespace clink {

struct RegularityData {
  double tau_M = 0.0;
  double tau_boundary = 0.0;
  double rho_M = 0.0;
  double delta_M = 0.0;  // min of the three above
  double volume = 0.0;   // 2-dimensional area of C'
  int intrinsic_dim = 2;
};

// A finite probe cloud on a manifold piece.  ambient_dim is 2 for plane
// fixtures (e.g. a circle in R^2) and 4 for curve pieces in C^2.
struct ProbeCloud {
  std::vector<Vec4> pts;
  int ambient_dim = 4;
  // Connected-component label per probe (boundary clouds have one label per
  // boundary loop; interior clouds may use a single label).
  std::vector<int> component;
};

namespace detail {

inline double dist2(const Vec4& a, const Vec4& b, int dim) {
  double s = 0.0;
  for (int d = 0; d < dim; ++d) s += sqr(a[d] - b[d]);
  return s;
}

// Jacobi eigendecomposition of a symmetric dim x dim matrix (dim <= 4).
// Returns eigenvalues (descending) and matching eigenvectors as rows.
inline void sym_eigen(double a[4][4], int dim, double eval[4],
                      double evec[4][4]) {
  double v[4][4] = {};
  for (int i = 0; i < dim; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < dim; ++p)
      for (int q = p + 1; q < dim; ++q) off += sqr(a[p][q]);
    if (off < 1e-30) break;
    for (int p = 0; p < dim; ++p) {
      for (int q = p + 1; q < dim; ++q) {
        if (std::fabs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int k = 0; k < dim; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < dim; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (int k = 0; k < dim; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  int order[4] = {0, 1, 2, 3};
  std::sort(order, order + dim,
            [&](int x, int y) { return a[x][x] > a[y][y]; });
  for (int i = 0; i < dim; ++i) {
    eval[i] = a[order[i]][order[i]];
    for (int k = 0; k < dim; ++k) evec[i][k] = v[k][order[i]];
  }
}

}  // namespace detail

// Tangent spaces by local PCA: for each probe, the top `intrinsic_dim`
// principal axes of the probe together with its 8 nearest neighbours.
// Returns intrinsic_dim orthonormal axes per probe.
inline std::vector<std::array<Vec4, 2>> pca_tangents(const ProbeCloud& cloud,
                                                     int intrinsic_dim) {
  constexpr int kNeighbors = 8;
  const int n = static_cast<int>(cloud.pts.size());
  const int dim = cloud.ambient_dim;
  if (intrinsic_dim < 1 || intrinsic_dim > 2)
    throw domain_error("pca_tangents: intrinsic_dim must be 1 or 2");
  if (n < kNeighbors + 1)
    throw domain_error("pca_tangents: need at least 9 probes");

  std::vector<std::array<Vec4, 2>> axes(n);
  std::vector<std::pair<double, int>> nbr(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j)
      nbr[j] = {detail::dist2(cloud.pts[i], cloud.pts[j], dim), j};
    std::partial_sort(nbr.begin(), nbr.begin() + kNeighbors + 1, nbr.end());

    Vec4 mean = {0, 0, 0, 0};
    for (int m = 0; m <= kNeighbors; ++m)
      for (int d = 0; d < dim; ++d) mean[d] += cloud.pts[nbr[m].second][d];
    for (int d = 0; d < dim; ++d) mean[d] /= (kNeighbors + 1);

    double cov[4][4] = {};
    for (int m = 0; m <= kNeighbors; ++m) {
      const Vec4& p = cloud.pts[nbr[m].second];
      for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b)
          cov[a][b] += (p[a] - mean[a]) * (p[b] - mean[b]);
    }
    double eval[4], evec[4][4];
    detail::sym_eigen(cov, dim, eval, evec);
    for (int k = 0; k < intrinsic_dim; ++k) {
      Vec4 ax = {0, 0, 0, 0};
      for (int d = 0; d < dim; ++d) ax[d] = evec[k][d];
      axes[i][k] = ax;
    }
    if (intrinsic_dim == 1) axes[i][1] = {0, 0, 0, 0};
  }
  return axes;
}

// Minimum over ordered probe pairs of |q-q'|^2 / (2 dist(q'-q, T_q)); pairs
// whose chord is tangent to working precision contribute the sentinel 1e12.
inline double tau_from_pairs(const ProbeCloud& cloud,
                             const std::vector<std::array<Vec4, 2>>& axes,
                             int intrinsic_dim) {
  const int n = static_cast<int>(cloud.pts.size());
  const int dim = cloud.ambient_dim;
  double best = 1e12;
  for (int i = 0; i < n; ++i) {
    const Vec4& qi = cloud.pts[i];
    const std::array<Vec4, 2>& ax = axes[i];
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      double w[4];
      double d2 = 0.0;
      for (int d = 0; d < dim; ++d) {
        w[d] = cloud.pts[j][d] - qi[d];
        d2 += w[d] * w[d];
      }
      if (d2 < 1e-18) continue;  // duplicate probe
      double tang2 = 0.0;
      for (int k = 0; k < intrinsic_dim; ++k) {
        double dot = 0.0;
        for (int d = 0; d < dim; ++d) dot += w[d] * ax[k][d];
        tang2 += dot * dot;
      }
      const double perp2 = std::max(0.0, d2 - tang2);
      const double perp = std::sqrt(perp2);
      if (perp < 1e-12) continue;  // chord within tangent noise floor
      const double tau_pair = d2 / (2.0 * perp);
      if (tau_pair < best) best = tau_pair;
    }
  }
  return best;
}

// Public reach-style estimate for an arbitrary probe cloud (used directly by
// plane-curve fixtures): pairwise bound with PCA tangents, times the 0.5
// safety factor.
inline double estimate_tau(const ProbeCloud& cloud, int intrinsic_dim) {
  const auto axes = pca_tangents(cloud, intrinsic_dim);
  return 0.5 * tau_from_pairs(cloud, axes, intrinsic_dim);
}

// Local-diffeomorphism radius proxy (times 0.5): smallest ambient distance
// between probes whose graph-geodesic distance exceeds 2.5x the ambient
// distance plus a spacing allowance, or which lie in different graph
// components.  `spacing` is the nominal ambient probe spacing.
inline double estimate_rho(const ProbeCloud& cloud, double spacing,
                           double ambient_cap) {
  constexpr int kGraphNeighbors = 8;
  const int n = static_cast<int>(cloud.pts.size());
  const int dim = cloud.ambient_dim;
  if (n < 2) throw domain_error("estimate_rho: need at least 2 probes");

  // Symmetrized kNN graph.
  std::vector<std::vector<std::pair<int, double>>> adj(n);
  {
    std::vector<std::pair<double, int>> nbr(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j)
        nbr[j] = {detail::dist2(cloud.pts[i], cloud.pts[j], dim), j};
      const int take = std::min(n - 1, kGraphNeighbors);
      std::partial_sort(nbr.begin(), nbr.begin() + take + 1, nbr.end());
      for (int m = 1; m <= take; ++m) {
        const int j = nbr[m].second;
        const double w = std::sqrt(nbr[m].first);
        adj[i].push_back({j, w});
        adj[j].push_back({i, w});
      }
    }
  }

  const int stride = std::max(1, n / 192);
  double best_obstruction = kInf;
  double max_geodesic = 0.0;
  std::vector<double> dist(n);
  using Item = std::pair<double, int>;
  for (int src = 0; src < n; src += stride) {
    std::fill(dist.begin(), dist.end(), kInf);
    dist[src] = 0.0;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
    heap.push({0.0, src});
    while (!heap.empty()) {
      auto [d, u] = heap.top();
      heap.pop();
      if (d > dist[u]) continue;
      for (const auto& [v, w] : adj[u]) {
        const double nd = d + w;
        if (nd < dist[v]) {
          dist[v] = nd;
          heap.push({nd, v});
        }
      }
    }
    for (int j = 0; j < n; ++j) {
      if (j == src) continue;
      const double amb = std::sqrt(detail::dist2(cloud.pts[src], cloud.pts[j], dim));
      if (dist[j] >= kInf) {
        // Different sheet entirely (disconnected in the graph).
        best_obstruction = std::min(best_obstruction, amb);
      } else {
        max_geodesic = std::max(max_geodesic, dist[j]);
        if (dist[j] > 2.5 * amb + 4.0 * spacing)
          best_obstruction = std::min(best_obstruction, amb);
      }
    }
  }
  const double raw = (best_obstruction < kInf)
                         ? best_obstruction
                         : std::min(std::max(max_geodesic, spacing), ambient_cap);
  return 0.5 * raw;
}

namespace detail {

struct ProbeSystem {
  ProbeCloud interior;
  ProbeCloud boundary;
  double spacing = 0.0;     // nominal ambient spacing
  double speed_max = 0.0;   // sup |phi'| over the domain
};

// Deterministic probe construction.  Interior probes form a conformal grid
// (polar in t for radially symmetric curves, Cartesian per chart for the
// rest); boundary probes trace the two level curves |phi| = eps0, eps.
// Holomorphic parametrizations are conformal, so an isotropic t-grid maps to
// a near-isotropic ambient grid, which keeps local PCA well conditioned.
inline ProbeSystem build_probes(const CorpusCurve& curve,
                                const AnnulusSpec& annulus,
                                double probe_density) {
  if (!(probe_density > 0.0))
    throw domain_error("probe_density must be positive");
  const double spacing = 1.0 / probe_density;
  if (!(spacing < annulus.inner / 10.0))
    throw domain_error(
        "probe spacing must be finer than eps0/10 (raise probe_density)");

  ProbeSystem sys;
  sys.spacing = spacing;
  sys.interior.ambient_dim = 4;
  sys.boundary.ambient_dim = 4;

  auto push = [](ProbeCloud& cloud, const ChartPoint& p, int comp) {
    cloud.pts.push_back({p.coords[0], p.coords[1], p.coords[2], p.coords[3]});
    cloud.component.push_back(comp);
  };

  if (curve.radial) {
    const double r0 = curve.radial_solve(annulus.inner);
    const double r1 = curve.radial_solve(annulus.outer);
    const auto dom = detail::make_domain(curve, annulus);
    sys.speed_max = std::sqrt(dom.speed2_max);
    const double h = spacing / sys.speed_max;  // t-plane step

    const int nr = std::max(2, static_cast<int>(std::ceil((r1 - r0) / h)) + 1);
    for (int ir = 0; ir < nr; ++ir) {
      const double r = r0 + (r1 - r0) * ir / (nr - 1);
      const int na = std::max(8, static_cast<int>(std::ceil(2.0 * kPi * r / h)));
      for (int ia = 0; ia < na; ++ia) {
        const double th = 2.0 * kPi * ia / na;
        push(sys.interior, curve.embed(std::polar(r, th)), 0);
      }
    }
    for (int side = 0; side < 2; ++side) {
      const double r = (side == 0) ? r0 : r1;
      const int na = std::max(8, static_cast<int>(std::ceil(2.0 * kPi * r / h)));
      for (int ia = 0; ia < na; ++ia) {
        const double th = 2.0 * kPi * ia / na;
        push(sys.boundary, curve.embed(std::polar(r, th)), side);
      }
    }
  } else {
    const auto dom = detail::make_domain(curve, annulus);
    sys.speed_max = std::sqrt(dom.speed2_max);
    const double h = spacing / sys.speed_max;
    const double hw = dom.halfwidth;
    const int ng = std::max(2, static_cast<int>(std::ceil(2.0 * hw / h)));
    for (std::size_t ci = 0; ci < dom.centers.size(); ++ci) {
      const cplx c = dom.centers[ci];
      for (int i = 0; i <= ng; ++i) {
        for (int j = 0; j <= ng; ++j) {
          const cplx t = c + cplx(-hw + 2.0 * hw * i / ng,
                                  -hw + 2.0 * hw * j / ng);
          const double pn = curve.phi_norm(t);
          if (pn >= annulus.inner && pn <= annulus.outer)
            push(sys.interior, curve.embed(t), static_cast<int>(ci));
        }
      }
      // Boundary loops by radial marching from the chart center: along each
      // direction, bracket the first crossing of each level and bisect.
      const int na = std::max(16, static_cast<int>(std::ceil(2.0 * kPi * hw / h)));
      for (int side = 0; side < 2; ++side) {
        const double level = (side == 0) ? annulus.inner : annulus.outer;
        const int comp = static_cast<int>(2 * ci) + side;
        for (int ia = 0; ia < na; ++ia) {
          const double th = 2.0 * kPi * ia / na;
          const cplx dir = std::polar(1.0, th);
          double lo = 0.0, hi = 0.0;
          bool found = false;
          const double step = hw / 256.0;
          for (double s = step; s <= 1.5 * hw; s += step) {
            if (curve.phi_norm(c + s * dir) >= level) {
              lo = s - step;
              hi = s;
              found = true;
              break;
            }
          }
          if (!found) continue;
          for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            (curve.phi_norm(c + mid * dir) < level ? lo : hi) = mid;
          }
          push(sys.boundary, curve.embed(c + 0.5 * (lo + hi) * dir), comp);
        }
      }
    }
  }
  return sys;
}

}  // namespace detail

// Area of the annulus piece by numerical quadrature of |phi'|^2 over the
// parameter-plane preimage: radial curves use a 1-d composite Simpson rule in
// q = |t|^2, charts use a midpoint grid with the annulus indicator.
inline double curve_volume(const CorpusCurve& curve,
                           const AnnulusSpec& annulus) {
  const auto dom = detail::make_domain(curve, annulus);
  if (dom.radial) {
    // area = pi * Integral_{q0}^{q1} g(q) dq, g(q) = |phi'|^2 at |t|^2 = q.
    const int n = 4096;  // even
    const double h = (dom.q1 - dom.q0) / n;
    double acc = dom.eval_gq(dom.q0) + dom.eval_gq(dom.q1);
    for (int i = 1; i < n; ++i)
      acc += dom.eval_gq(dom.q0 + i * h) * ((i % 2) ? 4.0 : 2.0);
    return kPi * acc * h / 3.0;
  }
  const int n = 1500;
  const double hw = dom.halfwidth;
  const double cell = 2.0 * hw / n;
  double acc = 0.0;
  for (const auto& c : dom.centers) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const cplx t = c + cplx(-hw + (i + 0.5) * cell, -hw + (j + 0.5) * cell);
        const double pn = curve.phi_norm(t);
        if (pn >= annulus.inner && pn <= annulus.outer)
          acc += curve.speed2(t);
      }
    }
  }
  return acc * cell * cell;
}

inline double default_probe_density(const AnnulusSpec& annulus) {
  return 12.0 / annulus.inner;  // spacing = eps0/12 < eps0/10
}

// Full regularity estimate for a corpus curve piece.  Requires probe spacing
// finer than eps0/10.  All three scale estimates carry the 0.5 safety factor.
inline RegularityData estimate_regularity(const CorpusCurve& curve,
                                          const AnnulusSpec& annulus,
                                          double probe_density) {
  const auto sys = detail::build_probes(curve, annulus, probe_density);

  RegularityData reg;
  reg.intrinsic_dim = 2;
  reg.volume = curve_volume(curve, annulus);
  reg.tau_M = estimate_tau(sys.interior, 2);

  {
    // Boundary tangents are per-component (each loop is a 1-manifold); the
    // pair minimum runs across the whole union so inter-loop gaps count.
    const auto& b = sys.boundary;
    int ncomp = 0;
    for (int cmp : b.component) ncomp = std::max(ncomp, cmp + 1);
    std::vector<std::array<Vec4, 2>> axes(b.pts.size());
    for (int cmp = 0; cmp < ncomp; ++cmp) {
      ProbeCloud sub;
      sub.ambient_dim = b.ambient_dim;
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < b.pts.size(); ++i)
        if (b.component[i] == cmp) {
          sub.pts.push_back(b.pts[i]);
          idx.push_back(i);
        }
      if (sub.pts.size() < 9)
        throw numerical_error("boundary loop has too few probes");
      const auto sub_axes = pca_tangents(sub, 1);
      for (std::size_t k = 0; k < idx.size(); ++k) axes[idx[k]] = sub_axes[k];
    }
    reg.tau_boundary = 0.5 * tau_from_pairs(b, axes, 1);
  }

  reg.rho_M = estimate_rho(sys.interior, sys.spacing, 2.0 * annulus.outer);
  reg.delta_M = std::min({reg.tau_M, reg.tau_boundary, reg.rho_M});
  return reg;
}

}  // namespace clink
