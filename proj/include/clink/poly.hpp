#pragma once
// Univariate complex polynomials and a simultaneous-iteration root finder
// (Durand-Kerner / Weierstrass).  Degrees here are small (<= ~12): the level
// equations of parametrized curves.  Roots at exactly zero are deflated
// before iteration so monomial-heavy inputs stay well conditioned, and the
// returned roots are clustered at tolerance 1e-6 to assign multiplicities.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "clink/common.hpp"

namespace clink {

struct ComplexPolynomial {
  // Lowest degree first: p(t) = sum coefficients[i] * t^i.
  std::vector<cplx> coefficients;

  int degree() const {
    for (int i = static_cast<int>(coefficients.size()) - 1; i >= 0; --i)
      if (coefficients[i] != cplx(0.0, 0.0)) return i;
    return 0;
  }

  cplx eval(cplx t) const {
    cplx acc(0.0, 0.0);
    for (int i = static_cast<int>(coefficients.size()) - 1; i >= 0; --i)
      acc = acc * t + coefficients[i];
    return acc;
  }

  ComplexPolynomial derivative() const {
    ComplexPolynomial d;
    for (std::size_t i = 1; i < coefficients.size(); ++i)
      d.coefficients.push_back(coefficients[i] * static_cast<double>(i));
    if (d.coefficients.empty()) d.coefficients.push_back(cplx(0.0, 0.0));
    return d;
  }

  double max_coefficient_modulus() const {
    double m = 0.0;
    for (const auto& c : coefficients) m = std::max(m, std::abs(c));
    return m;
  }
};

struct RootWithMultiplicity {
  cplx value;
  int multiplicity;
};

struct RootResult {
  std::vector<RootWithMultiplicity> roots;  // clustered at tolerance 1e-6
  std::vector<cplx> raw_roots;              // degree-many, with repetition
  bool converged;                           // residual bound satisfied
  double max_residual;                      // max |p(root)| over raw roots
};

namespace detail {

inline std::vector<cplx> durand_kerner(const std::vector<cplx>& monic,
                                       int degree) {
  // monic: coefficients lowest-first with monic[degree] == 1.
  std::vector<cplx> z(degree);
  // Radius bound: 1 + max |c_i| (Cauchy), spiral start avoids symmetry locks.
  double radius = 0.0;
  for (int i = 0; i < degree; ++i) radius = std::max(radius, std::abs(monic[i]));
  radius = 1.0 + radius;
  const cplx seed(0.4, 0.9);
  cplx w = seed;
  for (int i = 0; i < degree; ++i) {
    z[i] = radius * w / std::abs(w);
    w *= seed;
  }

  auto eval = [&](cplx t) {
    cplx acc(0.0, 0.0);
    for (int i = degree; i >= 0; --i) acc = acc * t + monic[i];
    return acc;
  };

  for (int iter = 0; iter < 600; ++iter) {
    double max_step = 0.0;
    for (int i = 0; i < degree; ++i) {
      cplx denom(1.0, 0.0);
      for (int j = 0; j < degree; ++j)
        if (j != i) denom *= (z[i] - z[j]);
      if (denom == cplx(0.0, 0.0)) {
        // Collided guesses: nudge deterministically and continue.
        z[i] += cplx(1e-8 * (i + 1), 1e-8);
        max_step = 1.0;
        continue;
      }
      const cplx step = eval(z[i]) / denom;
      z[i] -= step;
      max_step = std::max(max_step, std::abs(step));
    }
    if (max_step < 1e-14 * (1.0 + radius)) break;
  }
  return z;
}

}  // namespace detail

// All degree-many roots, multiplicities assigned by clustering at 1e-6.
// converged==false flags residuals above 1e-8 * (max coefficient modulus);
// partial results are still returned for diagnosis.
inline RootResult complex_roots(const ComplexPolynomial& poly) {
  const int deg = poly.degree();
  const double max_coeff = poly.max_coefficient_modulus();
  if (max_coeff == 0.0) throw domain_error("complex_roots: zero polynomial");
  if (deg < 1)
    throw domain_error("complex_roots: degree must be at least 1");

  // Deflate exact zero roots: t^m factor when the m lowest coefficients
  // vanish identically (common for level equations through the base point).
  int zero_mult = 0;
  while (zero_mult < deg &&
         poly.coefficients[zero_mult] == cplx(0.0, 0.0))
    ++zero_mult;

  std::vector<cplx> raw;
  raw.reserve(deg);
  for (int i = 0; i < zero_mult; ++i) raw.push_back(cplx(0.0, 0.0));

  const int rem_deg = deg - zero_mult;
  if (rem_deg > 0) {
    // Normalize the deflated polynomial to monic form.
    const cplx lead = poly.coefficients[deg];
    std::vector<cplx> monic(rem_deg + 1);
    for (int i = 0; i <= rem_deg; ++i)
      monic[i] = poly.coefficients[zero_mult + i] / lead;
    auto z = detail::durand_kerner(monic, rem_deg);
    raw.insert(raw.end(), z.begin(), z.end());
  }

  RootResult result;
  result.raw_roots = raw;
  result.max_residual = 0.0;
  for (const auto& r : raw)
    result.max_residual = std::max(result.max_residual, std::abs(poly.eval(r)));
  result.converged = result.max_residual <= 1e-8 * max_coeff;

  // Greedy clustering at tolerance 1e-6.
  constexpr double kClusterTol = 1e-6;
  std::vector<cplx> sums;
  std::vector<int> counts;
  for (const auto& r : raw) {
    bool placed = false;
    for (std::size_t c = 0; c < sums.size(); ++c) {
      if (std::abs(r - sums[c] / static_cast<double>(counts[c])) < kClusterTol) {
        sums[c] += r;
        counts[c] += 1;
        placed = true;
        break;
      }
    }
    if (!placed) {
      sums.push_back(r);
      counts.push_back(1);
    }
  }
  for (std::size_t c = 0; c < sums.size(); ++c)
    result.roots.push_back(
        {sums[c] / static_cast<double>(counts[c]), counts[c]});
  return result;
}

}  // namespace clink
