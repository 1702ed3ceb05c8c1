#include <cmath>
#include <complex>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "clink/corpus.hpp"
#include "clink/geometry.hpp"
#include "clink/harness.hpp"
#include "clink/rng.hpp"
#include "support/test_oracles.hpp"

using clink::AnnulusSpec;
using clink::ChartPoint;
using clink::cplx;
using clink::hyperplane_distance;
using clink::in_annulus;
using clink::LinkGeometry;
using clink::LinkParameters;
using clink::pi_xi;
using clink::SliceFunctional;
using clink::validate_parameters;

namespace {

SliceFunctional make_slice(ChartPoint base, std::vector<cplx> xi,
                           double offset) {
  SliceFunctional s;
  s.base = std::move(base);
  s.direction = std::move(xi);
  s.offset = offset;
  return s;
}

// Random point and unit direction in C^2.
ChartPoint random_point(clink::Xoshiro256pp& rng, double scale) {
  return ChartPoint::from_complex(
      {cplx(rng.uniform(-scale, scale), rng.uniform(-scale, scale)),
       cplx(rng.uniform(-scale, scale), rng.uniform(-scale, scale))});
}

std::vector<cplx> random_unit(clink::Xoshiro256pp& rng) {
  std::vector<cplx> xi(2);
  double n2 = 0.0;
  do {
    for (auto& c : xi) c = cplx(rng.uniform(-1, 1), rng.uniform(-1, 1));
    n2 = std::norm(xi[0]) + std::norm(xi[1]);
  } while (n2 < 1e-4);
  const double inv = 1.0 / std::sqrt(n2);
  for (auto& c : xi) c *= inv;
  return xi;
}

// The real 4-vector corresponding to a complex pair in interleaved layout.
std::vector<double> as_real(const std::vector<cplx>& v) {
  std::vector<double> out;
  for (const auto& c : v) {
    out.push_back(c.real());
    out.push_back(c.imag());
  }
  return out;
}

}  // namespace

TEST_CASE("slice functional projects coordinates") {
  const auto s =
      make_slice(ChartPoint::origin(2), {cplx(1, 0), cplx(0, 0)}, 0.25);
  const auto z = ChartPoint::from_complex({cplx(0.3, 0.0), cplx(7.0, 2.0)});
  CHECK(pi_xi(s, z) == Catch::Approx(0.3).margin(1e-15));
  CHECK(pi_xi(s, s.base) == 0.0);
}

TEST_CASE("slice functional matches real dot-product and complex oracles") {
  clink::Xoshiro256pp rng(31001u);
  for (int rep = 0; rep < 200; ++rep) {
    const auto p = random_point(rng, 2.0);
    const auto z = random_point(rng, 2.0);
    const auto s = make_slice(p, random_unit(rng), 0.5);

    // Flat real dot product of (z - p) with xi in interleaved layout.
    const auto xi_real = as_real(s.direction);
    double dot = 0.0;
    for (int i = 0; i < 4; ++i) dot += (z.coords[i] - p.coords[i]) * xi_real[i];

    const double lib = pi_xi(s, z);
    CHECK(lib == Catch::Approx(dot).margin(1e-12));
    CHECK(lib == Catch::Approx(testsupport::hermitian_pi(s, z)).margin(1e-12));
  }
}

TEST_CASE("slice functional is affine-linear") {
  clink::Xoshiro256pp rng(31002u);
  for (int rep = 0; rep < 100; ++rep) {
    const auto p = random_point(rng, 1.5);
    const auto s = make_slice(p, random_unit(rng), 0.5);
    const auto z = random_point(rng, 1.5);
    const auto w = random_point(rng, 1.5);
    ChartPoint zw;
    zw.ambient_complex_dim = 2;
    for (int i = 0; i < 4; ++i)
      zw.coords.push_back(z.coords[i] + w.coords[i] - p.coords[i]);
    const double lhs = pi_xi(s, z) + pi_xi(s, w) - pi_xi(s, p);
    CHECK(lhs == Catch::Approx(pi_xi(s, zw)).margin(1e-12));
  }
}

TEST_CASE("slice functional rejects dimension mismatches") {
  const auto s =
      make_slice(ChartPoint::origin(2), {cplx(1, 0), cplx(0, 0)}, 0.25);
  const auto z3 = ChartPoint::origin(3);
  CHECK_THROWS_AS(pi_xi(s, z3), clink::domain_error);
}

TEST_CASE("hyperplane distance at exact levels") {
  clink::Xoshiro256pp rng(31003u);
  for (int rep = 0; rep < 50; ++rep) {
    const auto p = random_point(rng, 1.0);
    const double delta = 0.1 + rng.u01();
    const auto s = make_slice(p, random_unit(rng), delta);

    // A point on the level set: p + delta * xi (as a real 4-vector).
    const auto xi_real = as_real(s.direction);
    ChartPoint on;
    on.ambient_complex_dim = 2;
    for (int i = 0; i < 4; ++i)
      on.coords.push_back(p.coords[i] + delta * xi_real[i]);
    CHECK(hyperplane_distance(s, on) <= 1e-12);
    CHECK(pi_xi(s, on) == Catch::Approx(delta).margin(1e-12));

    // The base point itself has level 0, so its distance is delta.
    CHECK(hyperplane_distance(s, p) == Catch::Approx(delta).margin(1e-15));
  }
}

TEST_CASE("hyperplane distance matches brute grid minimization") {
  clink::Xoshiro256pp rng(31004u);
  for (int rep = 0; rep < 5; ++rep) {
    const auto p = random_point(rng, 0.5);
    const double delta = 0.2 + 0.5 * rng.u01();
    const auto s = make_slice(p, random_unit(rng), delta);
    const auto z = random_point(rng, 0.8);
    const double claimed = hyperplane_distance(s, z);

    // Orthonormal frame: the unit normal (xi in real layout) plus three
    // tangents obtained by Gram-Schmidt from the standard basis.
    const auto n = as_real(s.direction);
    std::vector<std::vector<double>> frame{n};
    for (int e = 0; e < 4 && frame.size() < 4; ++e) {
      std::vector<double> v(4, 0.0);
      v[e] = 1.0;
      for (const auto& f : frame) {
        double d = 0.0;
        for (int i = 0; i < 4; ++i) d += v[i] * f[i];
        for (int i = 0; i < 4; ++i) v[i] -= d * f[i];
      }
      double n2 = 0.0;
      for (int i = 0; i < 4; ++i) n2 += v[i] * v[i];
      if (n2 < 1e-6) continue;
      const double inv = 1.0 / std::sqrt(n2);
      for (auto& x : v) x *= inv;
      frame.push_back(v);
    }
    REQUIRE(frame.size() == 4);

    // Anchor on the hyperplane, then three successively finer grid searches
    // over tangent offsets around the running minimizer.
    std::vector<double> anchor(4);
    for (int i = 0; i < 4; ++i) anchor[i] = p.coords[i] + delta * n[i];

    std::array<double, 3> center{0.0, 0.0, 0.0};
    double best = std::numeric_limits<double>::infinity();
    double halfwidth = 3.0;
    for (int stage = 0; stage < 3; ++stage) {
      const int m = 30;
      const double step = halfwidth / m;
      std::array<double, 3> arg = center;
      for (int a = -m; a <= m; ++a)
        for (int b = -m; b <= m; ++b)
          for (int c = -m; c <= m; ++c) {
            const double ca = center[0] + a * step;
            const double cb = center[1] + b * step;
            const double cc = center[2] + c * step;
            double d2 = 0.0;
            for (int i = 0; i < 4; ++i) {
              const double w = anchor[i] + ca * frame[1][i] +
                               cb * frame[2][i] + cc * frame[3][i];
              d2 += (z.coords[i] - w) * (z.coords[i] - w);
            }
            if (d2 < best) {
              best = d2;
              arg = {ca, cb, cc};
            }
          }
      center = arg;
      halfwidth = 2.0 * step;
    }
    CHECK(std::sqrt(best) == Catch::Approx(claimed).margin(1e-4));
  }
}

TEST_CASE("annulus membership keeps both boundaries") {
  AnnulusSpec ann;
  ann.center = ChartPoint::origin(2);
  ann.inner = 0.25;
  ann.outer = 1.0;
  REQUIRE(ann.ranges_valid());

  const auto at = [](double x) {
    return ChartPoint::from_complex({cplx(x, 0.0), cplx(0.0, 0.0)});
  };
  CHECK(in_annulus(ann, at(1.0)));        // outer boundary included
  CHECK(in_annulus(ann, at(0.25)));       // inner boundary included
  CHECK(in_annulus(ann, at(0.5)));        // interior
  CHECK_FALSE(in_annulus(ann, at(0.2)));  // open inner ball removed
  CHECK_FALSE(in_annulus(ann, at(1.01)));
}

namespace {

LinkParameters synthetic_params(double alpha) {
  LinkParameters lp;
  lp.slice = make_slice(ChartPoint::origin(2), {cplx(1, 0), cplx(0, 0)}, 0.5);
  lp.annulus.center = ChartPoint::origin(2);
  lp.annulus.outer = 1.0;
  lp.annulus.inner = 0.25;
  lp.thickness = alpha;
  lp.regularity = 0.5;
  lp.link.cardinality = 2;
  lp.link.min_pairwise = 0.4;
  lp.link.boundary_gap = 0.3;
  return lp;
}

}  // namespace

TEST_CASE("thickness validation passes when every margin exceeds alpha") {
  const auto r = validate_parameters(synthetic_params(0.05));
  CHECK(r.ok);
  CHECK(r.violated.empty());
  CHECK(r.eps_minus_delta == Catch::Approx(0.5));
  CHECK(r.delta_minus_eps0 == Catch::Approx(0.25));
  CHECK(r.mu_over_4 == Catch::Approx(0.1));
  CHECK(r.kappa == Catch::Approx(0.3));
  CHECK(r.delta_reg_over_2 == Catch::Approx(0.25));
}

TEST_CASE("thickness validation names the violated margin") {
  const auto r = validate_parameters(synthetic_params(0.11));
  CHECK_FALSE(r.ok);
  REQUIRE(r.violated.size() == 1);
  CHECK(r.violated[0] == "mu_over_4");
  CHECK(r.describe() == "violated: mu_over_4");
}

TEST_CASE("thickness validation is monotone in alpha") {
  // If alpha passes, every smaller positive alpha passes; growing alpha only
  // ever adds violated terms.
  std::size_t prev_violations = 0;
  for (double alpha : {0.01, 0.05, 0.09, 0.11, 0.26, 0.31, 0.51}) {
    const auto r = validate_parameters(synthetic_params(alpha));
    CHECK(r.violated.size() >= prev_violations);
    prev_violations = r.violated.size();
  }
  CHECK(validate_parameters(synthetic_params(0.05)).ok);
  CHECK(validate_parameters(synthetic_params(0.0499)).ok);
  CHECK(validate_parameters(synthetic_params(0.001)).ok);
}

TEST_CASE("thickness validation accepts the prepared cusp plan") {
  clink::TrialPlan plan;
  plan.curve_id = "cusp";
  const auto win = clink::reference_window("cusp");
  plan.eps = win.eps;
  plan.eps0 = win.eps0;
  plan.delta = win.delta;
  plan.gamma = 0.1;
  plan.alpha_policy.mode = clink::AlphaPolicy::kFraction;
  plan.alpha_policy.value = 0.9;
  plan.trial_count = 1;
  plan.base_seed = 9;

  const auto ctx = clink::prepare_plan(plan);
  LinkParameters lp;
  lp.slice = ctx.certificate_slice;
  lp.annulus = ctx.annulus;
  lp.thickness = ctx.alpha;
  lp.regularity = ctx.regularity.delta_M;
  lp.link = ctx.certificate.link_points;
  const auto r = validate_parameters(lp);
  INFO(r.describe());
  CHECK(r.ok);

  // alpha is 0.9 x the binding Delta/2 margin by construction.
  CHECK(ctx.alpha == Catch::Approx(0.9 * ctx.regularity.delta_M / 2.0));
  CHECK(ctx.alpha <
        std::min({r.eps_minus_delta, r.delta_minus_eps0, r.mu_over_4, r.kappa,
                  r.delta_reg_over_2}));
}
