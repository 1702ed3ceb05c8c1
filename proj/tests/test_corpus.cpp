#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "clink/corpus.hpp"
#include "clink/regularity.hpp"
#include "support/test_oracles.hpp"

using clink::AnnulusSpec;
using clink::ChartPoint;
using clink::CorpusCurve;
using clink::cplx;

namespace {

AnnulusSpec annulus_at(double outer, double inner) {
  AnnulusSpec ann;
  ann.center = ChartPoint::origin(2);
  ann.outer = outer;
  ann.inner = inner;
  return ann;
}

// Implicit polynomial evaluated at complex plane coordinates.
cplx implicit_residual(const CorpusCurve& curve, const ChartPoint& z) {
  const cplx x = z.complex_coord(0), y = z.complex_coord(1);
  cplx acc(0.0, 0.0);
  for (const auto& term : curve.implicit_terms) {
    cplx m = term.coeff;
    for (int k = 0; k < term.deg_x; ++k) m *= x;
    for (int k = 0; k < term.deg_y; ++k) m *= y;
    acc += m;
  }
  return acc;
}

}  // namespace

TEST_CASE("builtin corpus carries the expected ground truth") {
  const auto corpus = clink::builtin_corpus();
  REQUIRE(corpus.size() == 5);

  const struct {
    const char* id;
    int mult;
    bool radial;
  } expected[] = {{"line", 1, true},
                  {"cusp", 2, true},
                  {"node", 2, false},
                  {"triple", 3, true},
                  {"quadruple", 4, true}};
  for (const auto& e : expected) {
    const auto& c = clink::find_curve(corpus, e.id);
    INFO(e.id);
    CHECK(c.true_multiplicity == e.mult);
    CHECK(c.radial == e.radial);
    // Base point is the origin and lies on the curve.
    for (double x : c.base_point.coords) CHECK(x == 0.0);
    CHECK(std::abs(implicit_residual(c, c.base_point)) == 0.0);
  }

  // Parametrization spot values.
  const auto& cusp = clink::find_curve(corpus, "cusp");
  CHECK(cusp.phi1(cplx(0.5)) == cplx(0.25));
  CHECK(cusp.phi2(cplx(0.5)) == cplx(0.125));
  const auto& triple = clink::find_curve(corpus, "triple");
  CHECK(triple.phi1(cplx(2.0)) == cplx(8.0));
  CHECK(triple.phi2(cplx(2.0)) == cplx(16.0));
  const auto& node = clink::find_curve(corpus, "node");
  CHECK(node.phi1(cplx(1.0)) == cplx(0.0));
  CHECK(node.phi2(cplx(1.0)) == cplx(0.0));
  CHECK(node.phi1(cplx(2.0)) == cplx(3.0));
  CHECK(node.phi2(cplx(2.0)) == cplx(6.0));

  // The parametrization satisfies the implicit equation at random parameters.
  clink::Xoshiro256pp rng(52001u);
  for (const auto& c : corpus)
    for (int rep = 0; rep < 20; ++rep) {
      const cplx t(rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2));
      INFO(c.id << " t=" << t);
      CHECK(std::abs(implicit_residual(c, c.embed(t))) <= 1e-9);
    }
}

TEST_CASE("same seed reproduces the identical sample") {
  const auto corpus = clink::builtin_corpus();
  const auto& cusp = clink::find_curve(corpus, "cusp");
  const auto ann = annulus_at(0.5, 0.05);
  const auto a = clink::sample_uniform(cusp, ann, 500, 42);
  const auto b = clink::sample_uniform(cusp, ann, 500, 42);
  REQUIRE(a.points.size() == 500);
  REQUIRE(b.points.size() == 500);
  for (std::size_t i = 0; i < a.points.size(); ++i)
    CHECK(a.points[i].coords == b.points[i].coords);

  const auto c = clink::sample_uniform(cusp, ann, 500, 43);
  bool any_diff = false;
  for (std::size_t i = 0; i < c.points.size() && !any_diff; ++i)
    any_diff = c.points[i].coords != a.points[i].coords;
  CHECK(any_diff);
}

TEST_CASE("samples lie on the curve inside the annulus") {
  const auto corpus = clink::builtin_corpus();
  for (const auto& curve : corpus) {
    const auto win = clink::reference_window(curve.id);
    const auto ann = annulus_at(win.eps, win.eps0);
    const auto set = clink::sample_uniform(curve, ann, 400, 7);
    REQUIRE(set.points.size() == 400);
    CHECK(set.curve_id == curve.id);
    for (const auto& z : set.points) {
      INFO(curve.id);
      CHECK(clink::in_annulus(ann, z));
      CHECK(std::abs(implicit_residual(curve, z)) <= 1e-9);
    }
  }
}

TEST_CASE("sample count must be positive") {
  const auto corpus = clink::builtin_corpus();
  const auto& cusp = clink::find_curve(corpus, "cusp");
  CHECK_THROWS_AS(clink::sample_uniform(cusp, annulus_at(0.5, 0.05), 0, 1),
                  clink::domain_error);
}

TEST_CASE("cusp sampling is uniform in surface area") {
  const auto corpus = clink::builtin_corpus();
  const auto& cusp = clink::find_curve(corpus, "cusp");
  const auto ann = annulus_at(0.5, 0.05);
  constexpr int kBins = 20;
  constexpr std::size_t kCount = 10000;

  // Closed-form cumulative area for phi(t) = (t^2, t^3):
  // F(r) = pi (2 r^4 + 3 r^6), |phi(r)|^2 = r^4 + r^6.
  const auto area_to = [](double r) {
    return clink::kPi *
           (2.0 * std::pow(r, 4.0) + 3.0 * std::pow(r, 6.0));
  };
  const auto param_radius = [](double level) {
    double lo = 0.0, hi = 1.0;
    const double v2 = level * level;
    while (std::pow(hi, 4.0) + std::pow(hi, 6.0) < v2) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (std::pow(mid, 4.0) + std::pow(mid, 6.0) < v2 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  const double f0 = area_to(param_radius(ann.inner));
  const double f1 = area_to(param_radius(ann.outer));

  bool radial_ok = false, angular_ok = false;
  for (std::uint64_t seed = 71; seed < 74 && !(radial_ok && angular_ok);
       ++seed) {
    const auto set = clink::sample_uniform(cusp, ann, kCount, seed);
    std::vector<std::uint64_t> radial(kBins, 0), angular(kBins, 0);
    for (const auto& z : set.points) {
      // For the cusp, |z1| = |t|^2 and z2/z1 = t recover the parameter.
      const double r = std::sqrt(std::abs(z.complex_coord(0)));
      const double u = (area_to(r) - f0) / (f1 - f0);
      radial[std::min(kBins - 1,
                      std::max(0, static_cast<int>(u * kBins)))]++;
      const cplx t = z.complex_coord(1) / z.complex_coord(0);
      const double th = std::arg(t);  // in [-pi, pi]
      const int k = std::min(
          kBins - 1,
          std::max(0, static_cast<int>((th + clink::kPi) / (2.0 * clink::kPi) *
                                       kBins)));
      angular[k]++;
    }
    const double expect = static_cast<double>(kCount) / kBins;
    radial_ok = testsupport::chi_square_statistic(radial, expect) <
                testsupport::kChi2Crit19Dof01;
    angular_ok = testsupport::chi_square_statistic(angular, expect) <
                 testsupport::kChi2Crit19Dof01;
  }
  CHECK(radial_ok);
  CHECK(angular_ok);
}

TEST_CASE("line sampling is uniform in the parameter disk") {
  const auto corpus = clink::builtin_corpus();
  const auto& line = clink::find_curve(corpus, "line");
  const auto ann = annulus_at(1.0, 0.35);
  constexpr int kBins = 20;
  constexpr std::size_t kCount = 10000;
  const double q0 = ann.inner * ann.inner, q1 = ann.outer * ann.outer;

  bool ok = false;
  for (std::uint64_t seed = 11; seed < 14 && !ok; ++seed) {
    const auto set = clink::sample_uniform(line, ann, kCount, seed);
    // Area measure on the flat piece is dA = (1/2) dq dtheta with q = |t|^2,
    // so q must be uniform on [eps0^2, eps^2].
    std::vector<std::uint64_t> bins(kBins, 0);
    for (const auto& z : set.points) {
      const double q = std::norm(z.complex_coord(0));
      const double u = (q - q0) / (q1 - q0);
      bins[std::min(kBins - 1, std::max(0, static_cast<int>(u * kBins)))]++;
    }
    ok = testsupport::chi_square_statistic(
             bins, static_cast<double>(kCount) / kBins) <
         testsupport::kChi2Crit19Dof01;
  }
  CHECK(ok);
}

TEST_CASE("disjoint seed batches are exchangeable") {
  const auto corpus = clink::builtin_corpus();
  const auto& cusp = clink::find_curve(corpus, "cusp");
  const auto ann = annulus_at(0.5, 0.05);
  constexpr std::size_t kCount = 2000;

  bool ok = false;
  for (int attempt = 0; attempt < 3 && !ok; ++attempt) {
    const auto a =
        clink::sample_uniform(cusp, ann, kCount, 1000 + 10 * attempt);
    const auto b =
        clink::sample_uniform(cusp, ann, kCount, 2000 + 10 * attempt);
    ok = true;
    for (int coord = 0; coord < 4; ++coord) {
      std::vector<double> xs, ys;
      xs.reserve(kCount);
      ys.reserve(kCount);
      for (const auto& z : a.points) xs.push_back(z.coords[coord]);
      for (const auto& z : b.points) ys.push_back(z.coords[coord]);
      const double d = testsupport::ks_statistic(xs, ys);
      if (testsupport::ks_reject_01(d, kCount, kCount)) ok = false;
    }
  }
  CHECK(ok);
}

TEST_CASE("annulus areas match the closed form for monomial curves") {
  const auto corpus = clink::builtin_corpus();
  for (const char* id : {"line", "cusp", "triple", "quadruple"}) {
    const auto& curve = clink::find_curve(corpus, id);
    const auto win = clink::reference_window(id);
    const auto ann = annulus_at(win.eps, win.eps0);
    const auto reg = clink::estimate_regularity(
        curve, ann, clink::default_probe_density(ann));
    const double exact =
        testsupport::monomial_annulus_area(curve, win.eps0, win.eps);
    INFO(id);
    CHECK(reg.volume == Catch::Approx(exact).epsilon(1e-9));
  }
}

TEST_CASE("line regularity is pinned by the inner boundary") {
  const auto corpus = clink::builtin_corpus();
  const auto& line = clink::find_curve(corpus, "line");
  const auto ann = annulus_at(1.0, 0.35);
  const auto reg = clink::estimate_regularity(
      line, ann, clink::default_probe_density(ann));

  CHECK(reg.intrinsic_dim == 2);
  CHECK(reg.tau_M > 0.0);
  CHECK(reg.tau_boundary > 0.0);
  CHECK(reg.rho_M > 0.0);
  CHECK(reg.volume > 0.0);
  // The minimum is attained exactly.
  CHECK(reg.delta_M == std::min({reg.tau_M, reg.tau_boundary, reg.rho_M}));
  // A flat piece has unbounded interior reach; the binding scale is the
  // inner boundary circle of radius eps0, whose halved reach is eps0/2.
  CHECK(reg.delta_M == reg.tau_boundary);
  CHECK(reg.tau_boundary <= 0.5 * ann.inner * 1.05);
  CHECK(reg.tau_boundary >= 0.5 * ann.inner * 0.8);
}

TEST_CASE("circle fixture recovers half its radius") {
  // A planar unit circle probed densely: true reach 1, halved by the safety
  // factor, with only PCA tangent noise below that.
  for (int n : {400, 800}) {
    clink::ProbeCloud cloud;
    cloud.ambient_dim = 2;
    for (int i = 0; i < n; ++i) {
      const double th = 2.0 * clink::kPi * i / n;
      cloud.pts.push_back({std::cos(th), std::sin(th), 0.0, 0.0});
      cloud.component.push_back(0);
    }
    const double tau = clink::estimate_tau(cloud, 1);
    INFO("n=" << n);
    CHECK(tau >= 0.45);
    CHECK(tau <= 0.5);
  }
}

TEST_CASE("doubling probe density never raises the reach estimate by 5%") {
  const auto corpus = clink::builtin_corpus();
  const auto ann_line = annulus_at(1.0, 0.35);
  const auto ann_cusp = annulus_at(0.5, 0.3);
  const struct {
    const CorpusCurve* curve;
    AnnulusSpec ann;
    double density;
  } cases[] = {
      {&clink::find_curve(corpus, "line"), ann_line,
       clink::default_probe_density(ann_line)},
      {&clink::find_curve(corpus, "cusp"), ann_cusp, 40.0},
  };
  for (const auto& c : cases) {
    const auto r1 = clink::estimate_regularity(*c.curve, c.ann, c.density);
    const auto r2 =
        clink::estimate_regularity(*c.curve, c.ann, 2.0 * c.density);
    INFO(c.curve->id);
    CHECK(r2.tau_M <= 1.05 * r1.tau_M);
    CHECK(r2.delta_M <= 1.05 * r1.delta_M);
    // The binding scale itself is stable in both directions.
    CHECK(std::fabs(r2.delta_M - r1.delta_M) <= 0.05 * r1.delta_M);
  }
}

TEST_CASE("reach estimate collapses as the annulus approaches the cusp") {
  const auto corpus = clink::builtin_corpus();
  const auto& cusp = clink::find_curve(corpus, "cusp");
  std::vector<double> taus;
  for (double eps0 : {0.3, 0.2, 0.12}) {
    const auto ann = annulus_at(0.5, eps0);
    const auto reg = clink::estimate_regularity(
        cusp, ann, clink::default_probe_density(ann));
    taus.push_back(reg.tau_M);
  }
  CHECK(taus[1] <= 1.02 * taus[0]);
  CHECK(taus[2] <= 1.02 * taus[1]);
  CHECK(taus[2] < 0.5 * taus[0]);
}

TEST_CASE("probe spacing precondition is enforced") {
  const auto corpus = clink::builtin_corpus();
  const auto& line = clink::find_curve(corpus, "line");
  const auto ann = annulus_at(1.0, 0.35);
  // density 20 gives spacing 0.05 > eps0/10 = 0.035.
  CHECK_THROWS_WITH(clink::estimate_regularity(line, ann, 20.0),
                    Catch::Matchers::ContainsSubstring("probe spacing"));
  CHECK_THROWS_AS(clink::estimate_regularity(line, ann, -1.0),
                  clink::domain_error);
}
