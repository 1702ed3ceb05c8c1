#pragma once
// Seeded Monte Carlo driver measuring the empirical success probability of
// the estimation pipeline on corpus curves.
//
// Plan-level protocol
// -------------------
// The thickness alpha and the sample bound N are fixed ONCE per plan, from a
// certificate slice, before any trial runs:
//
//   1. estimate regularity (Delta, volume) for the curve piece;
//   2. scan seeded generic slices until the oracle certifies one whose
//      geometry terms (eps - delta, delta - eps0, mu/4, kappa) all reach
//      Delta/2, so a fraction policy yields  alpha = fraction * Delta/2  -
//      a property of the curve piece rather than of one lucky direction;
//   3. N = sample_size_bound(alpha, gamma); each trial draws  N + 1  samples
//      (or multiplier * N under a multiplier policy).
//
// Each trial then redraws its own fresh generic slice - accepted only if the
// oracle certifies the same link cardinality and the slice validates at the
// plan alpha - samples the curve, and runs the streaming estimator.  A trial
// succeeds iff the estimate equals the certificate value AND the
// well-separation flag holds.  Everything is a pure function of the plan, so
// summaries are identical regardless of thread count.

#include <atomic>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "clink/bound.hpp"
#include "clink/common.hpp"
#include "clink/corpus.hpp"
#include "clink/estimator.hpp"
#include "clink/geometry.hpp"
#include "clink/oracle.hpp"
#include "clink/regularity.hpp"
#include "clink/rng.hpp"

namespace clink {

struct AlphaPolicy {
  enum Mode { kFraction, kExplicit };
  Mode mode = kFraction;
  double value = 0.9;  // fraction in (0,1), or the explicit alpha
};

struct SampleSizePolicy {
  enum Mode { kExact, kMultiplier };
  Mode mode = kExact;        // exact: N + 1 samples
  double multiplier = 1.0;   // multiplier: round(multiplier * N), >= 1
};

struct TrialPlan {
  std::string curve_id;
  double eps = 0.0;
  double eps0 = 0.0;
  double delta = 0.0;
  double gamma = 0.1;
  AlphaPolicy alpha_policy;
  int trial_count = 1;
  std::uint64_t base_seed = 0;
  SampleSizePolicy sample_size_policy;
  double probe_density = 0.0;  // 0 = default for the annulus
};

struct TrialRecord {
  int index = 0;
  std::uint64_t seed = 0;       // base_seed + index
  int slice_attempts = 0;       // generic redraws until a valid slice
  EstimateReport report;
  bool success = false;
};

struct TrialSummary {
  TrialPlan plan;
  MultiplicityCertificate certificate;
  RegularityData regularity;
  SliceFunctional certificate_slice;
  double alpha = 0.0;          // plan-level thickness
  std::uint64_t n_bound = 0;   // sample_size_bound(alpha, gamma)
  std::uint64_t n_used = 0;    // samples drawn per trial
  int successes = 0;
  int failures = 0;
  double success_rate = 0.0;
  std::vector<TrialRecord> trials;
};

// Frozen per-plan context: certificate slice, alpha, and sample counts.
struct PlanContext {
  CorpusCurve curve;
  AnnulusSpec annulus;
  RegularityData regularity;
  SliceFunctional certificate_slice;
  MultiplicityCertificate certificate;
  double alpha = 0.0;
  std::uint64_t n_bound = 0;
  std::uint64_t n_used = 0;
  int certificate_attempts = 0;
};

namespace detail_harness {

inline double min4(const AnnulusSpec& ann, double delta,
                   const LinkGeometry& link) {
  return std::min(std::min(ann.outer - delta, delta - ann.inner),
                  std::min(link.min_pairwise / 4.0, link.boundary_gap));
}

}  // namespace detail_harness

inline PlanContext prepare_plan(const TrialPlan& plan) {
  if (plan.trial_count < 1)
    throw domain_error("trial plan: trial_count must be >= 1");
  if (!(plan.gamma > 0.0 && plan.gamma < 1.0))
    throw domain_error("trial plan: gamma must lie in (0,1)");
  if (plan.alpha_policy.mode == AlphaPolicy::kFraction &&
      !(plan.alpha_policy.value > 0.0 && plan.alpha_policy.value < 1.0))
    throw domain_error("trial plan: alpha fraction must lie in (0,1)");
  if (plan.sample_size_policy.mode == SampleSizePolicy::kMultiplier &&
      !(plan.sample_size_policy.multiplier > 0.0))
    throw domain_error("trial plan: sample-size multiplier must be positive");

  PlanContext ctx;
  ctx.curve = find_curve(builtin_corpus(), plan.curve_id);
  ctx.annulus = AnnulusSpec{ChartPoint::origin(2), plan.eps, plan.eps0};
  if (!ctx.annulus.ranges_valid() || !(plan.delta > plan.eps0) ||
      !(plan.delta < plan.eps))
    throw domain_error("trial plan: need 0 < eps0 < delta < eps");

  const double density = plan.probe_density > 0.0
                             ? plan.probe_density
                             : default_probe_density(ctx.annulus);
  ctx.regularity = estimate_regularity(ctx.curve, ctx.annulus, density);
  const double half_delta_reg = ctx.regularity.delta_M / 2.0;

  // Certificate scan: seeded, deterministic, bounded.
  constexpr int kMaxCertificateScans = 500;
  Xoshiro256pp rng(derive_seed(plan.base_seed, 0xce47u));
  std::string last_error = "no slice drawn";
  for (int attempt = 0; attempt < kMaxCertificateScans; ++attempt) {
    const SliceFunctional slice =
        draw_generic_slice(ctx.annulus.center, plan.delta, rng);
    MultiplicityCertificate cert;
    try {
      cert = certify(ctx.curve, slice, ctx.annulus);
    } catch (const numerical_error& e) {
      last_error = e.what();
      continue;
    }
    double alpha;
    if (plan.alpha_policy.mode == AlphaPolicy::kFraction) {
      // Plan-level alpha: require the slice's geometry terms to clear
      // Delta/2 so alpha depends on the curve piece, not on slice luck.
      if (detail_harness::min4(ctx.annulus, plan.delta, cert.link_points) <
          half_delta_reg) {
        last_error = "slice geometry terms below Delta/2";
        continue;
      }
      alpha = plan.alpha_policy.value * half_delta_reg;
    } else {
      alpha = plan.alpha_policy.value;
    }
    LinkParameters params{slice, ctx.annulus, alpha, ctx.regularity.delta_M,
                          cert.link_points};
    const ValidityReport v = validate_parameters(params);
    if (!v.ok) {
      last_error = "certificate slice validation: " + v.describe();
      continue;
    }
    ctx.certificate_slice = slice;
    ctx.certificate = cert;
    ctx.alpha = alpha;
    ctx.certificate_attempts = attempt + 1;
    ctx.n_bound = sample_size_bound({alpha, plan.gamma, ctx.regularity});
    if (plan.sample_size_policy.mode == SampleSizePolicy::kExact) {
      ctx.n_used = ctx.n_bound + 1;
    } else {
      const double m = plan.sample_size_policy.multiplier;
      const double raw = std::ceil(m * static_cast<double>(ctx.n_bound));
      ctx.n_used = std::max<std::uint64_t>(
          1, static_cast<std::uint64_t>(std::min(raw, 9.0e18)));
    }
    return ctx;
  }
  throw numerical_error("trial plan: no certificate slice found in " +
                        std::to_string(kMaxCertificateScans) +
                        " attempts (last: " + last_error + ")");
}

namespace detail_harness {

inline TrialRecord run_one_trial(const TrialPlan& plan, const PlanContext& ctx,
                                 int index) {
  TrialRecord rec;
  rec.index = index;
  rec.seed = plan.base_seed + static_cast<std::uint64_t>(index);

  // Fresh generic slice for this trial, consistent with the certificate:
  // the oracle must certify the same link cardinality and the slice must
  // validate at the plan alpha.
  constexpr int kMaxSliceAttempts = 100000;
  Xoshiro256pp rng(derive_seed(rec.seed, 0x517eu));
  LinkParameters params;
  bool have_slice = false;
  for (int j = 0; j < kMaxSliceAttempts && !have_slice; ++j) {
    ++rec.slice_attempts;
    const SliceFunctional slice =
        draw_generic_slice(ctx.annulus.center, plan.delta, rng);
    LinkGeometry link;
    try {
      link = link_points(ctx.curve, slice, ctx.annulus);
    } catch (const numerical_error&) {
      continue;
    }
    if (link.cardinality != ctx.certificate.link_cardinality) continue;
    params = LinkParameters{slice, ctx.annulus, ctx.alpha,
                            ctx.regularity.delta_M, link};
    if (!validate_parameters(params).ok) continue;
    have_slice = true;
  }
  if (!have_slice)
    throw numerical_error(plan.curve_id +
                          ": no valid trial slice found (trial " +
                          std::to_string(index) + ")");

  const std::uint64_t sample_seed = derive_seed(rec.seed, 0x5a3bu);
  rec.report = estimate_from_stream(ctx.curve, ctx.annulus, sample_seed,
                                    ctx.n_used, params);
  rec.success = (rec.report.e_hat == ctx.certificate.link_cardinality) &&
                rec.report.well_separated;
  return rec;
}

}  // namespace detail_harness

// Runs the full plan.  `threads` parallelizes across trials; results are
// aggregated in trial-index order, so the summary does not depend on the
// thread count.
inline TrialSummary run_trials(const TrialPlan& plan, int threads = 1) {
  const PlanContext ctx = prepare_plan(plan);

  TrialSummary sum;
  sum.plan = plan;
  sum.certificate = ctx.certificate;
  sum.regularity = ctx.regularity;
  sum.certificate_slice = ctx.certificate_slice;
  sum.alpha = ctx.alpha;
  sum.n_bound = ctx.n_bound;
  sum.n_used = ctx.n_used;
  sum.trials.resize(plan.trial_count);

  const int nthreads =
      std::max(1, std::min(threads, plan.trial_count));
  if (nthreads == 1) {
    for (int i = 0; i < plan.trial_count; ++i)
      sum.trials[i] = detail_harness::run_one_trial(plan, ctx, i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(nthreads);
    for (int t = 0; t < nthreads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (;;) {
            const int i = next.fetch_add(1);
            if (i >= plan.trial_count) break;
            sum.trials[i] = detail_harness::run_one_trial(plan, ctx, i);
          }
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  for (const auto& rec : sum.trials)
    (rec.success ? sum.successes : sum.failures)++;
  sum.success_rate =
      static_cast<double>(sum.successes) / plan.trial_count;
  return sum;
}

}  // namespace clink
