#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "clink/harness.hpp"
#include "clink/report.hpp"
#include "support/test_oracles.hpp"

using clink::AlphaPolicy;
using clink::SampleSizePolicy;
using clink::TrialPlan;
using clink::TrialSummary;

namespace {

TrialPlan line_plan(std::uint64_t seed) {
  const auto w = clink::reference_window("line");
  TrialPlan plan;
  plan.curve_id = "line";
  plan.eps = w.eps;
  plan.eps0 = w.eps0;
  plan.delta = w.delta;
  plan.base_seed = seed;
  return plan;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

int comma_fields(const std::string& line) {
  return 1 + static_cast<int>(std::count(line.begin(), line.end(), ','));
}

}  // namespace

TEST_CASE("trial plans reject invalid settings") {
  const auto good = line_plan(5);
  {
    auto p = good;
    p.trial_count = 0;
    CHECK_THROWS_WITH(clink::prepare_plan(p),
                      Catch::Matchers::ContainsSubstring("trial_count"));
  }
  for (const double g : {0.0, 1.0, 1.5, -0.1}) {
    auto p = good;
    p.gamma = g;
    CHECK_THROWS_WITH(clink::prepare_plan(p),
                      Catch::Matchers::ContainsSubstring("gamma"));
  }
  for (const double f : {0.0, 1.0, -0.5}) {
    auto p = good;
    p.alpha_policy.mode = AlphaPolicy::kFraction;
    p.alpha_policy.value = f;
    CHECK_THROWS_WITH(clink::prepare_plan(p),
                      Catch::Matchers::ContainsSubstring("fraction"));
  }
  for (const double m : {0.0, -2.0}) {
    auto p = good;
    p.sample_size_policy.mode = SampleSizePolicy::kMultiplier;
    p.sample_size_policy.multiplier = m;
    CHECK_THROWS_WITH(clink::prepare_plan(p),
                      Catch::Matchers::ContainsSubstring("multiplier"));
  }
  {
    auto p = good;
    p.delta = p.eps;  // need delta < eps
    CHECK_THROWS_WITH(clink::prepare_plan(p),
                      Catch::Matchers::ContainsSubstring("eps0 < delta"));
    p = good;
    p.delta = p.eps0;  // need eps0 < delta
    CHECK_THROWS_AS(clink::prepare_plan(p), clink::domain_error);
    p = good;
    p.eps0 = -1.0;
    CHECK_THROWS_AS(clink::prepare_plan(p), clink::domain_error);
  }
  {
    auto p = good;
    p.curve_id = "no-such-curve";
    CHECK_THROWS_AS(clink::prepare_plan(p), clink::domain_error);
  }
}

TEST_CASE("fraction policy freezes alpha from the curve regularity") {
  const auto ctx = clink::prepare_plan(line_plan(5));

  // alpha is a plan-level quantity: the fraction of half the regularity
  // scale, independent of which certificate slice was accepted.
  CHECK(ctx.alpha == 0.9 * (ctx.regularity.delta_M / 2.0));
  CHECK(ctx.alpha == Catch::Approx(0.073125).epsilon(1e-12));
  CHECK(ctx.regularity.delta_M == Catch::Approx(0.1625).epsilon(1e-12));
  CHECK(ctx.regularity.volume ==
        Catch::Approx(2.7567475535250434).epsilon(1e-12));

  CHECK(ctx.certificate.order_of_vanishing == 1);
  CHECK(ctx.certificate.lambda0 == 1);
  CHECK(ctx.certificate.link_cardinality == 1);
  CHECK(ctx.certificate_attempts >= 1);

  // The accepted slice cleared every geometric margin at Delta/2.
  CHECK(clink::detail_harness::min4(ctx.annulus, 0.5,
                                    ctx.certificate.link_points) >=
        ctx.regularity.delta_M / 2.0);

  // N is the published bound at (alpha, gamma); exact mode draws N + 1.
  const auto direct = clink::sample_size_bound(
      clink::BoundQuery{ctx.alpha, 0.1, ctx.regularity});
  CHECK(ctx.n_bound == direct);
  CHECK(ctx.n_bound == 8796053u);
  CHECK(ctx.n_used == ctx.n_bound + 1);
}

TEST_CASE("explicit alpha and multiplier policies are honored") {
  auto plan = line_plan(5);
  plan.alpha_policy.mode = AlphaPolicy::kExplicit;
  plan.alpha_policy.value = 0.05;
  plan.sample_size_policy.mode = SampleSizePolicy::kMultiplier;
  plan.sample_size_policy.multiplier = 1e-3;
  const auto ctx = clink::prepare_plan(plan);

  CHECK(ctx.alpha == 0.05);
  const auto direct = clink::sample_size_bound(
      clink::BoundQuery{0.05, 0.1, ctx.regularity});
  CHECK(ctx.n_bound == direct);
  CHECK(ctx.n_used ==
        static_cast<std::uint64_t>(
            std::ceil(1e-3 * static_cast<double>(ctx.n_bound))));

  plan.sample_size_policy.multiplier = 1.0;
  const auto ctx1 = clink::prepare_plan(plan);
  CHECK(ctx1.n_used == ctx1.n_bound);  // multiplier 1 is N, exact is N + 1
}

TEST_CASE("summaries are identical across thread counts") {
  auto plan = line_plan(1000);
  plan.trial_count = 4;
  plan.sample_size_policy.mode = SampleSizePolicy::kMultiplier;
  plan.sample_size_policy.multiplier = 1e-3;

  const auto s1 = clink::run_trials(plan, 1);
  const auto s2 = clink::run_trials(plan, 2);
  CHECK(nlohmann::json(s1) == nlohmann::json(s2));

  REQUIRE(s1.trials.size() == 4);
  int successes = 0;
  for (int i = 0; i < 4; ++i) {
    const auto& rec = s1.trials[i];
    CHECK(rec.index == i);
    CHECK(rec.seed == plan.base_seed + static_cast<std::uint64_t>(i));
    CHECK(rec.slice_attempts >= 1);
    CHECK(rec.report.sample_count == s1.n_used);
    CHECK(rec.success ==
          (rec.report.e_hat == s1.certificate.link_cardinality &&
           rec.report.well_separated));
    successes += rec.success ? 1 : 0;
  }
  CHECK(s1.successes == successes);
  CHECK(s1.failures == 4 - successes);
  CHECK(s1.success_rate == successes / 4.0);

  // Reruns of the same plan are byte-identical, not merely equivalent.
  const auto s3 = clink::run_trials(plan, 1);
  CHECK(nlohmann::json(s3).dump() == nlohmann::json(s1).dump());
}

TEST_CASE("summary json round trips losslessly") {
  auto plan = line_plan(1000);
  plan.trial_count = 2;
  plan.sample_size_policy.mode = SampleSizePolicy::kMultiplier;
  plan.sample_size_policy.multiplier = 1e-3;
  const auto sum = clink::run_trials(plan, 1);

  const nlohmann::json j = sum;
  const auto back = j.get<TrialSummary>();
  CHECK(nlohmann::json(back) == j);

  // Non-finite diagnostics survive the trip through null.
  clink::EstimateReport rep;
  rep.min_intercluster_gap = std::numeric_limits<double>::infinity();
  const nlohmann::json jr = rep;
  CHECK(jr.at("min_intercluster_gap").is_null());
  const auto rep2 = jr.get<clink::EstimateReport>();
  CHECK(rep2.min_intercluster_gap ==
        std::numeric_limits<double>::infinity());
}

TEST_CASE("report files carry the documented tables") {
  auto plan = line_plan(1000);
  plan.trial_count = 3;
  plan.sample_size_policy.mode = SampleSizePolicy::kMultiplier;
  plan.sample_size_policy.multiplier = 1e-3;
  const auto sum = clink::run_trials(plan, 1);

  const std::string dir =
      (std::filesystem::temp_directory_path() / "clink_report_test").string();
  std::filesystem::remove_all(dir);
  const auto paths = clink::emit_report(sum, dir);

  const auto loaded = clink::load_json(paths.summary_json);
  CHECK(loaded == nlohmann::json(sum));

  const auto trial_lines = read_lines(paths.trials_csv);
  REQUIRE(trial_lines.size() == 4);  // header + one row per trial
  CHECK(trial_lines[0] == clink::kTrialCsvHeader);
  for (std::size_t i = 1; i < trial_lines.size(); ++i)
    CHECK(comma_fields(trial_lines[i]) == 8);

  const auto plot_lines = read_lines(paths.plot_csv);
  REQUIRE(plot_lines.size() == 2);
  CHECK(plot_lines[0] == clink::kPlotCsvHeader);
  CHECK(comma_fields(plot_lines[1]) == 4);
  std::istringstream row(plot_lines[1]);
  std::string mult, rate, count, id;
  std::getline(row, mult, ',');
  std::getline(row, rate, ',');
  std::getline(row, count, ',');
  std::getline(row, id, ',');
  CHECK(std::stod(mult) == 1e-3);
  CHECK(std::stod(rate) == sum.success_rate);
  CHECK(std::stoi(count) == 3);
  CHECK(id == "line");

  std::filesystem::remove_all(dir);
}
