// clink — command-line front end for the multiplicity-estimation library.
//
// Subcommands
//   bound     resolve a plan (regularity probe + slice certificate) and
//             print the sample-size bound with its full provenance
//   certify   run the exact oracle on one seeded slice draw
//   estimate  one estimate: corpus mode (--curve) or blind mode (--input)
//   trials    seeded Monte Carlo trials, reports written to an output dir
//   sample    export the corpus sample a given seed would use, as CSV
//
// Conventions
//   * every subcommand is deterministic given its full flag set;
//   * config precedence: flags > --config file > built-in defaults, where
//     the config file carries the same JSON schema as emitted plans (a
//     trial_summary is accepted too — its embedded plan is used);
//   * exit codes: 0 success, 2 usage/validation, 3 numerical failure,
//     4 I/O failure.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "clink/corpus.hpp"
#include "clink/csv.hpp"
#include "clink/estimator.hpp"
#include "clink/harness.hpp"
#include "clink/oracle.hpp"
#include "clink/regularity.hpp"
#include "clink/report.hpp"

namespace {

using namespace clink;

std::string fmt(double v) { return detail_csv::format_double(v); }

void kv(const std::string& key, const std::string& val) {
  std::printf("%-22s %s\n", key.c_str(), val.c_str());
}

// Default output directory: $CLINK_OUT_DIR when set, else the working dir.
std::string default_out_dir() {
  const char* env = std::getenv("CLINK_OUT_DIR");
  if (env && *env) return env;
  return ".";
}

// ---------------------------------------------------------------------------
// Config overlay (flags > config > defaults).

struct Overlay {
  nlohmann::json j;
  bool loaded = false;

  bool has(const char* key) const { return loaded && j.contains(key); }
  template <typename T>
  T get(const char* key) const {
    return j.at(key).get<T>();
  }
};

Overlay load_overlay(const std::string& path) {
  Overlay o;
  if (path.empty()) return o;
  o.j = load_json(path);
  if (o.j.contains("kind") && o.j["kind"] == "trial_summary")
    o.j = o.j.at("plan");
  o.loaded = true;
  return o;
}

// One resolved parameter set shared by all subcommands.  A value comes from
// its flag when passed, else from the config file, else from the built-in
// default (the per-curve reference window for the geometry).
struct Resolved {
  std::string curve_id;
  double eps = 0.0, eps0 = 0.0, delta = 0.0, gamma = 0.1;
  AlphaPolicy alpha_policy;
  SampleSizePolicy size_policy;
  std::uint64_t seed = 0;
  int trials = 1;
  double probe_density = 0.0;

  TrialPlan plan() const {
    TrialPlan p;
    p.curve_id = curve_id;
    p.eps = eps;
    p.eps0 = eps0;
    p.delta = delta;
    p.gamma = gamma;
    p.alpha_policy = alpha_policy;
    p.trial_count = trials;
    p.base_seed = seed;
    p.sample_size_policy = size_policy;
    p.probe_density = probe_density;
    return p;
  }
};

// Flag storage + option handles for precedence checks.
struct CommonFlags {
  std::string curve, config;
  double eps = 0.0, eps0 = 0.0, delta = 0.0, gamma = 0.1;
  double alpha = 0.0, alpha_fraction = 0.9, probe_density = 0.0;
  std::uint64_t seed = 0;
  int trials = 1;
  CLI::Option* o_curve = nullptr;
  CLI::Option* o_eps = nullptr;
  CLI::Option* o_eps0 = nullptr;
  CLI::Option* o_delta = nullptr;
  CLI::Option* o_gamma = nullptr;
  CLI::Option* o_alpha = nullptr;
  CLI::Option* o_alpha_fraction = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_trials = nullptr;
  CLI::Option* o_probe = nullptr;

  void add_geometry(CLI::App* cmd) {
    o_curve = cmd->add_option("--curve", curve, "corpus curve id");
    o_eps = cmd->add_option("--eps", eps, "annulus outer radius");
    o_eps0 = cmd->add_option("--eps0", eps0, "annulus inner radius");
    o_delta = cmd->add_option("--delta", delta, "slice offset");
    cmd->add_option("--config", config,
                    "JSON config (same schema as emitted plans/summaries)");
  }
  void add_statistics(CLI::App* cmd) {
    o_gamma = cmd->add_option("--gamma", gamma, "confidence gap in (0,1)");
    o_alpha = cmd->add_option("--alpha", alpha, "explicit slab half-width");
    o_alpha_fraction =
        cmd->add_option("--alpha-fraction", alpha_fraction,
                        "slab half-width as a fraction of the valid maximum");
    o_alpha->excludes(o_alpha_fraction);
    o_probe = cmd->add_option("--probe-density", probe_density,
                              "regularity probe density (0 = auto)");
  }
  void add_seed(CLI::App* cmd) {
    o_seed = cmd->add_option("--seed", seed, "base RNG seed");
  }

  Resolved resolve() const {
    const Overlay cfg = load_overlay(config);

    Resolved r;
    r.curve_id = (o_curve && o_curve->count()) ? curve
                 : cfg.has("curve_id") ? cfg.get<std::string>("curve_id")
                                       : std::string();
    if (r.curve_id.empty())
      throw domain_error("no curve selected: pass --curve or a config file");
    const ReferenceWindow win = reference_window(r.curve_id);

    auto num = [&](const CLI::Option* opt, double flag_val, const char* key,
                   double fallback) {
      if (opt && opt->count()) return flag_val;
      if (cfg.has(key)) return cfg.get<double>(key);
      return fallback;
    };
    r.eps = num(o_eps, eps, "eps", win.eps);
    r.eps0 = num(o_eps0, eps0, "eps0", win.eps0);
    r.delta = num(o_delta, delta, "delta", win.delta);
    r.gamma = num(o_gamma, gamma, "gamma", 0.1);
    r.probe_density = num(o_probe, probe_density, "probe_density", 0.0);

    if (o_alpha && o_alpha->count()) {
      r.alpha_policy.mode = AlphaPolicy::kExplicit;
      r.alpha_policy.value = alpha;
    } else if (o_alpha_fraction && o_alpha_fraction->count()) {
      r.alpha_policy.mode = AlphaPolicy::kFraction;
      r.alpha_policy.value = alpha_fraction;
    } else if (cfg.has("alpha_policy")) {
      r.alpha_policy = cfg.get<AlphaPolicy>("alpha_policy");
    }  // else: default fraction 0.9 from the struct initializer

    r.seed = (o_seed && o_seed->count()) ? seed
             : cfg.has("base_seed") ? cfg.get<std::uint64_t>("base_seed")
                                    : 0;
    r.trials = (o_trials && o_trials->count()) ? trials
               : cfg.has("trial_count") ? cfg.get<int>("trial_count")
                                        : 1;
    if (cfg.has("sample_size_policy"))
      r.size_policy = cfg.get<SampleSizePolicy>("sample_size_policy");
    return r;
  }
};

// ---------------------------------------------------------------------------
// bound

int cmd_bound(const Resolved& r, const std::string& format) {
  TrialPlan plan = r.plan();
  plan.trial_count = 1;
  const PlanContext ctx = prepare_plan(plan);
  const MultiplicityCertificate& cert = ctx.certificate;

  if (format == "json") {
    nlohmann::json j{{"kind", "bound_report"},
                     {"curve_id", plan.curve_id},
                     {"eps", plan.eps},
                     {"eps0", plan.eps0},
                     {"delta", plan.delta},
                     {"gamma", plan.gamma},
                     {"alpha_policy", plan.alpha_policy},
                     {"alpha", ctx.alpha},
                     {"certificate_attempts", ctx.certificate_attempts},
                     {"certificate", cert},
                     {"regularity", ctx.regularity},
                     {"sample_size_bound", ctx.n_bound}};
    std::printf("%s\n", j.dump(2).c_str());
    return 0;
  }
  kv("curve", plan.curve_id);
  kv("eps", fmt(plan.eps));
  kv("eps0", fmt(plan.eps0));
  kv("delta", fmt(plan.delta));
  kv("gamma", fmt(plan.gamma));
  kv("alpha_policy",
     (plan.alpha_policy.mode == AlphaPolicy::kFraction ? "fraction "
                                                       : "explicit ") +
         fmt(plan.alpha_policy.value));
  kv("alpha", fmt(ctx.alpha));
  kv("certificate", "order=" + std::to_string(cert.order_of_vanishing) +
                        " lambda0=" + std::to_string(cert.lambda0) +
                        " link=" + std::to_string(cert.link_cardinality));
  kv("certificate_attempts", std::to_string(ctx.certificate_attempts));
  kv("tau_interior", fmt(ctx.regularity.tau_M));
  kv("tau_boundary", fmt(ctx.regularity.tau_boundary));
  kv("injectivity_radius", fmt(ctx.regularity.rho_M));
  kv("delta_min", fmt(ctx.regularity.delta_M));
  kv("volume", fmt(ctx.regularity.volume));
  kv("intrinsic_dim", std::to_string(ctx.regularity.intrinsic_dim));
  kv("sample_size_bound", std::to_string(ctx.n_bound));
  return 0;
}

// ---------------------------------------------------------------------------
// certify

int cmd_certify(const Resolved& r, const std::string& format) {
  const CorpusCurve curve = find_curve(builtin_corpus(), r.curve_id);
  const AnnulusSpec annulus{ChartPoint::origin(2), r.eps, r.eps0};
  if (!annulus.ranges_valid() || !(r.delta > r.eps0) || !(r.delta < r.eps))
    throw domain_error("certify: need 0 < eps0 < delta < eps");

  Xoshiro256pp rng(derive_seed(r.seed, 0xce47u));
  const SliceFunctional slice =
      draw_generic_slice(annulus.center, r.delta, rng);
  MultiplicityCertificate cert;
  try {
    cert = certify(curve, slice, annulus);
  } catch (const numerical_error& e) {
    throw numerical_error(std::string(e.what()) +
                          " (degenerate draw: try a different --seed)");
  }

  if (format == "json") {
    std::printf("%s\n", nlohmann::json(cert).dump(2).c_str());
    return 0;
  }
  kv("curve", r.curve_id);
  kv("seed", std::to_string(r.seed));
  kv("order_of_vanishing", std::to_string(cert.order_of_vanishing));
  kv("lambda0", std::to_string(cert.lambda0));
  kv("link_cardinality", std::to_string(cert.link_cardinality));
  kv("agreement", "yes");
  return 0;
}

// ---------------------------------------------------------------------------
// estimate

void write_or_print(const nlohmann::json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::printf("%s\n", j.dump(2).c_str());
    return;
  }
  save_json(out_path, j);
  std::printf("wrote %s\n", out_path.c_str());
}

void print_estimate_text(const EstimateReport& rep) {
  kv("curve", rep.curve_id.empty() ? "(blind)" : rep.curve_id);
  kv("seed", std::to_string(rep.seed));
  kv("sample_count", std::to_string(rep.sample_count));
  kv("slab_count", std::to_string(rep.slab_count));
  kv("alpha", fmt(rep.alpha));
  kv("e_hat", std::to_string(rep.e_hat));
  std::string sizes;
  for (const auto s : rep.cluster_sizes)
    sizes += (sizes.empty() ? "" : " ") + std::to_string(s);
  kv("cluster_sizes", sizes.empty() ? "(none)" : sizes);
  kv("max_diameter", fmt(rep.max_diameter));
  kv("min_intercluster_gap", fmt(rep.min_intercluster_gap));
  if (rep.mu_known) kv("mu", fmt(rep.mu));
  kv("well_separated", rep.well_separated ? "yes" : "no");
}

// Corpus mode: exact link from the oracle fixes mu; the slice is redrawn
// (deterministically) until the draw is generic and the parameter set is
// valid at the resolved alpha.
EstimateReport estimate_corpus(const Resolved& r, std::uint64_t count) {
  const CorpusCurve curve = find_curve(builtin_corpus(), r.curve_id);
  const AnnulusSpec annulus{ChartPoint::origin(2), r.eps, r.eps0};
  if (!annulus.ranges_valid() || !(r.delta > r.eps0) || !(r.delta < r.eps))
    throw domain_error("estimate: need 0 < eps0 < delta < eps");

  const double density = r.probe_density > 0.0
                             ? r.probe_density
                             : default_probe_density(annulus);
  const RegularityData reg = estimate_regularity(curve, annulus, density);
  const double alpha = r.alpha_policy.mode == AlphaPolicy::kExplicit
                           ? r.alpha_policy.value
                           : r.alpha_policy.value * reg.delta_M / 2.0;

  Xoshiro256pp rng(derive_seed(r.seed, 0x517eu));
  LinkParameters params;
  bool found = false;
  std::string last_error = "no viable slice draw";
  for (int attempt = 0; attempt < 1000 && !found; ++attempt) {
    const SliceFunctional slice =
        draw_generic_slice(annulus.center, r.delta, rng);
    LinkGeometry link;
    try {
      link = link_points(curve, slice, annulus);
    } catch (const numerical_error& e) {
      last_error = e.what();
      continue;
    }
    params = LinkParameters{slice, annulus, alpha, reg.delta_M, link};
    const ValidityReport v = validate_parameters(params);
    if (!v.ok) {
      last_error = v.describe();
      continue;
    }
    found = true;
  }
  if (!found)
    throw numerical_error("estimate: no valid slice draw in 1000 attempts (" +
                          last_error + ")");

  const SampleSet sample =
      sample_uniform(curve, annulus, count, derive_seed(r.seed, 0x5a3bu));
  EstimateReport rep = estimate_multiplicity(sample, params);
  rep.curve_id = r.curve_id;
  rep.seed = r.seed;  // report the invocation seed, not the derived stream
  return rep;
}

// ---------------------------------------------------------------------------
// trials

int cmd_trials(const Resolved& r, const std::vector<double>& multipliers,
               double single_multiplier, bool exact_n, int threads,
               const std::string& out_dir_flag) {
  const std::string out_dir =
      out_dir_flag.empty() ? default_out_dir() : out_dir_flag;

  TrialPlan plan = r.plan();
  if (exact_n) {
    plan.sample_size_policy.mode = SampleSizePolicy::kExact;
  } else if (single_multiplier > 0.0) {
    plan.sample_size_policy.mode = SampleSizePolicy::kMultiplier;
    plan.sample_size_policy.multiplier = single_multiplier;
  }

  std::vector<TrialSummary> summaries;
  if (multipliers.empty()) {
    const TrialSummary s = run_trials(plan, threads);
    emit_report(s, out_dir);
    summaries.push_back(s);
  } else {
    for (const double m : multipliers) {
      if (!(m > 0.0))
        throw domain_error("trials: multipliers must be positive");
      TrialPlan p = plan;
      p.sample_size_policy.mode = SampleSizePolicy::kMultiplier;
      p.sample_size_policy.multiplier = m;
      const TrialSummary s = run_trials(p, threads);
      emit_report(s, (std::filesystem::path(out_dir) / ("m" + fmt(m))).string());
      summaries.push_back(s);
    }
    write_plot_csv((std::filesystem::path(out_dir) / "plot.csv").string(),
                   summaries);
  }
  for (const auto& s : summaries)
    std::printf(
        "curve=%s multiplier=%s n_used=%llu trials=%d successes=%d "
        "success_rate=%s\n",
        s.plan.curve_id.c_str(), fmt(plan_multiplier(s.plan)).c_str(),
        static_cast<unsigned long long>(s.n_used), s.plan.trial_count,
        s.successes, fmt(s.success_rate).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "multiplicity of a plane-curve singular point, estimated from finite "
      "uniform samples"};
  app.require_subcommand(1);

  std::string format_bound = "text", format_certify = "text",
              format_estimate = "json";

  // --- bound ---------------------------------------------------------------
  auto* sc_bound = app.add_subcommand(
      "bound", "resolve a plan and print the sample-size bound");
  CommonFlags fb;
  fb.add_geometry(sc_bound);
  fb.add_statistics(sc_bound);
  fb.add_seed(sc_bound);
  sc_bound->add_option("--format", format_bound, "text or json")
      ->check(CLI::IsMember({"text", "json"}));

  // --- certify ---------------------------------------------------------------
  auto* sc_certify = app.add_subcommand(
      "certify", "exact multiplicity oracle on one seeded slice draw");
  CommonFlags fc;
  fc.add_geometry(sc_certify);
  fc.add_seed(sc_certify);
  sc_certify->add_option("--format", format_certify, "text or json")
      ->check(CLI::IsMember({"text", "json"}));

  // --- estimate --------------------------------------------------------------
  auto* sc_estimate = app.add_subcommand(
      "estimate", "one estimate from samples (corpus or blind mode)");
  CommonFlags fe;
  fe.add_geometry(sc_estimate);
  fe.add_statistics(sc_estimate);
  fe.add_seed(sc_estimate);
  std::uint64_t est_count = 50000;
  std::string est_input, est_out;
  std::vector<double> est_point, est_xi;
  sc_estimate->add_option("--count", est_count,
                          "corpus mode: samples to draw (default 50000)");
  auto* o_input = sc_estimate->add_option(
      "--input", est_input, "blind mode: point-cloud CSV (re0,im0,re1,im1)");
  o_input->excludes(fe.o_curve);
  sc_estimate
      ->add_option("--point", est_point,
                   "blind mode: base point p as 4 reals (re0 im0 re1 im1)")
      ->expected(4);
  sc_estimate
      ->add_option("--xi", est_xi,
                   "blind mode: unit slice direction as 4 reals")
      ->expected(4);
  sc_estimate->add_option("-o,--output", est_out,
                          "write the report here instead of stdout");
  sc_estimate->add_option("--format", format_estimate, "json or text")
      ->check(CLI::IsMember({"text", "json"}));

  // --- trials ----------------------------------------------------------------
  auto* sc_trials = app.add_subcommand(
      "trials", "seeded Monte Carlo trials; writes summary, CSVs, plot data");
  CommonFlags ft;
  ft.add_geometry(sc_trials);
  ft.add_statistics(sc_trials);
  ft.add_seed(sc_trials);
  ft.o_trials = sc_trials->add_option("--trials", ft.trials,
                                      "number of trials (>= 1)");
  int threads = 1;
  double single_multiplier = 0.0;
  bool exact_n = false;
  std::vector<double> multipliers;
  std::string trials_out;
  sc_trials->add_option("--threads", threads,
                        "worker threads (never affects output bytes)");
  auto* o_mult = sc_trials->add_option(
      "--multiplier", single_multiplier,
      "sample size = ceil(multiplier * N) instead of exactly N+1");
  auto* o_multi = sc_trials->add_option(
      "--multipliers", multipliers,
      "sweep: one run per multiplier, combined plot.csv");
  auto* o_exact = sc_trials->add_flag(
      "--exact-n", exact_n, "sample exactly N+1 points per trial (default)");
  o_mult->excludes(o_multi);
  o_mult->excludes(o_exact);
  o_multi->excludes(o_exact);
  sc_trials->add_option(
      "-o,--output", trials_out,
      "output directory (default: $CLINK_OUT_DIR, else the working dir)");

  // --- sample ----------------------------------------------------------------
  auto* sc_sample = app.add_subcommand(
      "sample", "export the corpus sample a seed would use, as CSV");
  CommonFlags fs;
  fs.add_geometry(sc_sample);
  fs.add_seed(sc_sample);
  std::uint64_t sample_count = 50000;
  std::string sample_out;
  sc_sample->add_option("--count", sample_count, "samples to draw");
  sc_sample->add_option("-o,--output", sample_out,
                        "output CSV path (default <curve>_sample.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(sc_bound))
      return cmd_bound(fb.resolve(), format_bound);

    if (app.got_subcommand(sc_certify))
      return cmd_certify(fc.resolve(), format_certify);

    if (app.got_subcommand(sc_estimate)) {
      EstimateReport rep;
      if (!est_input.empty()) {
        if (!fe.o_alpha->count() || !fe.o_delta->count() ||
            est_point.size() != 4 || est_xi.size() != 4)
          throw domain_error(
              "blind mode requires --input, --alpha, --delta, --point and "
              "--xi (the guarantee presumes them known; none are estimated "
              "from data)");
        SliceFunctional slice;
        slice.base = ChartPoint::from_complex(
            {cplx(est_point[0], est_point[1]), cplx(est_point[2],
                                                    est_point[3])});
        slice.direction = {cplx(est_xi[0], est_xi[1]),
                           cplx(est_xi[2], est_xi[3])};
        slice.offset = fe.delta;
        const std::vector<ChartPoint> pts = read_point_csv(est_input);
        rep = estimate_blind(pts, slice, fe.alpha, fe.seed);
      } else {
        rep = estimate_corpus(fe.resolve(), est_count);
      }
      if (format_estimate == "text")
        print_estimate_text(rep);
      else
        write_or_print(nlohmann::json(rep), est_out);
      return 0;
    }

    if (app.got_subcommand(sc_trials))
      return cmd_trials(ft.resolve(), multipliers, single_multiplier, exact_n,
                        threads, trials_out);

    if (app.got_subcommand(sc_sample)) {
      const Resolved r = fs.resolve();
      const CorpusCurve curve = find_curve(builtin_corpus(), r.curve_id);
      const AnnulusSpec annulus{ChartPoint::origin(2), r.eps, r.eps0};
      const SampleSet set = sample_uniform(curve, annulus, sample_count,
                                           derive_seed(r.seed, 0x5a3bu));
      const std::string path =
          !sample_out.empty()
              ? sample_out
              : (std::filesystem::path(default_out_dir()) /
                 (r.curve_id + "_sample.csv"))
                    .string();
      write_point_csv(path, set.points);
      std::printf("wrote %llu points to %s\n",
                  static_cast<unsigned long long>(set.points.size()),
                  path.c_str());
      return 0;
    }
  } catch (const domain_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const numerical_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const io_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
  return 2;  // unreachable with require_subcommand(1)
}
