#pragma once
// JSON serialization for all report types (round-trip safe, including
// infinite separations, which map to JSON null) and file emission for the
// trial harness: a JSON summary, a per-trial CSV, and a plot-data CSV of
// success rate against the sample-size multiplier.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "clink/common.hpp"
#include "clink/csv.hpp"
#include "clink/estimator.hpp"
#include "clink/geometry.hpp"
#include "clink/harness.hpp"
#include "clink/oracle.hpp"
#include "clink/regularity.hpp"

namespace clink {

namespace detail_report {

// JSON has no infinity; serialize non-finite separations as null.
inline nlohmann::json num_json(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

inline double num_from(const nlohmann::json& j) {
  return j.is_null() ? kInf : j.get<double>();
}

}  // namespace detail_report

// --- geometry ---------------------------------------------------------

inline void to_json(nlohmann::json& j, const ChartPoint& p) {
  j = nlohmann::json{{"ambient_complex_dim", p.ambient_complex_dim},
                     {"coords", p.coords}};
}

inline void from_json(const nlohmann::json& j, ChartPoint& p) {
  j.at("ambient_complex_dim").get_to(p.ambient_complex_dim);
  j.at("coords").get_to(p.coords);
}

inline void to_json(nlohmann::json& j, const SliceFunctional& s) {
  nlohmann::json dir = nlohmann::json::array();
  for (const auto& c : s.direction)
    dir.push_back(nlohmann::json::array({c.real(), c.imag()}));
  j = nlohmann::json{
      {"base", s.base}, {"direction", dir}, {"offset", s.offset}};
}

inline void from_json(const nlohmann::json& j, SliceFunctional& s) {
  j.at("base").get_to(s.base);
  s.direction.clear();
  for (const auto& c : j.at("direction"))
    s.direction.emplace_back(c.at(0).get<double>(), c.at(1).get<double>());
  j.at("offset").get_to(s.offset);
}

inline void to_json(nlohmann::json& j, const AnnulusSpec& a) {
  j = nlohmann::json{
      {"center", a.center}, {"outer", a.outer}, {"inner", a.inner}};
}

inline void from_json(const nlohmann::json& j, AnnulusSpec& a) {
  j.at("center").get_to(a.center);
  j.at("outer").get_to(a.outer);
  j.at("inner").get_to(a.inner);
}

inline void to_json(nlohmann::json& j, const LinkGeometry& g) {
  j = nlohmann::json{{"points", g.points},
                     {"cardinality", g.cardinality},
                     {"min_pairwise", detail_report::num_json(g.min_pairwise)},
                     {"boundary_gap", g.boundary_gap}};
}

inline void from_json(const nlohmann::json& j, LinkGeometry& g) {
  j.at("points").get_to(g.points);
  j.at("cardinality").get_to(g.cardinality);
  g.min_pairwise = detail_report::num_from(j.at("min_pairwise"));
  j.at("boundary_gap").get_to(g.boundary_gap);
}

// --- regularity and certificates --------------------------------------

inline void to_json(nlohmann::json& j, const RegularityData& r) {
  j = nlohmann::json{{"tau_interior", r.tau_M},
                     {"tau_boundary", r.tau_boundary},
                     {"injectivity_radius", r.rho_M},
                     {"delta_min", r.delta_M},
                     {"volume", r.volume},
                     {"intrinsic_dim", r.intrinsic_dim}};
}

inline void from_json(const nlohmann::json& j, RegularityData& r) {
  j.at("tau_interior").get_to(r.tau_M);
  j.at("tau_boundary").get_to(r.tau_boundary);
  j.at("injectivity_radius").get_to(r.rho_M);
  j.at("delta_min").get_to(r.delta_M);
  j.at("volume").get_to(r.volume);
  j.at("intrinsic_dim").get_to(r.intrinsic_dim);
}

inline void to_json(nlohmann::json& j, const MultiplicityCertificate& c) {
  j = nlohmann::json{{"kind", "multiplicity_certificate"},
                     {"curve_id", c.curve_id},
                     {"order_of_vanishing", c.order_of_vanishing},
                     {"lambda0", c.lambda0},
                     {"link_cardinality", c.link_cardinality},
                     {"link_points", c.link_points}};
}

inline void from_json(const nlohmann::json& j, MultiplicityCertificate& c) {
  j.at("curve_id").get_to(c.curve_id);
  j.at("order_of_vanishing").get_to(c.order_of_vanishing);
  j.at("lambda0").get_to(c.lambda0);
  j.at("link_cardinality").get_to(c.link_cardinality);
  j.at("link_points").get_to(c.link_points);
}

// --- estimates ---------------------------------------------------------

inline void to_json(nlohmann::json& j, const EstimateReport& r) {
  j = nlohmann::json{
      {"kind", "estimate_report"},
      {"curve_id", r.curve_id},
      {"seed", r.seed},
      {"slice", r.slice},
      {"annulus", r.annulus},
      {"alpha", r.alpha},
      {"mu", detail_report::num_json(r.mu)},
      {"mu_known", r.mu_known},
      {"sample_count", r.sample_count},
      {"slab_count", r.slab_count},
      {"e_hat", r.e_hat},
      {"cluster_sizes", r.cluster_sizes},
      {"cluster_diameters", r.cluster_diameters},
      {"max_diameter", r.max_diameter},
      {"min_intercluster_gap",
       detail_report::num_json(r.min_intercluster_gap)},
      {"well_separated", r.well_separated}};
}

inline void from_json(const nlohmann::json& j, EstimateReport& r) {
  j.at("curve_id").get_to(r.curve_id);
  j.at("seed").get_to(r.seed);
  j.at("slice").get_to(r.slice);
  j.at("annulus").get_to(r.annulus);
  j.at("alpha").get_to(r.alpha);
  r.mu = detail_report::num_from(j.at("mu"));
  j.at("mu_known").get_to(r.mu_known);
  j.at("sample_count").get_to(r.sample_count);
  j.at("slab_count").get_to(r.slab_count);
  j.at("e_hat").get_to(r.e_hat);
  j.at("cluster_sizes").get_to(r.cluster_sizes);
  j.at("cluster_diameters").get_to(r.cluster_diameters);
  j.at("max_diameter").get_to(r.max_diameter);
  r.min_intercluster_gap =
      detail_report::num_from(j.at("min_intercluster_gap"));
  j.at("well_separated").get_to(r.well_separated);
}

// --- trial plans and summaries -----------------------------------------

inline void to_json(nlohmann::json& j, const AlphaPolicy& p) {
  j = nlohmann::json{
      {"mode", p.mode == AlphaPolicy::kFraction ? "fraction" : "explicit"},
      {"value", p.value}};
}

inline void from_json(const nlohmann::json& j, AlphaPolicy& p) {
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "fraction") {
    p.mode = AlphaPolicy::kFraction;
  } else if (mode == "explicit") {
    p.mode = AlphaPolicy::kExplicit;
  } else {
    throw io_error("alpha policy mode must be 'fraction' or 'explicit', got '" +
                   mode + "'");
  }
  j.at("value").get_to(p.value);
}

inline void to_json(nlohmann::json& j, const SampleSizePolicy& p) {
  j = nlohmann::json{
      {"mode", p.mode == SampleSizePolicy::kExact ? "exact" : "multiplier"},
      {"multiplier", p.multiplier}};
}

inline void from_json(const nlohmann::json& j, SampleSizePolicy& p) {
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "exact") {
    p.mode = SampleSizePolicy::kExact;
  } else if (mode == "multiplier") {
    p.mode = SampleSizePolicy::kMultiplier;
  } else {
    throw io_error("sample-size mode must be 'exact' or 'multiplier', got '" +
                   mode + "'");
  }
  j.at("multiplier").get_to(p.multiplier);
}

inline void to_json(nlohmann::json& j, const TrialPlan& p) {
  j = nlohmann::json{{"curve_id", p.curve_id},
                     {"eps", p.eps},
                     {"eps0", p.eps0},
                     {"delta", p.delta},
                     {"gamma", p.gamma},
                     {"alpha_policy", p.alpha_policy},
                     {"trial_count", p.trial_count},
                     {"base_seed", p.base_seed},
                     {"sample_size_policy", p.sample_size_policy},
                     {"probe_density", p.probe_density}};
}

inline void from_json(const nlohmann::json& j, TrialPlan& p) {
  j.at("curve_id").get_to(p.curve_id);
  j.at("eps").get_to(p.eps);
  j.at("eps0").get_to(p.eps0);
  j.at("delta").get_to(p.delta);
  j.at("gamma").get_to(p.gamma);
  j.at("alpha_policy").get_to(p.alpha_policy);
  j.at("trial_count").get_to(p.trial_count);
  j.at("base_seed").get_to(p.base_seed);
  j.at("sample_size_policy").get_to(p.sample_size_policy);
  if (j.contains("probe_density")) j.at("probe_density").get_to(p.probe_density);
}

inline void to_json(nlohmann::json& j, const TrialRecord& t) {
  j = nlohmann::json{{"index", t.index},
                     {"seed", t.seed},
                     {"slice_attempts", t.slice_attempts},
                     {"success", t.success},
                     {"report", t.report}};
}

inline void from_json(const nlohmann::json& j, TrialRecord& t) {
  j.at("index").get_to(t.index);
  j.at("seed").get_to(t.seed);
  j.at("slice_attempts").get_to(t.slice_attempts);
  j.at("success").get_to(t.success);
  j.at("report").get_to(t.report);
}

inline void to_json(nlohmann::json& j, const TrialSummary& s) {
  j = nlohmann::json{{"kind", "trial_summary"},
                     {"plan", s.plan},
                     {"certificate", s.certificate},
                     {"regularity", s.regularity},
                     {"certificate_slice", s.certificate_slice},
                     {"alpha", s.alpha},
                     {"n_bound", s.n_bound},
                     {"n_used", s.n_used},
                     {"successes", s.successes},
                     {"failures", s.failures},
                     {"success_rate", s.success_rate},
                     {"trials", s.trials}};
}

inline void from_json(const nlohmann::json& j, TrialSummary& s) {
  j.at("plan").get_to(s.plan);
  j.at("certificate").get_to(s.certificate);
  j.at("regularity").get_to(s.regularity);
  j.at("certificate_slice").get_to(s.certificate_slice);
  j.at("alpha").get_to(s.alpha);
  j.at("n_bound").get_to(s.n_bound);
  j.at("n_used").get_to(s.n_used);
  j.at("successes").get_to(s.successes);
  j.at("failures").get_to(s.failures);
  j.at("success_rate").get_to(s.success_rate);
  j.at("trials").get_to(s.trials);
}

// --- file I/O ----------------------------------------------------------

inline nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error(path + ": cannot open for reading");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw io_error(path + ": " + e.what());
  }
  return j;
}

inline void save_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw io_error(path + ": cannot open for writing");
  out << j.dump(2) << '\n';
  if (!out) throw io_error(path + ": write failed");
}

// The effective sample-size multiplier of a plan (exact mode counts as 1).
inline double plan_multiplier(const TrialPlan& p) {
  return p.sample_size_policy.mode == SampleSizePolicy::kExact
             ? 1.0
             : p.sample_size_policy.multiplier;
}

inline constexpr const char* kTrialCsvHeader =
    "trial,seed,e_hat,success,well_separated,slab_count,max_diameter,"
    "min_intercluster_gap";

inline void write_trial_csv(const std::string& path, const TrialSummary& s) {
  std::ofstream out(path);
  if (!out) throw io_error(path + ": cannot open for writing");
  out << kTrialCsvHeader << '\n';
  for (const auto& t : s.trials) {
    out << t.index << ',' << t.seed << ',' << t.report.e_hat << ','
        << (t.success ? 1 : 0) << ',' << (t.report.well_separated ? 1 : 0)
        << ',' << t.report.slab_count << ','
        << detail_csv::format_double(t.report.max_diameter) << ','
        << detail_csv::format_double(t.report.min_intercluster_gap) << '\n';
  }
  if (!out) throw io_error(path + ": write failed");
}

inline constexpr const char* kPlotCsvHeader =
    "multiplier,success_rate,trial_count,curve_id";

// One row per summary: success rate against the sample-size multiplier.
inline void write_plot_csv(const std::string& path,
                           const std::vector<TrialSummary>& runs) {
  std::ofstream out(path);
  if (!out) throw io_error(path + ": cannot open for writing");
  out << kPlotCsvHeader << '\n';
  for (const auto& s : runs) {
    out << detail_csv::format_double(plan_multiplier(s.plan)) << ','
        << detail_csv::format_double(s.success_rate) << ','
        << s.plan.trial_count << ',' << s.plan.curve_id << '\n';
  }
  if (!out) throw io_error(path + ": write failed");
}

struct ReportPaths {
  std::string summary_json;
  std::string trials_csv;
  std::string plot_csv;
};

// Writes summary.json, trials.csv, and plot.csv under out_dir (created if
// missing).  The plot CSV covers just this run; multi-run sweeps write a
// combined plot CSV via write_plot_csv.
inline ReportPaths emit_report(const TrialSummary& summary,
                               const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec)
    throw io_error(out_dir + ": cannot create directory (" + ec.message() +
                   ")");
  ReportPaths paths;
  const std::filesystem::path dir(out_dir);
  paths.summary_json = (dir / "summary.json").string();
  paths.trials_csv = (dir / "trials.csv").string();
  paths.plot_csv = (dir / "plot.csv").string();
  save_json(paths.summary_json, nlohmann::json(summary));
  write_trial_csv(paths.trials_csv, summary);
  write_plot_csv(paths.plot_csv, {summary});
  return paths;
}

}  // namespace clink
