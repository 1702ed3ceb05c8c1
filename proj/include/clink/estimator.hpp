#pragma once
// Multiplicity estimation from samples: extract the thickness-alpha slab
// around the affine slice level, single-linkage cluster it at threshold
// 2*alpha, and report the cluster count together with exact cluster
// diagnostics and a well-separation verdict.
//
// Two drivers share the same decision logic:
//   * estimate_multiplicity - in-memory SampleSet (reference / CLI path);
//   * estimate_from_stream  - chunked streaming for harness-scale sample
//     counts, feeding the streaming cluster engine and re-generating chunks
//     on demand when it needs exact point positions.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "clink/cluster.hpp"
#include "clink/common.hpp"
#include "clink/corpus.hpp"
#include "clink/geometry.hpp"

namespace clink {

struct EstimateReport {
  // Parameter echo.
  SliceFunctional slice;
  AnnulusSpec annulus;
  double alpha = 0.0;
  double mu = kInf;        // smallest link-point separation, when known
  bool mu_known = false;   // false in blind mode
  std::string curve_id;    // empty in blind mode
  std::uint64_t seed = 0;

  // Results.
  std::uint64_t sample_count = 0;
  std::uint64_t slab_count = 0;
  int e_hat = 0;
  std::vector<std::uint64_t> cluster_sizes;
  std::vector<double> cluster_diameters;
  double max_diameter = 0.0;
  double min_intercluster_gap = kInf;
  bool well_separated = false;
};

// Points of the sample at hyperplane distance strictly less than alpha,
// in their original order.
inline SlabSample extract_slab(const SampleSet& sample,
                               const SliceFunctional& slice, double alpha) {
  if (!(alpha > 0.0)) throw domain_error("extract_slab: alpha must be > 0");
  SlabSample slab;
  slab.thickness = alpha;
  slab.slice = slice;
  for (const auto& p : sample.points)
    if (hyperplane_distance(slice, p) < alpha) slab.points.push_back(p);
  return slab;
}

namespace detail_estimator {

// Well-separation verdict shared by all drivers.
//
// The gap condition compares against mu - 2*alpha when mu is known.  A
// single-point link (mu = +inf by convention) makes the condition vacuous:
// it holds exactly when the slab forms at most one cluster.  In blind mode
// (mu unknown) the verdict degrades to the diameter check alone.
inline bool well_separated(int count, double max_diameter, double min_gap,
                           double alpha, bool mu_known, double mu) {
  if (count < 1) return false;
  const bool diam_ok = max_diameter <= 2.0 * alpha;
  if (!mu_known) return diam_ok;
  if (mu >= kInf) return diam_ok && count <= 1;
  return diam_ok && min_gap > mu - 2.0 * alpha;
}

inline void fill_from_report(EstimateReport* out, const ClusterReport& rep) {
  out->e_hat = rep.count;
  out->cluster_sizes = rep.sizes;
  out->cluster_diameters = rep.diameters;
  out->max_diameter = rep.max_diameter;
  out->min_intercluster_gap = rep.min_intercluster_gap;
}

}  // namespace detail_estimator

// Corpus-mode estimate: parameters are validated up front (violations abort
// with every failing term named), then slab extraction and clustering at
// threshold 2*alpha.
inline EstimateReport estimate_multiplicity(const SampleSet& sample,
                                            const LinkParameters& params) {
  const ValidityReport v = validate_parameters(params);
  if (!v.ok)
    throw domain_error("estimate_multiplicity: invalid parameters: " +
                       v.describe());
  const SlabSample slab =
      extract_slab(sample, params.slice, params.thickness);
  const ClusterReport rep =
      single_linkage_clusters(slab, 2.0 * params.thickness);

  EstimateReport out;
  out.slice = params.slice;
  out.annulus = params.annulus;
  out.alpha = params.thickness;
  out.mu = params.link.min_pairwise;
  out.mu_known = true;
  out.curve_id = sample.curve_id;
  out.seed = sample.seed;
  out.sample_count = sample.points.size();
  out.slab_count = slab.points.size();
  detail_estimator::fill_from_report(&out, rep);
  out.well_separated = detail_estimator::well_separated(
      rep.count, rep.max_diameter, rep.min_intercluster_gap, out.alpha,
      /*mu_known=*/true, out.mu);
  return out;
}

// Blind-mode estimate: no corpus curve, no oracle.  Requires explicit slice
// and alpha; the separation verdict is diameter-only because mu is unknown.
inline EstimateReport estimate_blind(const std::vector<ChartPoint>& points,
                                     const SliceFunctional& slice,
                                     double alpha, std::uint64_t seed) {
  if (!(alpha > 0.0)) throw domain_error("estimate_blind: alpha must be > 0");
  if (!slice.unit_within(1e-9))
    throw domain_error("estimate_blind: slice direction must be unit length");
  SampleSet sample;
  sample.points = points;
  sample.seed = seed;
  const SlabSample slab = extract_slab(sample, slice, alpha);
  const ClusterReport rep = single_linkage_clusters(slab, 2.0 * alpha);

  EstimateReport out;
  out.slice = slice;
  out.alpha = alpha;
  out.mu_known = false;
  out.seed = seed;
  out.sample_count = points.size();
  out.slab_count = slab.points.size();
  detail_estimator::fill_from_report(&out, rep);
  out.well_separated = detail_estimator::well_separated(
      rep.count, rep.max_diameter, rep.min_intercluster_gap, alpha,
      /*mu_known=*/false, kInf);
  return out;
}

namespace detail_estimator {

// Replayable slab source over a chunked sample stream: regenerates chunks
// and applies the strict hyperplane-distance filter.
class StreamSlabSource final : public SlabSource {
 public:
  StreamSlabSource(const SampleStream& stream, std::uint64_t total,
                   const SliceFunctional& slice, double alpha)
      : stream_(&stream), total_(total), alpha_(alpha) {
    if (slice.base.coords.size() != 4 || slice.direction.size() != 2)
      throw domain_error("streaming estimate expects points in C^2");
    for (int d = 0; d < 4; ++d) base_[d] = slice.base.coords[d];
    dir_ = {slice.direction[0].real(), slice.direction[0].imag(),
            slice.direction[1].real(), slice.direction[1].imag()};
    offset_ = slice.offset;
    // Scratch spill of accepted points: a later reset() replays the file
    // instead of regenerating the full sample, which is far more work than
    // rereading the (much smaller) slab.  Optional: a failed open or a
    // failed write just falls back to regeneration.
    spill_ = std::tmpfile();
  }

  ~StreamSlabSource() override {
    if (spill_) std::fclose(spill_);
  }
  StreamSlabSource(const StreamSlabSource&) = delete;
  StreamSlabSource& operator=(const StreamSlabSource&) = delete;

  void reset() override {
    if (spill_ && spill_complete_) {
      replaying_ = true;
      replay_pos_ = 0;
      std::fseek(spill_, 0, SEEK_SET);
      return;
    }
    replaying_ = false;
    chunk_ = 0;
    buf_pos_ = 0;
    buf_n_ = 0;
    emitted_ = 0;
    if (spill_) {  // restart an incomplete spill from scratch
      std::fseek(spill_, 0, SEEK_SET);
      slab_written_ = 0;
    }
  }

  std::size_t next(Vec4* out, std::size_t max) override {
    if (replaying_) {
      const std::uint64_t rem = slab_written_ - replay_pos_;
      const std::size_t want =
          static_cast<std::size_t>(std::min<std::uint64_t>(max, rem));
      if (want == 0) return 0;
      if (std::fread(out, sizeof(Vec4), want, spill_) != want)
        throw numerical_error("slab scratch file: short read on replay");
      replay_pos_ += want;
      return want;
    }
    std::size_t produced = 0;
    while (produced < max) {
      if (buf_pos_ == buf_n_) {
        if (!refill()) break;
      }
      while (buf_pos_ < buf_n_ && produced < max)
        out[produced++] = slab_[buf_pos_++];
    }
    return produced;
  }

  std::uint64_t samples_seen() const { return emitted_; }

 private:
  bool refill() {
    if (emitted_ >= total_) {
      if (spill_) spill_complete_ = true;
      return false;
    }
    const std::size_t n = static_cast<std::size_t>(
        std::min<std::uint64_t>(kChunkSize, total_ - emitted_));
    x1r_.resize(n); x1i_.resize(n); x2r_.resize(n); x2i_.resize(n);
    stream_->generate_chunk(chunk_, n, x1r_.data(), x1i_.data(), x2r_.data(),
                            x2i_.data());
    ++chunk_;
    emitted_ += n;
    slab_.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const double level = (x1r_[i] - base_[0]) * dir_[0] +
                           (x1i_[i] - base_[1]) * dir_[1] +
                           (x2r_[i] - base_[2]) * dir_[2] +
                           (x2i_[i] - base_[3]) * dir_[3];
      if (std::fabs(level - offset_) < alpha_)
        slab_.push_back({x1r_[i], x1i_[i], x2r_[i], x2i_[i]});
    }
    if (spill_ && !slab_.empty()) {
      if (std::fwrite(slab_.data(), sizeof(Vec4), slab_.size(), spill_) ==
          slab_.size()) {
        slab_written_ += slab_.size();
      } else {  // out of scratch space: fall back to regeneration
        std::fclose(spill_);
        spill_ = nullptr;
      }
    }
    buf_pos_ = 0;
    buf_n_ = slab_.size();
    return true;
  }

  const SampleStream* stream_;
  std::uint64_t total_;
  double alpha_;
  Vec4 base_, dir_;
  double offset_ = 0.0;
  std::uint64_t chunk_ = 0;
  std::uint64_t emitted_ = 0;
  std::vector<double> x1r_, x1i_, x2r_, x2i_;
  std::vector<Vec4> slab_;
  std::size_t buf_pos_ = 0, buf_n_ = 0;
  std::FILE* spill_ = nullptr;
  bool spill_complete_ = false;
  bool replaying_ = false;
  std::uint64_t slab_written_ = 0;
  std::uint64_t replay_pos_ = 0;
};

}  // namespace detail_estimator

// Harness-scale estimate: streams `sample_count` samples from the curve,
// filters the slab on the fly, and clusters with the streaming engine.
// Produces the same report a materialized run would, without ever holding
// the sample in memory.
inline EstimateReport estimate_from_stream(const CorpusCurve& curve,
                                           const AnnulusSpec& annulus,
                                           std::uint64_t sample_seed,
                                           std::uint64_t sample_count,
                                           const LinkParameters& params) {
  const ValidityReport v = validate_parameters(params);
  if (!v.ok)
    throw domain_error("estimate_from_stream: invalid parameters: " +
                       v.describe());
  SampleStream stream(curve, annulus, sample_seed);
  detail_estimator::StreamSlabSource src(stream, sample_count, params.slice,
                                         params.thickness);
  StreamClusterEngine engine(2.0 * params.thickness);
  src.reset();
  std::vector<Vec4> buf(8192);
  for (;;) {
    const std::size_t n = src.next(buf.data(), buf.size());
    if (n == 0) break;
    for (std::size_t i = 0; i < n; ++i) engine.add(buf[i]);
  }
  engine.finish(&src);

  EstimateReport out;
  out.slice = params.slice;
  out.annulus = annulus;
  out.alpha = params.thickness;
  out.mu = params.link.min_pairwise;
  out.mu_known = true;
  out.curve_id = curve.id;
  out.seed = sample_seed;
  out.sample_count = sample_count;
  out.slab_count = engine.total_points();
  out.e_hat = engine.count();
  out.cluster_sizes = engine.sizes();
  out.cluster_diameters = engine.diameters();
  out.max_diameter = engine.max_diameter();
  out.min_intercluster_gap = engine.min_intercluster_gap();
  out.well_separated = detail_estimator::well_separated(
      out.e_hat, out.max_diameter, out.min_intercluster_gap, out.alpha,
      /*mu_known=*/true, out.mu);
  return out;
}

}  // namespace clink
