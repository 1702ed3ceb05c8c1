#pragma once
// Exact single-linkage clustering of 4-d point sets at a fixed distance
// threshold, with two interchangeable execution paths:
//
//   * an all-pairs union-find pass for in-memory slabs (the reference
//     implementation, quadratic and obviously correct), and
//   * a streaming grid engine for slabs far too large to hold in memory
//     (harness trials reach ~1e8 slab points).  Points are binned into
//     grid cells of side threshold/16 while streaming, keeping only a
//     bounding box, a population count, and the first few points per cell.
//     Linkage decisions and the report diagnostics (exact per-cluster
//     diameters and the exact minimum inter-cluster gap) are resolved by
//     branch-and-bound over the cell boxes; the rare box pairs that straddle
//     a decision boundary are settled exactly by re-streaming the source and
//     materializing just those cells' points.
//
// Both paths produce identical partitions; box pruning is slop-guarded so a
// floating-point box bound can never contradict an exact leaf comparison.
// All reported values are min/max over exact point-pair distances, so they
// do not depend on insertion order or thread scheduling.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "clink/common.hpp"
#include "clink/geometry.hpp"

namespace clink {

struct SlabSample {
  std::vector<ChartPoint> points;
  double thickness = 0.0;  // alpha
  SliceFunctional slice;
};

// Clusters are index lists into the originating slab's point array.
struct ClusterReport {
  std::vector<std::vector<std::size_t>> clusters;
  int count = 0;
  double max_diameter = 0.0;
  double min_intercluster_gap = kInf;  // infinity when count <= 1
  std::vector<std::uint64_t> sizes;    // per-cluster cardinalities
  std::vector<double> diameters;       // per-cluster exact diameters
};

// Re-playable source of slab points; the streaming engine re-reads it when a
// decision needs exact points that were not retained in cell caches.
class SlabSource {
 public:
  virtual ~SlabSource() = default;
  virtual void reset() = 0;
  // Fills out[0..max) with the next points; returns how many (0 = end).
  virtual std::size_t next(Vec4* out, std::size_t max) = 0;
};

class VectorSlabSource final : public SlabSource {
 public:
  explicit VectorSlabSource(const std::vector<Vec4>& pts) : pts_(&pts) {}
  void reset() override { pos_ = 0; }
  std::size_t next(Vec4* out, std::size_t max) override {
    std::size_t n = std::min(max, pts_->size() - pos_);
    std::copy_n(pts_->begin() + pos_, n, out);
    pos_ += n;
    return n;
  }

 private:
  const std::vector<Vec4>* pts_;
  std::size_t pos_ = 0;
};

namespace detail_cluster {

constexpr int kCachePoints = 16;       // exact points kept per grid cell
constexpr double kBoxSlop = 1e-12;     // relative guard on box-bound pruning
constexpr std::size_t kMaterializeCap = 4u << 20;  // max re-read points held

struct Box {
  Vec4 lo = {kInf, kInf, kInf, kInf};
  Vec4 hi = {-kInf, -kInf, -kInf, -kInf};
  void absorb(const Vec4& p) {
    for (int d = 0; d < 4; ++d) {
      lo[d] = std::min(lo[d], p[d]);
      hi[d] = std::max(hi[d], p[d]);
    }
  }
  void absorb(const Box& b) {
    for (int d = 0; d < 4; ++d) {
      lo[d] = std::min(lo[d], b.lo[d]);
      hi[d] = std::max(hi[d], b.hi[d]);
    }
  }
};

inline double min_dist2(const Box& a, const Box& b) {
  double s = 0.0;
  for (int d = 0; d < 4; ++d) {
    const double g = std::max({0.0, b.lo[d] - a.hi[d], a.lo[d] - b.hi[d]});
    s += g * g;
  }
  return s;
}

inline double max_dist2(const Box& a, const Box& b) {
  double s = 0.0;
  for (int d = 0; d < 4; ++d) {
    const double g = std::max(b.hi[d] - a.lo[d], a.hi[d] - b.lo[d]);
    s += g * g;
  }
  return s;
}

inline double min_dist2(const Vec4& p, const Box& b) {
  double s = 0.0;
  for (int d = 0; d < 4; ++d) {
    const double g = std::max({0.0, b.lo[d] - p[d], p[d] - b.hi[d]});
    s += g * g;
  }
  return s;
}

inline double max_dist2(const Vec4& p, const Box& b) {
  double s = 0.0;
  for (int d = 0; d < 4; ++d) {
    const double g = std::max(b.hi[d] - p[d], p[d] - b.lo[d]);
    s += g * g;
  }
  return s;
}

inline double dist2(const Vec4& a, const Vec4& b) {
  return sqr(a[0] - b[0]) + sqr(a[1] - b[1]) + sqr(a[2] - b[2]) +
         sqr(a[3] - b[3]);
}

struct UnionFind {
  std::vector<std::uint32_t> parent;
  std::uint32_t make() {
    parent.push_back(static_cast<std::uint32_t>(parent.size()));
    return parent.back();
  }
  std::uint32_t find(std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace detail_cluster

// Streaming exact single-linkage engine.  Usage: add() every point (in any
// fixed order), then finish(source) where source replays the identical
// stream; afterwards the report accessors and component_of() are valid.
class StreamClusterEngine {
  using Box = detail_cluster::Box;

 public:
  explicit StreamClusterEngine(double threshold) : thr_(threshold) {
    if (!(threshold > 0.0))
      throw domain_error("single linkage threshold must be positive");
    thr2_ = thr_ * thr_;
    fine_side_ = thr_ / 16.0;   // 8 fine cells per coarse cell per axis
    inv_fine_ = 1.0 / fine_side_;
  }

  void add(const Vec4& p) {
    ++total_;
    const std::uint64_t key = fine_key(p);
    FineCell& c = fine_.try_emplace(key).first->second;
    ++c.count;
    c.box.absorb(p);
    if (c.pts.size() < detail_cluster::kCachePoints) c.pts.push_back(p);
  }

  // Cost counters for the resolution phase, exposed so callers can log
  // where time went on large inputs (values do not affect any result).
  struct Stats {
    int restreams = 0;                       // full re-reads of the source
    std::uint64_t cells_materialized = 0;    // exact point sets rebuilt
    std::uint64_t points_materialized = 0;
    std::uint64_t evals_links = 0;           // exact pair evals, linkage
    std::uint64_t evals_diameter = 0;        // exact pair evals, diameters
    std::uint64_t evals_gap = 0;             // exact pair evals, gap
    double seconds_links = 0.0;
    double seconds_diameter = 0.0;
    double seconds_gap = 0.0;
    double seconds_restream = 0.0;
  };
  const Stats& stats() const { return stats_; }

  // Resolves the partition and computes exact diagnostics.  `source` is
  // consulted only when a decision cannot be made from cell caches; pass
  // nullptr to forbid re-reading (throws if it would have been needed).
  void finish(SlabSource* source) {
    build_coarse();
    const auto t0 = std::chrono::steady_clock::now();
    resolve_links(source);
    const auto t1 = std::chrono::steady_clock::now();
    stats_.seconds_links = std::chrono::duration<double>(t1 - t0).count();
    number_components();
    compute_diagnostics(source);
  }

  std::uint64_t total_points() const { return total_; }
  int count() const { return ncomp_; }
  const std::vector<std::uint64_t>& sizes() const { return sizes_; }
  const std::vector<double>& diameters() const { return diameters_; }
  double max_diameter() const { return max_diameter_; }
  double min_intercluster_gap() const { return min_gap_; }

  // Canonical component index (0-based, ordered by smallest cell key) of the
  // cluster containing p; p must be one of the streamed points.
  int component_of(const Vec4& p) const {
    const auto it = coarse_index_.find(coarse_of(fine_key(p)));
    if (it == coarse_index_.end())
      throw domain_error("component_of: point was not streamed");
    return comp_label_[it->second];
  }

 private:
  struct FineCell {
    std::uint64_t count = 0;
    Box box;
    std::vector<Vec4> pts;  // first kCachePoints points, stream order
    bool complete() const { return count == pts.size(); }
  };

  struct CoarseCell {
    std::uint64_t key = 0;
    std::uint64_t count = 0;
    Box box;
    std::vector<std::uint64_t> fine;  // member fine-cell keys, sorted
  };

  std::uint64_t fine_key(const Vec4& p) const {
    std::uint64_t key = 0;
    for (int d = 0; d < 4; ++d) {
      const double scaled = std::floor(p[d] * inv_fine_);
      if (!(scaled >= -32000.0 && scaled <= 32000.0))
        throw domain_error(
            "clustering grid overflow: threshold too small for the point "
            "extent");
      const std::uint64_t idx =
          static_cast<std::uint64_t>(static_cast<std::int64_t>(scaled) + 32768);
      key |= idx << (16 * d);
    }
    return key;
  }

  // Coarse cells have side thr/2, i.e. fine indices shifted down 3 bits; the
  // bias 32768 is divisible by 8 so the shift preserves grid alignment.
  static std::uint64_t coarse_of(std::uint64_t fine) {
    std::uint64_t key = 0;
    for (int d = 0; d < 4; ++d) {
      const std::uint64_t idx = (fine >> (16 * d)) & 0xffffu;
      key |= (idx >> 3) << (16 * d);
    }
    return key;
  }

  void build_coarse() {
    std::map<std::uint64_t, CoarseCell> agg;  // ordered -> canonical ids
    for (const auto& [fkey, fc] : fine_) {
      CoarseCell& cc = agg[coarse_of(fkey)];
      cc.count += fc.count;
      cc.box.absorb(fc.box);
      cc.fine.push_back(fkey);
    }
    coarse_.reserve(agg.size());
    for (auto& [ckey, cc] : agg) {
      cc.key = ckey;
      std::sort(cc.fine.begin(), cc.fine.end());
      coarse_index_.emplace(ckey, static_cast<std::uint32_t>(coarse_.size()));
      coarse_.push_back(std::move(cc));
      uf_.make();
    }
  }

  // Neighbor offsets at coarse level that can contain a pair within the
  // threshold: |d_i| <= 3 and sum max(|d_i|-1,0)^2 <= 4 (cell side = thr/2).
  static const std::vector<std::array<int, 4>>& half_offsets() {
    static const std::vector<std::array<int, 4>> offs = [] {
      std::vector<std::array<int, 4>> v;
      for (int a = -3; a <= 3; ++a)
        for (int b = -3; b <= 3; ++b)
          for (int c = -3; c <= 3; ++c)
            for (int d = -3; d <= 3; ++d) {
              const int m = sqr(std::max(std::abs(a) - 1, 0)) +
                            sqr(std::max(std::abs(b) - 1, 0)) +
                            sqr(std::max(std::abs(c) - 1, 0)) +
                            sqr(std::max(std::abs(d) - 1, 0));
              if (m > 4) continue;
              const std::array<int, 4> o = {a, b, c, d};
              // keep the lexicographically positive half (skip zero)
              if (o > std::array<int, 4>{0, 0, 0, 0}) v.push_back(o);
            }
      return v;
    }();
    return offs;
  }

  std::uint64_t shifted_key(std::uint64_t key,
                            const std::array<int, 4>& off) const {
    std::uint64_t out = 0;
    for (int d = 0; d < 4; ++d) {
      const std::int64_t idx =
          static_cast<std::int64_t>((key >> (16 * d)) & 0xffffu) + off[d];
      if (idx < 0 || idx > 0xffff) return ~0ull;  // outside the grid
      out |= static_cast<std::uint64_t>(idx) << (16 * d);
    }
    return out;
  }

  // --- linkage resolution ----------------------------------------------

  // Tri-state exact test "min distance between the point sets of coarse
  // cells a,b is <= thr", resolved from fine boxes and caches where
  // possible; fine cells whose exact points are required are appended to
  // `need` and the test is retried after materialization.
  enum class Tri { kYes, kNo, kUnknown };

  Tri linked_test(const CoarseCell& A, const CoarseCell& B,
                  const std::unordered_map<std::uint64_t, std::vector<Vec4>>*
                      mat,
                  std::vector<std::uint64_t>* need) const {
    const double lo_guard = thr2_ * (1.0 + detail_cluster::kBoxSlop);
    const double hi_guard = thr2_ * (1.0 - detail_cluster::kBoxSlop);
    bool unknown = false;
    for (const auto fa : A.fine) {
      const FineCell& ca = fine_.at(fa);
      for (const auto fb : B.fine) {
        const FineCell& cb = fine_.at(fb);
        const double mn = detail_cluster::min_dist2(ca.box, cb.box);
        if (mn > lo_guard) continue;  // this pair cannot link
        if (detail_cluster::max_dist2(ca.box, cb.box) < hi_guard)
          return Tri::kYes;  // every point pair is within threshold
        const std::vector<Vec4>* pa = cell_points(fa, ca, mat);
        const std::vector<Vec4>* pb = cell_points(fb, cb, mat);
        if (pa && pb) {
          stats_.evals_links += pa->size() * pb->size();
          for (const auto& x : *pa)
            for (const auto& y : *pb)
              if (detail_cluster::dist2(x, y) <= thr2_) return Tri::kYes;
          continue;  // exact: not linked through this cell pair
        }
        unknown = true;
        if (need) {
          if (!pa) need->push_back(fa);
          if (!pb) need->push_back(fb);
        }
      }
    }
    return unknown ? Tri::kUnknown : Tri::kNo;
  }

  const std::vector<Vec4>* cell_points(
      std::uint64_t key, const FineCell& c,
      const std::unordered_map<std::uint64_t, std::vector<Vec4>>* mat) const {
    if (c.complete()) return &c.pts;
    if (mat) {
      const auto it = mat->find(key);
      if (it != mat->end()) return &it->second;
    }
    return nullptr;
  }

  void materialize(SlabSource* source, const std::vector<std::uint64_t>& keys,
                   std::unordered_map<std::uint64_t, std::vector<Vec4>>* mat) {
    if (!source)
      throw numerical_error(
          "cluster engine: exact resolution requires re-reading the stream, "
          "but no source was provided");
    for (const auto k : keys) {
      if (mat->count(k)) continue;
      (*mat)[k].reserve(fine_.at(k).count);
      ++stats_.cells_materialized;
      stats_.points_materialized += fine_.at(k).count;
    }
    std::uint64_t held = 0;
    for (const auto& [k, v] : *mat) held += v.capacity();
    if (held > detail_cluster::kMaterializeCap)
      throw numerical_error(
          "cluster engine: pathological density at a decision boundary "
          "(materialization cap exceeded)");
    ++stats_.restreams;
    const auto rs0 = std::chrono::steady_clock::now();
    source->reset();
    std::vector<Vec4> buf(8192);
    for (;;) {
      const std::size_t n = source->next(buf.data(), buf.size());
      if (n == 0) break;
      for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t k = fine_key(buf[i]);
        const auto it = mat->find(k);
        if (it != mat->end() && it->second.size() < fine_.at(k).count)
          it->second.push_back(buf[i]);
      }
    }
    stats_.seconds_restream +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() - rs0)
            .count();
    for (const auto k : keys)
      if (mat->at(k).size() != fine_.at(k).count)
        throw numerical_error(
            "cluster engine: re-read stream did not reproduce the pass-1 "
            "points");
  }

  void resolve_links(SlabSource* source) {
    // Candidate coarse pairs from the neighbor stencil, canonical order.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pending;
    for (std::uint32_t i = 0; i < coarse_.size(); ++i) {
      for (const auto& off : half_offsets()) {
        const std::uint64_t nk = shifted_key(coarse_[i].key, off);
        if (nk == ~0ull) continue;
        const auto it = coarse_index_.find(nk);
        if (it == coarse_index_.end()) continue;
        pending.emplace_back(i, it->second);
      }
    }
    std::sort(pending.begin(), pending.end());

    std::unordered_map<std::uint64_t, std::vector<Vec4>> mat;
    for (int round = 0; round < 3; ++round) {
      // Phase 1: apply every union decidable from boxes and already-exact
      // points, requesting nothing.  Inside a dense cluster this closes the
      // transitive chain of adjacent cells, so pairs at roughly threshold
      // distance along the same cluster become same-root and never ask for
      // their (large) point sets.
      std::vector<std::pair<std::uint32_t, std::uint32_t>> defer;
      for (const auto& [i, j] : pending) {
        if (uf_.find(i) == uf_.find(j)) continue;
        const Tri t = linked_test(coarse_[i], coarse_[j], &mat, nullptr);
        if (t == Tri::kYes)
          uf_.unite(i, j);
        else if (t == Tri::kUnknown)
          defer.emplace_back(i, j);
      }
      // Phase 2: only pairs that still straddle two components genuinely
      // need exact points.
      std::vector<std::pair<std::uint32_t, std::uint32_t>> still;
      std::vector<std::uint64_t> need;
      for (const auto& [i, j] : defer) {
        if (uf_.find(i) == uf_.find(j)) continue;
        const Tri t = linked_test(coarse_[i], coarse_[j], &mat, &need);
        if (t == Tri::kYes)
          uf_.unite(i, j);
        else if (t == Tri::kUnknown)
          still.emplace_back(i, j);
      }
      if (still.empty()) return;
      std::sort(need.begin(), need.end());
      need.erase(std::unique(need.begin(), need.end()), need.end());
      materialize(source, need, &mat);
      pending = std::move(still);
    }
    throw numerical_error("cluster engine: linkage did not settle");
  }

  void number_components() {
    comp_label_.assign(coarse_.size(), -1);
    ncomp_ = 0;
    for (std::uint32_t i = 0; i < coarse_.size(); ++i) {
      const std::uint32_t r = uf_.find(i);
      if (comp_label_[r] < 0) comp_label_[r] = ncomp_++;
      comp_label_[i] = comp_label_[r];
    }
    sizes_.assign(ncomp_, 0);
    for (std::uint32_t i = 0; i < coarse_.size(); ++i)
      sizes_[comp_label_[i]] += coarse_[i].count;
  }

  // --- exact diagnostics -------------------------------------------------
  //
  // Per-cluster diameter (max pairwise distance) and the global minimum
  // inter-cluster gap, by branch-and-bound over fine-cell boxes with exact
  // scans at the leaves.  Needed-but-uncached cells are collected across all
  // objectives and materialized in a single re-read.

  struct PairTask {
    std::uint64_t a, b;  // fine keys, a <= b allowed for diameter self-pairs
  };

  void compute_diagnostics(SlabSource* source) {
    std::unordered_map<std::uint64_t, std::vector<Vec4>> mat;
    for (int round = 0; round < 2; ++round) {
      std::vector<std::uint64_t> need;
      const auto d0 = std::chrono::steady_clock::now();
      const bool ok1 = diameter_pass(&mat, &need);
      const auto d1 = std::chrono::steady_clock::now();
      const bool ok2 = gap_pass(&mat, &need);
      const auto d2 = std::chrono::steady_clock::now();
      stats_.seconds_diameter += std::chrono::duration<double>(d1 - d0).count();
      stats_.seconds_gap += std::chrono::duration<double>(d2 - d1).count();
      if (ok1 && ok2) return;
      std::sort(need.begin(), need.end());
      need.erase(std::unique(need.begin(), need.end()), need.end());
      materialize(source, need, &mat);
    }
    throw numerical_error("cluster engine: diagnostics did not settle");
  }

  // Computes all cluster diameters; returns false (and fills `need`) if
  // exact points are missing somewhere.
  bool diameter_pass(
      const std::unordered_map<std::uint64_t, std::vector<Vec4>>* mat,
      std::vector<std::uint64_t>* need) {
    diameters_.assign(ncomp_, 0.0);
    max_diameter_ = 0.0;
    if (total_ == 0) return true;
    bool settled = true;

    std::vector<std::vector<std::uint32_t>> members(ncomp_);
    for (std::uint32_t i = 0; i < coarse_.size(); ++i)
      members[comp_label_[i]].push_back(i);

    for (int c = 0; c < ncomp_; ++c) {
      // Candidate fine-cell pairs within the cluster, pruned by box bounds.
      std::vector<std::uint64_t> cells;
      for (const auto ci : members[c])
        cells.insert(cells.end(), coarse_[ci].fine.begin(),
                     coarse_[ci].fine.end());
      std::sort(cells.begin(), cells.end());

      double best = 0.0;  // exact lower bound achieved so far
      const double slop = 1.0 + detail_cluster::kBoxSlop;

      // Seed `best` with exact distances among the axis-extreme cells'
      // cached points (any exact pair distance is a valid lower bound).
      // For elongated clusters this lands near the true diameter and
      // collapses the candidate list below.
      {
        std::vector<std::uint64_t> extremes;
        for (int d = 0; d < 4; ++d) {
          std::uint64_t lo_cell = cells[0], hi_cell = cells[0];
          double lo = kInf, hi = -kInf;
          for (const auto k : cells) {
            const auto& box = fine_.at(k).box;
            if (box.lo[d] < lo) lo = box.lo[d], lo_cell = k;
            if (box.hi[d] > hi) hi = box.hi[d], hi_cell = k;
          }
          extremes.push_back(lo_cell);
          extremes.push_back(hi_cell);
        }
        std::sort(extremes.begin(), extremes.end());
        extremes.erase(std::unique(extremes.begin(), extremes.end()),
                       extremes.end());
        for (std::size_t x = 0; x < extremes.size(); ++x) {
          const FineCell& ca = fine_.at(extremes[x]);
          for (std::size_t y = x; y < extremes.size(); ++y) {
            const FineCell& cb = fine_.at(extremes[y]);
            for (std::size_t i = 0; i < ca.pts.size(); ++i)
              for (std::size_t j = (x == y ? i + 1 : 0); j < cb.pts.size();
                   ++j)
                best = std::max(best,
                                detail_cluster::dist2(ca.pts[i], cb.pts[j]));
          }
        }
      }

      // Two-level candidate enumeration: coarse pairs first, expanding a
      // coarse pair into fine pairs only while its bound stays competitive.
      // A flat fine-pair enumeration is quadratic in the fine-cell count,
      // which dominates everything else on long thin clusters.
      struct CCand {
        double ub;
        std::uint32_t a, b;
      };
      std::vector<CCand> ccands;
      for (std::size_t x = 0; x < members[c].size(); ++x) {
        for (std::size_t y = x; y < members[c].size(); ++y) {
          const std::uint32_t ia = members[c][x], ib = members[c][y];
          const double ub =
              detail_cluster::max_dist2(coarse_[ia].box, coarse_[ib].box);
          if (ub * slop > best) ccands.push_back({ub, ia, ib});
        }
      }
      std::sort(ccands.begin(), ccands.end(),
                [](const CCand& l, const CCand& r) {
                  return l.ub > r.ub || (l.ub == r.ub &&
                                         std::tie(l.a, l.b) <
                                             std::tie(r.a, r.b));
                });

      struct Cand {
        double ub;
        std::uint64_t a, b;
      };
      std::vector<Cand> cands;          // fine pairs of one coarse pair
      std::vector<Vec4> banda, bandb;   // reused band buffers
      for (const auto& pr : ccands) {
        if (pr.ub * slop <= best) break;
        const CoarseCell& A = coarse_[pr.a];
        const CoarseCell& B = coarse_[pr.b];
        cands.clear();
        for (std::size_t x = 0; x < A.fine.size(); ++x) {
          const std::size_t y0 = (pr.a == pr.b) ? x : 0;
          const FineCell& ca = fine_.at(A.fine[x]);
          for (std::size_t y = y0; y < B.fine.size(); ++y) {
            const FineCell& cb = fine_.at(B.fine[y]);
            const double ub = detail_cluster::max_dist2(ca.box, cb.box);
            if (ub * slop > best) cands.push_back({ub, A.fine[x], B.fine[y]});
          }
        }
        std::sort(cands.begin(), cands.end(),
                  [](const Cand& l, const Cand& r) {
                    return l.ub > r.ub || (l.ub == r.ub &&
                                           std::tie(l.a, l.b) <
                                               std::tie(r.a, r.b));
                  });
        for (const auto& cd : cands) {
          // Sorted by descending upper bound: once even the slop-inflated
          // bound cannot beat the exact best, nothing later can either.
          if (cd.ub * slop <= best) break;
          const FineCell& ca = fine_.at(cd.a);
          const FineCell& cb = fine_.at(cd.b);
          // Cached points first: any exact pair distance raises the lower
          // bound, often past this pair's box bound, avoiding
          // materialization.
          if (cd.a == cd.b) {
            for (std::size_t i = 0; i < ca.pts.size(); ++i)
              for (std::size_t j = i + 1; j < ca.pts.size(); ++j)
                best = std::max(best,
                                detail_cluster::dist2(ca.pts[i], ca.pts[j]));
          } else {
            for (const auto& x : ca.pts)
              for (const auto& y : cb.pts)
                best = std::max(best, detail_cluster::dist2(x, y));
          }
          if (ca.complete() && cb.complete()) continue;  // cache was exact
          if (cd.ub * slop <= best) continue;
          const std::vector<Vec4>* pa = cell_points(cd.a, ca, mat);
          const std::vector<Vec4>* pb = cell_points(cd.b, cb, mat);
          if (!pa || !pb) {
            settled = false;
            if (!pa) need->push_back(cd.a);
            if (!pb) need->push_back(cd.b);
            continue;
          }
          // Band-prune each side against the other's box: only points that
          // can still push past the current bound take part.
          banda.clear();
          bandb.clear();
          for (const auto& x : *pa)
            if (detail_cluster::max_dist2(x, cb.box) * slop > best)
              banda.push_back(x);
          for (const auto& y : *pb)
            if (detail_cluster::max_dist2(y, ca.box) * slop > best)
              bandb.push_back(y);
          // Self pairs scan each unordered pair twice and (p, p) once;
          // both are harmless under max and not worth special-casing.
          stats_.evals_diameter += banda.size() * bandb.size();
          for (const auto& x : banda)
            for (const auto& y : bandb)
              best = std::max(best, detail_cluster::dist2(x, y));
        }
      }
      diameters_[c] = std::sqrt(best);
      max_diameter_ = std::max(max_diameter_, diameters_[c]);
    }
    return settled;
  }

  // Computes the global minimum inter-cluster gap; same settling contract.
  bool gap_pass(const std::unordered_map<std::uint64_t, std::vector<Vec4>>* mat,
                std::vector<std::uint64_t>* need) {
    min_gap_ = kInf;
    if (ncomp_ <= 1) return true;
    bool settled = true;

    struct Cand {
      double lb;
      std::uint64_t a, b;
    };
    std::vector<Cand> cands;
    for (std::uint32_t i = 0; i < coarse_.size(); ++i) {
      for (std::uint32_t j = i + 1; j < coarse_.size(); ++j) {
        if (comp_label_[i] == comp_label_[j]) continue;
        // coarse-level prune happens implicitly through fine boxes below;
        // enumerate fine pairs only when coarse boxes are competitive.
        cands.push_back({detail_cluster::min_dist2(coarse_[i].box,
                                                   coarse_[j].box),
                         i, j});
      }
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& l, const Cand& r) {
      return l.lb < r.lb || (l.lb == r.lb && std::tie(l.a, l.b) <
                                                 std::tie(r.a, r.b));
    });

    double best = kInf;  // exact upper bound achieved so far
    const double slop = 1.0 - detail_cluster::kBoxSlop;
    std::vector<Vec4> banda, bandb;  // reused band buffers
    for (const auto& cc : cands) {
      if (cc.lb * slop >= best) break;  // no remaining pair can be closer
      const CoarseCell& A = coarse_[cc.a];
      const CoarseCell& B = coarse_[cc.b];
      struct FCand {
        double lb;
        std::uint64_t a, b;
      };
      std::vector<FCand> fc;
      for (const auto fa : A.fine)
        for (const auto fb : B.fine)
          fc.push_back({detail_cluster::min_dist2(fine_.at(fa).box,
                                                  fine_.at(fb).box),
                        fa, fb});
      std::sort(fc.begin(), fc.end(), [](const FCand& l, const FCand& r) {
        return l.lb < r.lb ||
               (l.lb == r.lb && std::tie(l.a, l.b) < std::tie(r.a, r.b));
      });
      for (const auto& p : fc) {
        if (p.lb * slop >= best) break;
        const FineCell& ca = fine_.at(p.a);
        const FineCell& cb = fine_.at(p.b);
        // Cached points first: any exact pair distance lowers the upper
        // bound, often below this pair's box bound, avoiding
        // materialization.
        for (const auto& x : ca.pts)
          for (const auto& y : cb.pts)
            best = std::min(best, detail_cluster::dist2(x, y));
        if (ca.complete() && cb.complete()) continue;  // cache was exact
        if (p.lb * slop >= best) continue;
        const std::vector<Vec4>* pa = cell_points(p.a, ca, mat);
        const std::vector<Vec4>* pb = cell_points(p.b, cb, mat);
        if (!pa || !pb) {
          settled = false;
          if (!pa) need->push_back(p.a);
          if (!pb) need->push_back(p.b);
          continue;
        }
        // Band-prune each side against the other's box: only points whose
        // distance to the opposing box can undercut the current bound can
        // take part in the minimum.
        banda.clear();
        bandb.clear();
        for (const auto& x : *pa)
          if (detail_cluster::min_dist2(x, cb.box) * slop < best)
            banda.push_back(x);
        for (const auto& y : *pb)
          if (detail_cluster::min_dist2(y, ca.box) * slop < best)
            bandb.push_back(y);
        stats_.evals_gap += banda.size() * bandb.size();
        for (const auto& x : banda)
          for (const auto& y : bandb)
            best = std::min(best, detail_cluster::dist2(x, y));
      }
    }
    min_gap_ = std::sqrt(best);
    return settled;
  }

  double thr_, thr2_, fine_side_, inv_fine_;
  mutable Stats stats_;  // mutable: linkage tests are const but counted
  std::uint64_t total_ = 0;
  std::unordered_map<std::uint64_t, FineCell> fine_;
  std::vector<CoarseCell> coarse_;
  std::unordered_map<std::uint64_t, std::uint32_t> coarse_index_;
  detail_cluster::UnionFind uf_;
  std::vector<int> comp_label_;
  int ncomp_ = 0;
  std::vector<std::uint64_t> sizes_;
  std::vector<double> diameters_;
  double max_diameter_ = 0.0;
  double min_gap_ = kInf;
};

namespace detail_cluster {

// Reference path: all-pairs union-find, exact diagnostics by full scans.
inline ClusterReport cluster_brute(const std::vector<Vec4>& pts,
                                   double threshold) {
  const std::size_t n = pts.size();
  const double thr2 = threshold * threshold;
  UnionFind uf;
  for (std::size_t i = 0; i < n; ++i) uf.make();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (dist2(pts[i], pts[j]) <= thr2)
        uf.unite(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));

  ClusterReport rep;
  std::vector<int> label(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t r = uf.find(static_cast<std::uint32_t>(i));
    if (label[r] < 0) {
      label[r] = rep.count++;
      rep.clusters.emplace_back();
    }
    label[i] = label[r];
    rep.clusters[label[i]].push_back(i);
  }
  rep.sizes.assign(rep.count, 0);
  rep.diameters.assign(rep.count, 0.0);
  for (int c = 0; c < rep.count; ++c) {
    rep.sizes[c] = rep.clusters[c].size();
    double d2 = 0.0;
    for (std::size_t a = 0; a < rep.clusters[c].size(); ++a)
      for (std::size_t b = a + 1; b < rep.clusters[c].size(); ++b)
        d2 = std::max(d2, dist2(pts[rep.clusters[c][a]],
                                pts[rep.clusters[c][b]]));
    rep.diameters[c] = std::sqrt(d2);
    rep.max_diameter = std::max(rep.max_diameter, rep.diameters[c]);
  }
  if (rep.count > 1) {
    double g2 = kInf;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (label[i] != label[j]) g2 = std::min(g2, dist2(pts[i], pts[j]));
    rep.min_intercluster_gap = std::sqrt(g2);
  }
  return rep;
}

inline ClusterReport cluster_streamed(const std::vector<Vec4>& pts,
                                      double threshold) {
  StreamClusterEngine eng(threshold);
  for (const auto& p : pts) eng.add(p);
  VectorSlabSource src(pts);
  eng.finish(&src);

  ClusterReport rep;
  rep.count = eng.count();
  rep.sizes = eng.sizes();
  rep.diameters = eng.diameters();
  rep.max_diameter = eng.max_diameter();
  rep.min_intercluster_gap = eng.min_intercluster_gap();
  rep.clusters.assign(rep.count, {});
  for (std::size_t i = 0; i < pts.size(); ++i)
    rep.clusters[eng.component_of(pts[i])].push_back(i);
  return rep;
}

constexpr std::size_t kBruteLimit = 20000;

}  // namespace detail_cluster

inline ClusterReport single_linkage_clusters(const std::vector<Vec4>& pts,
                                             double threshold) {
  if (!(threshold > 0.0))
    throw domain_error("single linkage threshold must be positive");
  if (pts.size() <= detail_cluster::kBruteLimit)
    return detail_cluster::cluster_brute(pts, threshold);
  return detail_cluster::cluster_streamed(pts, threshold);
}

inline ClusterReport single_linkage_clusters(const SlabSample& slab,
                                             double threshold) {
  std::vector<Vec4> pts;
  pts.reserve(slab.points.size());
  for (const auto& p : slab.points) {
    if (p.ambient_complex_dim != 2 || p.coords.size() != 4)
      throw domain_error("single linkage expects points in C^2");
    pts.push_back({p.coords[0], p.coords[1], p.coords[2], p.coords[3]});
  }
  return single_linkage_clusters(pts, threshold);
}

}  // namespace clink
