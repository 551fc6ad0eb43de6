#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hlsh/common.hpp"
#include "hlsh/cost.hpp"
#include "hlsh/dataset.hpp"
#include "hlsh/index.hpp"

namespace hlsh {

using Neighbor = std::pair<PointId, double>;

/// Everything recorded about one query execution. Neighbors are sorted by id
/// and every reported distance is <= r by the final filter.
struct QueryReport {
    PointId query_id = 0;
    Strategy strategy = Strategy::LinearSearch;
    std::uint64_t collisions = 0;
    double cand_size_est = 0.0;
    std::optional<std::uint64_t> cand_size_exact;  // filled in oracle/bench mode only
    std::vector<Neighbor> neighbors;
    std::uint64_t hash_ns = 0;      // step S1: composite hashes + bucket lookups
    std::uint64_t estimate_ns = 0;  // HLL merge + estimate (the O(mL) part)
    std::uint64_t search_ns = 0;    // chosen strategy, incl. result materialization
    std::uint64_t dist_comps = 0;
};

struct SearchStats {
    std::uint64_t collisions = 0;
    std::uint64_t dist_comps = 0;
};

/// Per-query working state: the scratch sketch, the dedup table and the
/// bucket-pointer list. One context per thread; contexts are independent.
class QueryContext {
public:
    explicit QueryContext(const HybridIndex& index)
        : scratch_(index.params().sketch), dedup_(index.dataset().size()) {}

    HllSketch& scratch() { return scratch_; }
    DedupTable& dedup() { return dedup_; }

    /// Buckets g_1(q)..g_L(q); unoccupied keys yield empty buckets.
    const std::vector<const Bucket*>& lookup_all(const HybridIndex& index, const PointRef& q) {
        buckets_.clear();
        buckets_.reserve(index.params().L);
        for (std::uint32_t t = 0; t < index.params().L; t++) {
            buckets_.push_back(&index.lookup(t, q, key_));
        }
        return buckets_;
    }

    const std::vector<const Bucket*>& buckets() const { return buckets_; }

private:
    HllSketch scratch_;
    DedupTable dedup_;
    std::vector<const Bucket*> buckets_;
    std::string key_;
};

namespace detail {

/// Merge phase over already-looked-up buckets: stored
/// sketches are merged; small buckets contribute their raw ids. Runs in
/// O(mL + sum of small-bucket sizes).
inline CandidateEstimate merge_buckets(const std::vector<const Bucket*>& buckets,
                                       HllSketch& scratch) {
    scratch.clear();
    CandidateEstimate est;
    for (const Bucket* b : buckets) {
        est.collisions += b->size();
        if (b->sketch) {
            scratch.merge(*b->sketch);
        } else {
            for (PointId id : b->ids) scratch.insert(id);
        }
    }
    est.cand_size_est = scratch.estimate();
    return est;
}

inline std::vector<Neighbor> scan_buckets(const HybridIndex& index, const PointRef& q, double r,
                                          const std::vector<const Bucket*>& buckets,
                                          DedupTable& dedup, SearchStats* stats) {
    const Dataset& data = index.dataset();
    Metric metric = data.metric();
    std::vector<Neighbor> out;
    std::uint64_t collisions = 0;
    std::uint64_t dist_comps = 0;
    dedup.reset();
    for (const Bucket* b : buckets) {
        collisions += b->size();
        for (PointId id : b->ids) {
            if (!dedup.insert(id)) continue;
            double dist = distance(data[id], q, metric);
            dist_comps++;
            if (dist <= r) out.emplace_back(id, dist);
        }
    }
    std::sort(out.begin(), out.end(),
              [](const Neighbor& a, const Neighbor& b) { return a.first < b.first; });
    if (stats) {
        stats->collisions = collisions;
        stats->dist_comps = dist_comps;
    }
    return out;
}

}  // namespace detail

/// Exact collision count plus the merged-HLL candidate estimate for q.
inline CandidateEstimate estimate_candidates(const HybridIndex& index, const PointRef& q,
                                             QueryContext& ctx) {
    return detail::merge_buckets(ctx.lookup_all(index, q), ctx.scratch());
}

/// Classic LSH search: gather bucket members over the L tables, deduplicate,
/// compute one distance per distinct candidate, keep those within r.
inline std::vector<Neighbor> lsh_search(const HybridIndex& index, const PointRef& q, double r,
                                        QueryContext& ctx, SearchStats* stats = nullptr) {
    return detail::scan_buckets(index, q, r, ctx.lookup_all(index, q), ctx.dedup(), stats);
}

/// One distance per point; exact answer set in id order.
inline std::vector<Neighbor> linear_search(const Dataset& data, const PointRef& q, double r,
                                           SearchStats* stats = nullptr) {
    std::vector<Neighbor> out;
    Metric metric = data.metric();
    for (std::size_t id = 0; id < data.size(); id++) {
        double dist = distance(data[id], q, metric);
        if (dist <= r) out.emplace_back(static_cast<PointId>(id), dist);
    }
    if (stats) {
        stats->collisions = 0;
        stats->dist_comps = data.size();
    }
    return out;
}

/// The hybrid query: estimate the candidate set, compare the two cost
/// estimates,
/// and run the chosen search. Timing split: hash_ns covers hashing+lookups,
/// estimate_ns the HLL merge+estimate, search_ns the chosen execution.
inline QueryReport hybrid_query(const HybridIndex& index, const PointRef& q, double r,
                                const CostParams& costs, QueryContext& ctx) {
    costs.validate();
    QueryReport report;
    report.query_id = q.id;

    std::uint64_t t0 = now_ns();
    const auto& buckets = ctx.lookup_all(index, q);
    std::uint64_t t1 = now_ns();
    CandidateEstimate est = detail::merge_buckets(buckets, ctx.scratch());
    double cost_lsh = lsh_cost(costs, est);
    double cost_linear = linear_cost(costs, index.dataset().size());
    report.strategy = decide(cost_lsh, cost_linear);
    std::uint64_t t2 = now_ns();

    SearchStats stats;
    if (report.strategy == Strategy::LshSearch) {
        report.neighbors = detail::scan_buckets(index, q, r, buckets, ctx.dedup(), &stats);
    } else {
        report.neighbors = linear_search(index.dataset(), q, r, &stats);
    }
    std::uint64_t t3 = now_ns();

    report.collisions = est.collisions;
    report.cand_size_est = est.cand_size_est;
    report.hash_ns = t1 - t0;
    report.estimate_ns = t2 - t1;
    report.search_ns = t3 - t2;
    report.dist_comps = stats.dist_comps;
    return report;
}

}  // namespace hlsh
