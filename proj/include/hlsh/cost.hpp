#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "hlsh/common.hpp"
#include "hlsh/dataset.hpp"

namespace hlsh {

/// Unit costs: alpha per duplicate-removal operation, beta per distance
/// computation. Units are abstract; only the ratio affects decisions.
struct CostParams {
    double alpha = 1.0;
    double beta = 1.0;

    void validate() const {
        if (!(alpha > 0.0) || !(beta > 0.0)) throw config_error("cost: alpha and beta must be positive");
    }

    double ratio() const { return beta / alpha; }
};

/// Per-query collision count (exact) and estimated distinct candidate count.
struct CandidateEstimate {
    std::uint64_t collisions = 0;
    double cand_size_est = 0.0;
};

enum class Strategy : std::uint8_t { LshSearch = 0, LinearSearch = 1 };

inline const char* strategy_name(Strategy s) {
    return s == Strategy::LshSearch ? "lsh" : "linear";
}

/// alpha * #collisions + beta * candSize.
inline double lsh_cost(const CostParams& p, const CandidateEstimate& e) {
    return p.alpha * static_cast<double>(e.collisions) + p.beta * e.cand_size_est;
}

/// beta * n.
inline double linear_cost(const CostParams& p, std::uint64_t n) {
    return p.beta * static_cast<double>(n);
}

/// LSH-based search iff its cost is strictly smaller; ties go to the linear
/// scan, which has guaranteed recall and no estimation slack.
inline Strategy decide(double lsh, double linear) {
    return lsh < linear ? Strategy::LshSearch : Strategy::LinearSearch;
}

/// Default beta/alpha presets by metric (alpha normalized to 1):
/// cosine 10, l1 10, l2 6, hamming 1.
inline CostParams preset_cost_params(Metric metric) {
    CostParams p;
    p.alpha = 1.0;
    switch (metric) {
        case Metric::Cosine: p.beta = 10.0; break;
        case Metric::L1: p.beta = 10.0; break;
        case Metric::L2: p.beta = 6.0; break;
        case Metric::Hamming: p.beta = 1.0; break;
    }
    return p;
}

/// Generation-stamped direct-address membership table over point ids.
/// Clearing is a counter bump, not a memset, so alpha stays small and
/// constant per insert.
class DedupTable {
public:
    explicit DedupTable(std::size_t n) : stamps_(n, 0) {}

    void reset() {
        if (++generation_ == 0) {
            std::fill(stamps_.begin(), stamps_.end(), 0);
            generation_ = 1;
        }
    }

    /// True when the id was not yet a member.
    bool insert(PointId id) {
        if (stamps_[id] == generation_) return false;
        stamps_[id] = generation_;
        return true;
    }

    std::size_t capacity() const { return stamps_.size(); }

private:
    std::vector<std::uint32_t> stamps_;
    std::uint32_t generation_ = 0;
};

namespace detail {

inline double mean_ns(std::uint64_t total_ns, std::size_t ops) {
    return ops == 0 ? 0.0 : static_cast<double>(total_ns) / static_cast<double>(ops);
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

/// Measures alpha and beta in nanoseconds on this machine: beta as the mean
/// wall-time of one distance computation over the sample, alpha as the mean
/// wall-time of one membership insert into the dedup table driven by a
/// duplicated id stream. Median of means over `trials` repetitions.
/// Single-threaded by contract.
///
/// dedup_capacity sizes the stamp table for the alpha microbenchmark; pass
/// the size of the dataset that will actually be queried so the measurement
/// sees the same memory footprint as step S2 does. Defaults to the sample
/// size.
inline CostParams calibrate(const Dataset& data_sample, const std::vector<Point>& query_sample,
                            std::uint32_t trials = 5, std::size_t dedup_capacity = 0) {
    if (data_sample.size() < 100) throw config_error("calibrate: need at least 100 sample points");
    if (query_sample.size() < 10) throw config_error("calibrate: need at least 10 sample queries");
    if (trials < 1) throw config_error("calibrate: trials must be >= 1");

    const std::size_t n = dedup_capacity == 0 ? data_sample.size() : dedup_capacity;
    // Duplicated id stream shaped like step S2: several collisions per slot.
    std::vector<PointId> stream;
    stream.reserve(4 * n);
    SplitMix64 rng(0x5ca1ab1eull);
    for (std::size_t i = 0; i < 4 * n; i++) {
        stream.push_back(static_cast<PointId>(rng.next_below(n)));
    }

    std::vector<double> alpha_means, beta_means;
    volatile double sink = 0.0;
    volatile std::uint64_t isink = 0;
    DedupTable dedup(n);
    for (std::uint32_t t = 0; t < trials; t++) {
        std::uint64_t t0 = now_ns();
        std::size_t dist_ops = 0;
        for (const auto& q : query_sample) {
            PointRef qr = q.ref();
            for (std::size_t i = 0; i < data_sample.size(); i++) {
                sink = sink + distance(data_sample[i], qr, data_sample.metric());
                dist_ops++;
            }
        }
        std::uint64_t t1 = now_ns();
        beta_means.push_back(detail::mean_ns(t1 - t0, dist_ops));

        std::uint64_t hits = 0;
        std::uint64_t t2 = now_ns();
        for (std::size_t rep = 0; rep < 8; rep++) {
            dedup.reset();
            for (PointId id : stream) hits += dedup.insert(id) ? 1 : 0;
        }
        std::uint64_t t3 = now_ns();
        isink = isink + hits;
        alpha_means.push_back(detail::mean_ns(t3 - t2, 8 * stream.size()));
    }
    (void)sink;
    (void)isink;

    CostParams p;
    p.alpha = std::max(detail::median(alpha_means), 1e-3);
    p.beta = std::max(detail::median(beta_means), 1e-3);
    return p;
}

}  // namespace hlsh
