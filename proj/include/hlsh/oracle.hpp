#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "hlsh/common.hpp"
#include "hlsh/dataset.hpp"
#include "hlsh/index.hpp"

namespace hlsh {
namespace oracle {

/// Exact answers for a query set at one radius, used as ground truth for
/// recall and decision-quality measurements.
struct GroundTruth {
    std::uint64_t dataset_hash = 0;
    Metric metric = Metric::L2;
    double r = 0.0;
    std::vector<std::vector<std::pair<PointId, double>>> answers;  // per query, id-sorted
};

namespace detail {

// Reference distance kernels, written independently of hlsh::distance so the
// two paths check each other (library kernels use popcount/merge joins; these
// use a nibble table and index-space loops).

inline std::uint32_t popcount_nibbles(std::uint64_t w) {
    static constexpr std::uint8_t table[16] = {0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4};
    std::uint32_t c = 0;
    for (int s = 0; s < 64; s += 4) c += table[(w >> s) & 0xf];
    return c;
}

inline double coord_at(const PointRef& p, std::uint32_t i) {
    if (p.rep == Rep::Dense) return p.dense[i];
    // Linear probe over the sparse index list.
    for (std::uint32_t j = 0; j < p.nnz; j++) {
        if (p.sp_idx[j] == i) return p.sp_val[j];
        if (p.sp_idx[j] > i) break;
    }
    return 0.0;
}

inline double reference_distance(const PointRef& a, const PointRef& b, Metric metric) {
    switch (metric) {
        case Metric::Hamming: {
            std::uint32_t diff = 0;
            for (std::uint32_t w = 0; w < a.nwords; w++) diff += popcount_nibbles(a.words[w] ^ b.words[w]);
            return diff;
        }
        case Metric::L1: {
            double s = 0.0;
            for (std::uint32_t i = 0; i < a.d; i++) {
                double t = coord_at(a, i) - coord_at(b, i);
                s += t < 0 ? -t : t;
            }
            return s;
        }
        case Metric::L2: {
            double s = 0.0;
            for (std::uint32_t i = 0; i < a.d; i++) {
                double t = coord_at(a, i) - coord_at(b, i);
                s += t * t;
            }
            return std::sqrt(s);
        }
        case Metric::Cosine: {
            double dot = 0.0, na = 0.0, nb = 0.0;
            for (std::uint32_t i = 0; i < a.d; i++) {
                double x = coord_at(a, i);
                double y = coord_at(b, i);
                dot += x * y;
                na += x * x;
                nb += y * y;
            }
            if (na == 0.0 || nb == 0.0) throw input_error("cosine distance undefined for zero-norm vector");
            double c = dot / (std::sqrt(na) * std::sqrt(nb));
            if (c > 1.0) c = 1.0;
            if (c < -1.0) c = -1.0;
            return 1.0 - c;
        }
    }
    throw input_error("unknown metric");
}

}  // namespace detail

/// Exhaustive exact r-near-neighbor scan (the delta = 0 contract).
inline std::vector<std::pair<PointId, double>> brute_force_rnn(const Dataset& data,
                                                               const PointRef& q, double r) {
    std::vector<std::pair<PointId, double>> out;
    for (std::size_t id = 0; id < data.size(); id++) {
        double dist = detail::reference_distance(data[id], q, data.metric());
        if (dist <= r) out.emplace_back(static_cast<PointId>(id), dist);
    }
    return out;
}

/// Exact (collisions, distinct candidate count) over the query's L buckets,
/// deduplicated with a hash set rather than the engine's stamp table.
inline std::pair<std::uint64_t, std::uint64_t> exact_candidate_stats(const HybridIndex& index,
                                                                     const PointRef& q) {
    std::uint64_t collisions = 0;
    std::unordered_set<PointId> distinct;
    std::string key;
    for (std::uint32_t t = 0; t < index.params().L; t++) {
        const Bucket& b = index.lookup(t, q, key);
        collisions += b.size();
        distinct.insert(b.ids.begin(), b.ids.end());
    }
    return {collisions, distinct.size()};
}

/// |reported ∩ truth| / |truth|; 1 when the truth is empty.
template <typename Reported, typename Truth>
double recall(const Reported& reported, const Truth& truth) {
    if (truth.empty()) return 1.0;
    std::unordered_set<PointId> truth_ids;
    for (const auto& t : truth) truth_ids.insert(t.first);
    std::size_t hit = 0;
    for (const auto& rep : reported) {
        if (truth_ids.count(rep.first)) hit++;
    }
    return static_cast<double>(hit) / static_cast<double>(truth_ids.size());
}

namespace detail {

constexpr char kGtMagic[5] = {'H', 'L', 'G', 'T', '1'};

}  // namespace detail

/// Writes a ground-truth cache keyed by (dataset hash, metric, r).
inline void save_ground_truth(const GroundTruth& gt, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw format_error("cannot open ground-truth cache for writing: " + path);
    hlsh::detail::write_bytes(out, detail::kGtMagic, sizeof(detail::kGtMagic));
    hlsh::detail::write_le<std::uint64_t>(out, gt.dataset_hash);
    hlsh::detail::write_le<std::uint8_t>(out, static_cast<std::uint8_t>(gt.metric));
    hlsh::detail::write_f64(out, gt.r);
    hlsh::detail::write_le<std::uint64_t>(out, gt.answers.size());
    for (const auto& ans : gt.answers) {
        hlsh::detail::write_le<std::uint64_t>(out, ans.size());
        for (const auto& [id, dist] : ans) {
            hlsh::detail::write_le<std::uint64_t>(out, id);
            hlsh::detail::write_f64(out, dist);
        }
    }
}

/// Loads a cache and checks its key; returns false on key mismatch so the
/// caller recomputes, throws on malformed files.
inline bool load_ground_truth(const std::string& path, std::uint64_t dataset_hash, Metric metric,
                              double r, GroundTruth& gt_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    char magic[5];
    hlsh::detail::read_bytes(in, magic, sizeof(magic));
    if (std::memcmp(magic, detail::kGtMagic, sizeof(magic)) != 0) {
        throw format_error("bad ground-truth cache magic");
    }
    GroundTruth gt;
    gt.dataset_hash = hlsh::detail::read_le<std::uint64_t>(in);
    gt.metric = static_cast<Metric>(hlsh::detail::read_le<std::uint8_t>(in));
    gt.r = hlsh::detail::read_f64(in);
    if (gt.dataset_hash != dataset_hash || gt.metric != metric || gt.r != r) return false;
    auto nq = hlsh::detail::read_le<std::uint64_t>(in);
    gt.answers.resize(nq);
    for (auto& ans : gt.answers) {
        auto cnt = hlsh::detail::read_le<std::uint64_t>(in);
        ans.reserve(cnt);
        for (std::uint64_t i = 0; i < cnt; i++) {
            auto id = hlsh::detail::read_le<std::uint64_t>(in);
            double dist = hlsh::detail::read_f64(in);
            ans.emplace_back(static_cast<PointId>(id), dist);
        }
    }
    gt_out = std::move(gt);
    return true;
}

}  // namespace oracle
}  // namespace hlsh
