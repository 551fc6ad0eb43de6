#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hlsh/common.hpp"
#include "hlsh/dataset.hpp"

namespace hlsh {

enum class FamilyKind : std::uint8_t {
    BitSampling = 0,  // hamming
    SimHash = 1,      // cosine distance
    PStableL1 = 2,    // Cauchy projections
    PStableL2 = 3,    // Gaussian projections
};

inline const char* family_name(FamilyKind k) {
    switch (k) {
        case FamilyKind::BitSampling: return "bit-sampling";
        case FamilyKind::SimHash: return "simhash";
        case FamilyKind::PStableL1: return "pstable-l1";
        case FamilyKind::PStableL2: return "pstable-l2";
    }
    return "?";
}

inline FamilyKind family_for_metric(Metric m) {
    switch (m) {
        case Metric::Hamming: return FamilyKind::BitSampling;
        case Metric::Cosine: return FamilyKind::SimHash;
        case Metric::L1: return FamilyKind::PStableL1;
        case Metric::L2: return FamilyKind::PStableL2;
    }
    throw config_error("no LSH family for metric");
}

inline bool family_compatible(FamilyKind kind, Metric metric) {
    return family_for_metric(metric) == kind;
}

/// Which family to draw atomic hashes from, and its parameters.
struct FamilySpec {
    FamilyKind kind = FamilyKind::PStableL2;
    std::uint32_t d = 0;
    double w = 0.0;  // bucket width, p-stable kinds only
    std::uint64_t rng_seed = 0;

    void validate() const {
        if (d == 0) throw config_error("family: d must be positive");
        bool pstable = kind == FamilyKind::PStableL1 || kind == FamilyKind::PStableL2;
        if (pstable && !(w > 0.0)) throw config_error("family: bucket width w must be positive");
    }
};

/// One hash drawn from the family; parameters fixed at construction.
struct AtomicHash {
    FamilyKind kind = FamilyKind::BitSampling;
    std::uint32_t coord = 0;        // bit-sampling
    std::vector<double> proj;       // simhash / p-stable projection vector
    double offset = 0.0;            // p-stable b ~ Uniform[0, w)
    double w = 0.0;                 // p-stable bucket width

    static AtomicHash draw(const FamilySpec& spec, SplitMix64& rng) {
        AtomicHash h;
        h.kind = spec.kind;
        switch (spec.kind) {
            case FamilyKind::BitSampling:
                h.coord = static_cast<std::uint32_t>(rng.next_below(spec.d));
                break;
            case FamilyKind::SimHash:
                h.proj.resize(spec.d);
                for (auto& v : h.proj) v = rng.next_gaussian();
                break;
            case FamilyKind::PStableL1:
                h.proj.resize(spec.d);
                for (auto& v : h.proj) v = rng.next_cauchy();
                h.offset = rng.next_double() * spec.w;
                h.w = spec.w;
                break;
            case FamilyKind::PStableL2:
                h.proj.resize(spec.d);
                for (auto& v : h.proj) v = rng.next_gaussian();
                h.offset = rng.next_double() * spec.w;
                h.w = spec.w;
                break;
        }
        return h;
    }
};

namespace detail {

inline double project(const std::vector<double>& a, const PointRef& x) {
    if (x.rep == Rep::Dense) {
        double acc = 0.0;
        for (std::uint32_t i = 0; i < x.d; i++) acc += a[i] * x.dense[i];
        return acc;
    }
    double acc = 0.0;
    for (std::uint32_t i = 0; i < x.nnz; i++) acc += a[x.sp_idx[i]] * x.sp_val[i];
    return acc;
}

}  // namespace detail

/// Value of one atomic hash on a point.
///
/// bit-sampling: the sampled bit; simhash: sign(a.x) as 0/1 with sign(0)=0;
/// p-stable: floor((a.x + b) / w), possibly negative.
inline std::int64_t atomic_eval(const AtomicHash& h, const PointRef& x) {
    switch (h.kind) {
        case FamilyKind::BitSampling: {
            if (x.rep != Rep::Bits) throw input_error("bit-sampling hash needs a bit vector");
            if (h.coord >= x.d) throw input_error("bit-sampling coordinate out of range");
            return static_cast<std::int64_t>((x.words[h.coord / 64] >> (h.coord % 64)) & 1u);
        }
        case FamilyKind::SimHash: {
            if (x.rep == Rep::Bits) throw input_error("simhash needs a real-valued vector");
            return detail::project(h.proj, x) > 0.0 ? 1 : 0;
        }
        case FamilyKind::PStableL1:
        case FamilyKind::PStableL2: {
            if (x.rep == Rep::Bits) throw input_error("p-stable hash needs a real-valued vector");
            return static_cast<std::int64_t>(std::floor((detail::project(h.proj, x) + h.offset) / h.w));
        }
    }
    throw input_error("unknown family kind");
}

namespace detail {

// Zigzag + length-prefixed big-endian bytes: prefix-free, so concatenated
// tuples decode unambiguously, and lexicographic order follows the zigzag
// order. Small atom values (the common case) take two bytes.
inline void encode_atom(std::int64_t v, std::string& out) {
    auto u = static_cast<std::uint64_t>((v << 1) ^ (v >> 63));
    int nbytes = (64 - std::countl_zero(u | 1) + 7) / 8;
    if (u == 0) nbytes = 0;
    out.push_back(static_cast<char>(nbytes));
    for (int i = nbytes - 1; i >= 0; i--) {
        out.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
    }
}

}  // namespace detail

/// Concatenation of k atomic hashes; defines one table's bucketing.
struct CompositeHash {
    std::vector<AtomicHash> atoms;

    /// Injective byte encoding of the k atomic values. Equal keys iff equal
    /// atomic tuples; tables address buckets by a 64-bit hash of these bytes
    /// and compare the full bytes, so hash collisions cannot merge buckets.
    void eval(const PointRef& x, std::string& key_out) const {
        if (atoms.empty()) throw input_error("composite hash must have k >= 1 atoms");
        key_out.clear();
        for (const auto& h : atoms) {
            detail::encode_atom(atomic_eval(h, x), key_out);
        }
    }

    std::string eval(const PointRef& x) const {
        std::string key;
        eval(x, key);
        return key;
    }
};

/// Draws the L composite hashes for an index from one seeded stream.
inline std::vector<CompositeHash> draw_composite_hashes(const FamilySpec& spec, std::uint32_t L,
                                                        std::uint32_t k) {
    spec.validate();
    if (L < 1 || k < 1) throw config_error("need L >= 1 tables and k >= 1 atoms");
    SplitMix64 rng(spec.rng_seed);
    std::vector<CompositeHash> out(L);
    for (auto& g : out) {
        g.atoms.reserve(k);
        for (std::uint32_t i = 0; i < k; i++) g.atoms.push_back(AtomicHash::draw(spec, rng));
    }
    return out;
}

/// Collision probability p(r) of one atomic hash for points at distance r.
inline double collision_prob(const FamilySpec& spec, double r) {
    if (!(r > 0.0)) throw input_error("collision_prob: r must be positive");
    switch (spec.kind) {
        case FamilyKind::BitSampling: {
            if (r >= static_cast<double>(spec.d)) throw input_error("collision_prob: r out of range for hamming");
            return 1.0 - r / static_cast<double>(spec.d);
        }
        case FamilyKind::SimHash: {
            if (r >= 2.0) throw input_error("collision_prob: cosine distance r must be < 2");
            return 1.0 - std::acos(1.0 - r) / M_PI;
        }
        case FamilyKind::PStableL2: {
            double t = spec.w / r;
            double phi_neg_t = 0.5 * std::erfc(t / std::sqrt(2.0));
            return 1.0 - 2.0 * phi_neg_t -
                   (2.0 / (std::sqrt(2.0 * M_PI) * t)) * (1.0 - std::exp(-t * t / 2.0));
        }
        case FamilyKind::PStableL1: {
            double t = spec.w / r;
            return (2.0 / M_PI) * std::atan(t) - std::log1p(t * t) / (M_PI * t);
        }
    }
    throw input_error("unknown family kind");
}

/// Inputs for the k planner. c and p2 are carried for reporting only; the
/// planner consumes delta, L and p1.
struct PlannerInput {
    double delta = 0.1;
    std::uint32_t L = 50;
    double p1 = 0.0;
    double c = 0.0;
    double p2 = 0.0;
};

/// Per-table concatenation count k = max(1, ceil(log(1 - delta^(1/L)) / log(p1))).
inline std::uint32_t plan_k(const PlannerInput& in) {
    if (!(in.p1 > 0.0) || !(in.p1 < 1.0)) throw input_error("plan_k: p1 must be in (0,1)");
    if (!(in.delta > 0.0) || !(in.delta < 1.0)) throw input_error("plan_k: delta must be in (0,1)");
    if (in.L < 1) throw input_error("plan_k: L must be >= 1");
    double x = std::log(1.0 - std::pow(in.delta, 1.0 / in.L)) / std::log(in.p1);
    auto k = static_cast<std::int64_t>(std::ceil(x));
    return k < 1 ? 1u : static_cast<std::uint32_t>(k);
}

/// 64 hyperplane signs packed into a word; bit j = sign(a_j . x), sign(0) = 0.
inline std::uint64_t simhash_fingerprint(const PointRef& x, const std::vector<AtomicHash>& planes) {
    if (planes.size() != 64) throw input_error("fingerprint needs exactly 64 planes");
    std::uint64_t fp = 0;
    for (std::size_t j = 0; j < 64; j++) {
        if (planes[j].kind != FamilyKind::SimHash) throw input_error("fingerprint planes must be simhash atoms");
        fp |= static_cast<std::uint64_t>(atomic_eval(planes[j], x)) << j;
    }
    return fp;
}

inline std::vector<AtomicHash> draw_simhash_planes(std::uint32_t d, std::uint64_t seed) {
    FamilySpec spec;
    spec.kind = FamilyKind::SimHash;
    spec.d = d;
    spec.rng_seed = seed;
    spec.validate();
    SplitMix64 rng(seed);
    std::vector<AtomicHash> planes;
    planes.reserve(64);
    for (int j = 0; j < 64; j++) planes.push_back(AtomicHash::draw(spec, rng));
    return planes;
}

}  // namespace hlsh
