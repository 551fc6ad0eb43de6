#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hlsh/common.hpp"

namespace hlsh {

using PointId = std::uint32_t;

enum class Metric : std::uint8_t { Hamming = 0, L1 = 1, L2 = 2, Cosine = 3 };

/// Storage representation shared by every point of one dataset.
enum class Rep : std::uint8_t { Dense = 0, Sparse = 1, Bits = 2 };

inline const char* metric_name(Metric m) {
    switch (m) {
        case Metric::Hamming: return "hamming";
        case Metric::L1: return "l1";
        case Metric::L2: return "l2";
        case Metric::Cosine: return "cosine";
    }
    return "?";
}

inline Metric metric_from_name(const std::string& s) {
    if (s == "hamming") return Metric::Hamming;
    if (s == "l1") return Metric::L1;
    if (s == "l2") return Metric::L2;
    if (s == "cosine" || s == "cosine-distance") return Metric::Cosine;
    throw config_error("unknown metric: " + s);
}

/// Hamming works on bit vectors; the real-valued metrics on dense or sparse.
inline bool metric_compatible(Metric m, Rep rep) {
    if (m == Metric::Hamming) return rep == Rep::Bits;
    return rep == Rep::Dense || rep == Rep::Sparse;
}

/// Non-owning view of one point. Exactly one representation's fields are set.
struct PointRef {
    PointId id = 0;
    Rep rep = Rep::Dense;
    std::uint32_t d = 0;

    const double* dense = nullptr;

    const std::uint32_t* sp_idx = nullptr;  // strictly increasing
    const double* sp_val = nullptr;
    std::uint32_t nnz = 0;

    const std::uint64_t* words = nullptr;
    std::uint32_t nwords = 0;
};

/// Owning point, used for query sets and hand-built test points.
struct Point {
    PointId id = 0;
    Rep rep = Rep::Dense;
    std::uint32_t d = 0;
    std::vector<double> dense;
    std::vector<std::uint32_t> sp_idx;
    std::vector<double> sp_val;
    std::vector<std::uint64_t> bits;

    static Point make_dense(PointId id, std::vector<double> coords) {
        Point p;
        p.id = id;
        p.rep = Rep::Dense;
        p.d = static_cast<std::uint32_t>(coords.size());
        p.dense = std::move(coords);
        return p;
    }

    static Point make_sparse(PointId id, std::uint32_t d,
                             std::vector<std::uint32_t> idx, std::vector<double> val) {
        if (idx.size() != val.size()) throw input_error("sparse point: index/value size mismatch");
        for (std::size_t i = 1; i < idx.size(); i++) {
            if (idx[i] <= idx[i - 1]) throw input_error("sparse point: indices not strictly increasing");
        }
        if (!idx.empty() && idx.back() >= d) throw input_error("sparse point: index out of range");
        Point p;
        p.id = id;
        p.rep = Rep::Sparse;
        p.d = d;
        p.sp_idx = std::move(idx);
        p.sp_val = std::move(val);
        return p;
    }

    static Point make_bits(PointId id, std::uint32_t d, std::vector<std::uint64_t> words) {
        if (words.size() != (d + 63) / 64) throw input_error("bit point: word count does not match width");
        Point p;
        p.id = id;
        p.rep = Rep::Bits;
        p.d = d;
        p.bits = std::move(words);
        return p;
    }

    PointRef ref() const {
        PointRef r;
        r.id = id;
        r.rep = rep;
        r.d = d;
        switch (rep) {
            case Rep::Dense:
                r.dense = dense.data();
                break;
            case Rep::Sparse:
                r.sp_idx = sp_idx.data();
                r.sp_val = sp_val.data();
                r.nnz = static_cast<std::uint32_t>(sp_idx.size());
                break;
            case Rep::Bits:
                r.words = bits.data();
                r.nwords = static_cast<std::uint32_t>(bits.size());
                break;
        }
        return r;
    }
};

/// Immutable point set. All points share one representation, dimensionality
/// and metric; ids are 0..n-1 in storage order.
class Dataset {
public:
    Dataset() = default;

    static Dataset from_dense(std::uint32_t d, Metric metric, std::vector<double> row_major) {
        if (d == 0) throw config_error("dataset: d must be positive");
        if (row_major.size() % d != 0) throw config_error("dataset: value count not a multiple of d");
        check_metric(metric, Rep::Dense);
        Dataset ds;
        ds.rep_ = Rep::Dense;
        ds.metric_ = metric;
        ds.d_ = d;
        ds.n_ = row_major.size() / d;
        ds.dense_ = std::move(row_major);
        return ds;
    }

    static Dataset from_sparse(std::uint32_t d, Metric metric, std::vector<std::uint64_t> offsets,
                               std::vector<std::uint32_t> indices, std::vector<double> values) {
        if (d == 0) throw config_error("dataset: d must be positive");
        check_metric(metric, Rep::Sparse);
        if (offsets.empty() || offsets.front() != 0 || offsets.back() != indices.size() ||
            indices.size() != values.size()) {
            throw config_error("dataset: inconsistent sparse layout");
        }
        for (std::size_t p = 0; p + 1 < offsets.size(); p++) {
            for (std::uint64_t i = offsets[p]; i < offsets[p + 1]; i++) {
                if (i > offsets[p] && indices[i] <= indices[i - 1]) {
                    throw config_error("dataset: sparse indices not strictly increasing");
                }
                if (indices[i] >= d) throw config_error("dataset: sparse index out of range");
            }
        }
        Dataset ds;
        ds.rep_ = Rep::Sparse;
        ds.metric_ = metric;
        ds.d_ = d;
        ds.n_ = offsets.size() - 1;
        ds.sp_offsets_ = std::move(offsets);
        ds.sp_idx_ = std::move(indices);
        ds.sp_val_ = std::move(values);
        return ds;
    }

    static Dataset from_bits(std::uint32_t d, std::vector<std::uint64_t> words_row_major) {
        if (d == 0) throw config_error("dataset: d must be positive");
        std::size_t wpp = (d + 63) / 64;
        if (words_row_major.size() % wpp != 0) throw config_error("dataset: word count not a multiple of width");
        Dataset ds;
        ds.rep_ = Rep::Bits;
        ds.metric_ = Metric::Hamming;
        ds.d_ = d;
        ds.n_ = words_row_major.size() / wpp;
        ds.bits_ = std::move(words_row_major);
        return ds;
    }

    std::size_t size() const { return n_; }
    std::uint32_t dim() const { return d_; }
    Rep rep() const { return rep_; }
    Metric metric() const { return metric_; }

    PointRef operator[](std::size_t id) const {
        PointRef r;
        r.id = static_cast<PointId>(id);
        r.rep = rep_;
        r.d = d_;
        switch (rep_) {
            case Rep::Dense:
                r.dense = dense_.data() + id * d_;
                break;
            case Rep::Sparse: {
                auto b = sp_offsets_[id];
                r.sp_idx = sp_idx_.data() + b;
                r.sp_val = sp_val_.data() + b;
                r.nnz = static_cast<std::uint32_t>(sp_offsets_[id + 1] - b);
                break;
            }
            case Rep::Bits: {
                std::size_t wpp = (d_ + 63) / 64;
                r.words = bits_.data() + id * wpp;
                r.nwords = static_cast<std::uint32_t>(wpp);
                break;
            }
        }
        return r;
    }

    /// Owning copy of one point (used when carving out query sets).
    Point copy_point(std::size_t id, PointId new_id) const {
        PointRef r = (*this)[id];
        Point p;
        p.id = new_id;
        p.rep = rep_;
        p.d = d_;
        switch (rep_) {
            case Rep::Dense:
                p.dense.assign(r.dense, r.dense + d_);
                break;
            case Rep::Sparse:
                p.sp_idx.assign(r.sp_idx, r.sp_idx + r.nnz);
                p.sp_val.assign(r.sp_val, r.sp_val + r.nnz);
                break;
            case Rep::Bits:
                p.bits.assign(r.words, r.words + r.nwords);
                break;
        }
        return p;
    }

    /// Copy of the first `count` points (ids 0..count-1).
    Dataset prefix_copy(std::size_t count) const {
        if (count > n_) throw input_error("prefix_copy: count exceeds n");
        switch (rep_) {
            case Rep::Dense:
                return from_dense(d_, metric_,
                                  std::vector<double>(dense_.begin(), dense_.begin() + count * d_));
            case Rep::Bits: {
                std::size_t wpp = (d_ + 63) / 64;
                return from_bits(d_, std::vector<std::uint64_t>(bits_.begin(),
                                                                bits_.begin() + count * wpp));
            }
            case Rep::Sparse: {
                std::vector<std::uint64_t> offsets(sp_offsets_.begin(),
                                                   sp_offsets_.begin() + count + 1);
                auto end = offsets.back();
                return from_sparse(d_, metric_, std::move(offsets),
                                   std::vector<std::uint32_t>(sp_idx_.begin(), sp_idx_.begin() + end),
                                   std::vector<double>(sp_val_.begin(), sp_val_.begin() + end));
            }
        }
        throw input_error("unknown representation");
    }

    /// FNV-1a over the raw buffers; keys the ground-truth cache.
    std::uint64_t content_hash() const {
        std::uint64_t h = fnv1a64(&d_, sizeof(d_));
        auto fold = [&h](const void* p, std::size_t len) {
            if (len) h = h * 0x100000001b3ull ^ fnv1a64(p, len);
        };
        fold(dense_.data(), dense_.size() * sizeof(double));
        fold(sp_offsets_.data(), sp_offsets_.size() * sizeof(std::uint64_t));
        fold(sp_idx_.data(), sp_idx_.size() * sizeof(std::uint32_t));
        fold(sp_val_.data(), sp_val_.size() * sizeof(double));
        fold(bits_.data(), bits_.size() * sizeof(std::uint64_t));
        unsigned char tag[2] = {static_cast<unsigned char>(rep_), static_cast<unsigned char>(metric_)};
        fold(tag, 2);
        return mix64(h);
    }

    const std::vector<double>& dense_values() const { return dense_; }
    const std::vector<std::uint64_t>& bit_words() const { return bits_; }

private:
    static void check_metric(Metric metric, Rep rep) {
        if (!metric_compatible(metric, rep)) {
            throw config_error("metric incompatible with point representation");
        }
    }

    Rep rep_ = Rep::Dense;
    Metric metric_ = Metric::L2;
    std::uint32_t d_ = 0;
    std::size_t n_ = 0;
    std::vector<double> dense_;
    std::vector<std::uint64_t> sp_offsets_;
    std::vector<std::uint32_t> sp_idx_;
    std::vector<double> sp_val_;
    std::vector<std::uint64_t> bits_;
};

namespace detail {

inline void check_pair(const PointRef& a, const PointRef& b) {
    if (a.rep != b.rep) throw input_error("distance: representation mismatch");
    if (a.d != b.d) throw input_error("distance: dimensionality mismatch");
}

template <typename F>
double reduce_coords(const PointRef& a, const PointRef& b, F&& term) {
    // Accumulates term(x_i, y_i) over all coordinates where either side is nonzero.
    double acc = 0.0;
    if (a.rep == Rep::Dense) {
        for (std::uint32_t i = 0; i < a.d; i++) acc += term(a.dense[i], b.dense[i]);
        return acc;
    }
    // Sparse merge join; zero-zero coordinates contribute term(0,0)=0 for all metrics used.
    std::uint32_t i = 0, j = 0;
    while (i < a.nnz && j < b.nnz) {
        if (a.sp_idx[i] == b.sp_idx[j]) {
            acc += term(a.sp_val[i], b.sp_val[j]);
            i++, j++;
        } else if (a.sp_idx[i] < b.sp_idx[j]) {
            acc += term(a.sp_val[i], 0.0);
            i++;
        } else {
            acc += term(0.0, b.sp_val[j]);
            j++;
        }
    }
    for (; i < a.nnz; i++) acc += term(a.sp_val[i], 0.0);
    for (; j < b.nnz; j++) acc += term(0.0, b.sp_val[j]);
    return acc;
}

inline double dot(const PointRef& a, const PointRef& b) {
    if (a.rep == Rep::Dense) {
        double acc = 0.0;
        for (std::uint32_t i = 0; i < a.d; i++) acc += a.dense[i] * b.dense[i];
        return acc;
    }
    double acc = 0.0;
    std::uint32_t i = 0, j = 0;
    while (i < a.nnz && j < b.nnz) {
        if (a.sp_idx[i] == b.sp_idx[j]) {
            acc += a.sp_val[i] * b.sp_val[j];
            i++, j++;
        } else if (a.sp_idx[i] < b.sp_idx[j]) {
            i++;
        } else {
            j++;
        }
    }
    return acc;
}

inline double norm2(const PointRef& a) {
    if (a.rep == Rep::Dense) {
        double acc = 0.0;
        for (std::uint32_t i = 0; i < a.d; i++) acc += a.dense[i] * a.dense[i];
        return std::sqrt(acc);
    }
    double acc = 0.0;
    for (std::uint32_t i = 0; i < a.nnz; i++) acc += a.sp_val[i] * a.sp_val[i];
    return std::sqrt(acc);
}

}  // namespace detail

/// Distance between two points of identical representation and width.
///
/// hamming: differing-bit count; l1/l2: standard norms of the difference;
/// cosine: 1 - cos(a, b) on the raw (not pre-normalized) vectors.
inline double distance(const PointRef& a, const PointRef& b, Metric metric) {
    detail::check_pair(a, b);
    if (!metric_compatible(metric, a.rep)) throw input_error("distance: metric incompatible with representation");
    switch (metric) {
        case Metric::Hamming: {
            std::uint64_t diff = 0;
            for (std::uint32_t w = 0; w < a.nwords; w++) {
                diff += static_cast<std::uint64_t>(std::popcount(a.words[w] ^ b.words[w]));
            }
            return static_cast<double>(diff);
        }
        case Metric::L1:
            return detail::reduce_coords(a, b, [](double x, double y) { return std::abs(x - y); });
        case Metric::L2:
            return std::sqrt(detail::reduce_coords(a, b, [](double x, double y) {
                double t = x - y;
                return t * t;
            }));
        case Metric::Cosine: {
            double na = detail::norm2(a);
            double nb = detail::norm2(b);
            if (na == 0.0 || nb == 0.0) throw input_error("cosine distance undefined for zero-norm vector");
            double c = detail::dot(a, b) / (na * nb);
            if (c > 1.0) c = 1.0;
            if (c < -1.0) c = -1.0;
            return 1.0 - c;
        }
    }
    throw input_error("unknown metric");
}

inline double distance(const Point& a, const Point& b, Metric metric) {
    return distance(a.ref(), b.ref(), metric);
}

}  // namespace hlsh
