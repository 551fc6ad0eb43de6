#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hlsh/common.hpp"
#include "hlsh/dataset.hpp"

namespace hlsh {

namespace detail {

inline parse_error parse_fail(const std::string& path, std::size_t line_no, const std::string& what) {
    return parse_error(path + ":" + std::to_string(line_no) + ": " + what);
}

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

/// Reads libsvm-style text: `label idx:val idx:val ...` with 1-based indices.
/// Labels are discarded; d defaults to max index + 1 unless overridden.
inline Dataset load_sparse(const std::string& path, Metric metric, std::uint32_t override_d = 0) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open file: " + path);

    std::vector<std::uint64_t> offsets{0};
    std::vector<std::uint32_t> indices;
    std::vector<double> values;
    std::uint32_t max_idx = 0;
    bool any = false;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        line_no++;
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue;  // blank line
        // tok is the label; the rest are idx:val pairs.
        std::uint32_t prev = 0;
        bool first = true;
        while (ls >> tok) {
            auto colon = tok.find(':');
            if (colon == std::string::npos) {
                throw detail::parse_fail(path, line_no, "expected idx:val, got '" + tok + "'");
            }
            std::size_t pos = 0;
            long long raw_idx;
            double val;
            try {
                raw_idx = std::stoll(tok.substr(0, colon), &pos);
                if (pos != colon) throw std::invalid_argument("");
                val = std::stod(tok.substr(colon + 1), &pos);
                if (pos != tok.size() - colon - 1) throw std::invalid_argument("");
            } catch (const std::exception&) {
                throw detail::parse_fail(path, line_no, "malformed idx:val '" + tok + "'");
            }
            if (raw_idx < 1) throw detail::parse_fail(path, line_no, "feature index must be >= 1");
            auto idx = static_cast<std::uint32_t>(raw_idx - 1);
            if (!first && idx <= prev) {
                throw detail::parse_fail(path, line_no, "feature indices must be strictly increasing");
            }
            first = false;
            prev = idx;
            indices.push_back(idx);
            values.push_back(val);
            max_idx = std::max(max_idx, idx);
            any = true;
        }
        offsets.push_back(indices.size());
    }

    std::uint32_t d = override_d != 0 ? override_d : (any ? max_idx + 1 : 1);
    if (any && d <= max_idx) throw parse_error(path + ": dimension override smaller than max index");
    return Dataset::from_sparse(d, metric, std::move(offsets), std::move(indices), std::move(values));
}

inline void save_sparse(const Dataset& data, const std::string& path) {
    if (data.rep() != Rep::Sparse) throw input_error("save_sparse: dataset is not sparse");
    std::ofstream out(path);
    if (!out) throw parse_error("cannot open file for writing: " + path);
    for (std::size_t i = 0; i < data.size(); i++) {
        PointRef p = data[i];
        out << '0';
        for (std::uint32_t j = 0; j < p.nnz; j++) {
            out << ' ' << (p.sp_idx[j] + 1) << ':' << detail::format_double(p.sp_val[j]);
        }
        out << '\n';
    }
}

/// Reads a dense CSV of reals, one point per line.
inline Dataset load_dense(const std::string& path, Metric metric) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open file: " + path);

    std::vector<double> values;
    std::uint32_t d = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        line_no++;
        if (line.empty()) continue;
        std::uint32_t count = 0;
        std::size_t start = 0;
        while (start <= line.size()) {
            auto end = line.find(',', start);
            if (end == std::string::npos) end = line.size();
            std::string cell = line.substr(start, end - start);
            try {
                std::size_t pos = 0;
                values.push_back(std::stod(cell, &pos));
                while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) pos++;
                if (pos != cell.size()) throw std::invalid_argument("");
            } catch (const std::exception&) {
                throw detail::parse_fail(path, line_no, "malformed value '" + cell + "'");
            }
            count++;
            start = end + 1;
            if (end == line.size()) break;
        }
        if (d == 0) {
            d = count;
        } else if (count != d) {
            throw detail::parse_fail(path, line_no, "row width differs from first row");
        }
    }
    if (d == 0) d = 1;  // empty file: n = 0 dataset
    return Dataset::from_dense(d, metric, std::move(values));
}

inline void save_dense(const Dataset& data, const std::string& path) {
    if (data.rep() != Rep::Dense) throw input_error("save_dense: dataset is not dense");
    std::ofstream out(path);
    if (!out) throw parse_error("cannot open file for writing: " + path);
    for (std::size_t i = 0; i < data.size(); i++) {
        PointRef p = data[i];
        for (std::uint32_t j = 0; j < p.d; j++) {
            if (j) out << ',';
            out << detail::format_double(p.dense[j]);
        }
        out << '\n';
    }
}

/// Reads bit vectors as hex strings, one per line; bit 0 is the least
/// significant bit of the last hex digit. Width is 4 * (digit count).
inline Dataset load_bits(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open file: " + path);

    std::vector<std::uint64_t> words;
    std::uint32_t d = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        line_no++;
        while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
        if (line.empty()) continue;
        if (d == 0) {
            d = static_cast<std::uint32_t>(line.size()) * 4;
        } else if (line.size() * 4 != d) {
            throw detail::parse_fail(path, line_no, "bit width differs from first row");
        }
        std::size_t wpp = (d + 63) / 64;
        std::vector<std::uint64_t> point(wpp, 0);
        for (std::size_t pos = 0; pos < line.size(); pos++) {
            char c = line[line.size() - 1 - pos];  // nibble `pos` counts from the LSB end
            std::uint64_t nibble;
            if (c >= '0' && c <= '9') nibble = static_cast<std::uint64_t>(c - '0');
            else if (c >= 'a' && c <= 'f') nibble = static_cast<std::uint64_t>(c - 'a' + 10);
            else if (c >= 'A' && c <= 'F') nibble = static_cast<std::uint64_t>(c - 'A' + 10);
            else throw detail::parse_fail(path, line_no, std::string("invalid hex digit '") + c + "'");
            point[pos / 16] |= nibble << (4 * (pos % 16));
        }
        words.insert(words.end(), point.begin(), point.end());
    }
    if (d == 0) d = 64;  // empty file: n = 0 dataset
    return Dataset::from_bits(d, std::move(words));
}

inline void save_bits(const Dataset& data, const std::string& path) {
    if (data.rep() != Rep::Bits) throw input_error("save_bits: dataset is not a bit dataset");
    if (data.dim() % 4 != 0) throw input_error("save_bits: width must be a multiple of 4");
    std::ofstream out(path);
    if (!out) throw parse_error("cannot open file for writing: " + path);
    const char* digits = "0123456789abcdef";
    std::uint32_t nibbles = data.dim() / 4;
    for (std::size_t i = 0; i < data.size(); i++) {
        PointRef p = data[i];
        std::string line(nibbles, '0');
        for (std::uint32_t pos = 0; pos < nibbles; pos++) {
            auto nib = (p.words[pos / 16] >> (4 * (pos % 16))) & 0xf;
            line[nibbles - 1 - pos] = digits[nib];
        }
        out << line << '\n';
    }
}

/// One Gaussian blob: center drawn Uniform[0, center_spread]^d, members at
/// center + N(0, scale^2 I). For bit data, scale is the per-bit flip
/// probability around a random center pattern.
struct ClusterSpec {
    double center_spread = 1.0;
    std::size_t size = 0;
    double scale = 0.1;
};

/// Synthetic dataset with controllable local density: clusters plus a
/// uniform background making up the remainder of n.
struct SyntheticSpec {
    std::size_t n = 0;
    std::uint32_t d = 0;
    Metric metric = Metric::L2;
    std::vector<ClusterSpec> clusters;
    std::uint64_t seed = 1;

    std::size_t background_count() const {
        std::size_t c = 0;
        for (const auto& cl : clusters) c += cl.size;
        if (c > n) throw config_error("synthetic: cluster sizes exceed n");
        return n - c;
    }

    void validate() const {
        if (d == 0) throw config_error("synthetic: d must be positive");
        for (const auto& cl : clusters) {
            if (!(cl.scale > 0.0)) throw config_error("synthetic: scales must be positive");
            if (metric == Metric::Hamming && cl.scale >= 1.0) {
                throw config_error("synthetic: bit flip probability must be < 1");
            }
        }
        (void)background_count();
    }
};

struct SyntheticData {
    Dataset data;
    std::vector<std::int32_t> assignment;  // cluster index, -1 for background
};

/// Deterministic given the seed; cluster points first (in spec order), then
/// the uniform background. The assignment sidecar maps id -> cluster.
inline SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    SplitMix64 rng(spec.seed);
    SyntheticData out;
    out.assignment.reserve(spec.n);

    if (spec.metric == Metric::Hamming) {
        std::size_t wpp = (spec.d + 63) / 64;
        std::vector<std::uint64_t> words;
        words.reserve(spec.n * wpp);
        auto push_random = [&] {
            for (std::size_t w = 0; w < wpp; w++) {
                std::uint64_t x = rng.next_u64();
                if (w == wpp - 1 && spec.d % 64 != 0) x &= (1ull << (spec.d % 64)) - 1;
                words.push_back(x);
            }
        };
        std::int32_t cluster_id = 0;
        for (const auto& cl : spec.clusters) {
            std::vector<std::uint64_t> center;
            for (std::size_t w = 0; w < wpp; w++) {
                std::uint64_t x = rng.next_u64();
                if (w == wpp - 1 && spec.d % 64 != 0) x &= (1ull << (spec.d % 64)) - 1;
                center.push_back(x);
            }
            for (std::size_t i = 0; i < cl.size; i++) {
                for (std::size_t w = 0; w < wpp; w++) {
                    std::uint64_t flips = 0;
                    std::uint32_t width = (w == wpp - 1 && spec.d % 64 != 0) ? spec.d % 64 : 64;
                    for (std::uint32_t b = 0; b < width; b++) {
                        if (rng.next_double() < cl.scale) flips |= 1ull << b;
                    }
                    words.push_back(center[w] ^ flips);
                }
                out.assignment.push_back(cluster_id);
            }
            cluster_id++;
        }
        for (std::size_t i = 0; i < spec.background_count(); i++) {
            push_random();
            out.assignment.push_back(-1);
        }
        out.data = Dataset::from_bits(spec.d, std::move(words));
        return out;
    }

    double bg_spread = 1.0;
    for (const auto& cl : spec.clusters) bg_spread = std::max(bg_spread, cl.center_spread);

    std::vector<double> values;
    values.reserve(spec.n * spec.d);
    std::int32_t cluster_id = 0;
    for (const auto& cl : spec.clusters) {
        std::vector<double> center(spec.d);
        for (auto& c : center) c = rng.next_double() * cl.center_spread;
        for (std::size_t i = 0; i < cl.size; i++) {
            for (std::uint32_t j = 0; j < spec.d; j++) {
                values.push_back(center[j] + cl.scale * rng.next_gaussian());
            }
            out.assignment.push_back(cluster_id);
        }
        cluster_id++;
    }
    for (std::size_t i = 0; i < spec.background_count(); i++) {
        for (std::uint32_t j = 0; j < spec.d; j++) {
            values.push_back(rng.next_double() * bg_spread);
        }
        out.assignment.push_back(-1);
    }
    out.data = Dataset::from_dense(spec.d, spec.metric, std::move(values));
    return out;
}

struct QuerySample {
    std::vector<Point> queries;  // ids n-count .. n-1
    Dataset reduced;             // remaining points renumbered 0 .. n-count-1
};

/// Removes `count` random points to serve as the query set. The reduced
/// dataset keeps the survivors in their original order with fresh ids; the
/// removed points take ids above the reduced range, so the two id sets are
/// disjoint.
inline QuerySample sample_queries(const Dataset& data, std::size_t count, std::uint64_t seed) {
    if (count >= data.size() && !(count == 0 && data.size() == 0)) {
        throw input_error("sample_queries: count must be < n");
    }
    SplitMix64 rng(seed);
    std::vector<std::uint8_t> removed(data.size(), 0);
    std::vector<std::size_t> picks;
    picks.reserve(count);
    // Floyd's algorithm for a uniform distinct sample.
    for (std::size_t j = data.size() - count; j < data.size(); j++) {
        std::size_t t = rng.next_below(j + 1);
        if (!removed[t]) {
            removed[t] = 1;
            picks.push_back(t);
        } else {
            removed[j] = 1;
            picks.push_back(j);
        }
    }
    std::sort(picks.begin(), picks.end());

    QuerySample out;
    std::size_t keep = data.size() - count;
    out.queries.reserve(count);
    for (std::size_t i = 0; i < picks.size(); i++) {
        out.queries.push_back(data.copy_point(picks[i], static_cast<PointId>(keep + i)));
    }

    if (data.rep() == Rep::Dense) {
        std::vector<double> values;
        values.reserve(keep * data.dim());
        for (std::size_t id = 0; id < data.size(); id++) {
            if (removed[id]) continue;
            PointRef p = data[id];
            values.insert(values.end(), p.dense, p.dense + p.d);
        }
        out.reduced = Dataset::from_dense(data.dim(), data.metric(), std::move(values));
    } else if (data.rep() == Rep::Bits) {
        std::vector<std::uint64_t> words;
        std::size_t wpp = (data.dim() + 63) / 64;
        words.reserve(keep * wpp);
        for (std::size_t id = 0; id < data.size(); id++) {
            if (removed[id]) continue;
            PointRef p = data[id];
            words.insert(words.end(), p.words, p.words + p.nwords);
        }
        out.reduced = Dataset::from_bits(data.dim(), std::move(words));
    } else {
        std::vector<std::uint64_t> offsets{0};
        std::vector<std::uint32_t> indices;
        std::vector<double> values;
        for (std::size_t id = 0; id < data.size(); id++) {
            if (removed[id]) continue;
            PointRef p = data[id];
            indices.insert(indices.end(), p.sp_idx, p.sp_idx + p.nnz);
            values.insert(values.end(), p.sp_val, p.sp_val + p.nnz);
            offsets.push_back(indices.size());
        }
        out.reduced = Dataset::from_sparse(data.dim(), data.metric(), std::move(offsets),
                                           std::move(indices), std::move(values));
    }
    return out;
}

}  // namespace hlsh
