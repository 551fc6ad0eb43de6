#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "hlsh/common.hpp"
#include "hlsh/dataset.hpp"
#include "hlsh/families.hpp"
#include "hlsh/hll.hpp"

namespace hlsh {

/// Everything index construction needs.
struct IndexParams {
    double r = 1.0;
    double delta = 0.1;
    std::uint32_t L = 50;
    std::uint32_t k = 1;
    FamilySpec family;
    SketchConfig sketch;
    /// Buckets below this size carry no materialized sketch; their raw ids
    /// are folded into the query's scratch sketch on demand.
    std::uint32_t hll_threshold = 128;

    void validate() const {
        if (L < 1) throw config_error("index: L must be >= 1");
        if (k < 1) throw config_error("index: k must be >= 1");
        if (!(r > 0.0)) throw config_error("index: r must be positive");
        if (!(delta > 0.0) || !(delta < 1.0)) throw config_error("index: delta must be in (0,1)");
        family.validate();
        sketch.validate();
    }
};

/// Ids sharing one composite hash value in one table.
struct Bucket {
    std::vector<PointId> ids;  // sorted ascending
    std::optional<HllSketch> sketch;

    std::size_t size() const { return ids.size(); }
};

namespace detail {

struct KeyHash {
    std::size_t operator()(const std::string& key) const {
        return static_cast<std::size_t>(mix64(fnv1a64(key.data(), key.size())));
    }
};

}  // namespace detail

using BucketMap = std::unordered_map<std::string, Bucket, detail::KeyHash>;

/// L hash tables over one dataset, each bucket carrying its membership list
/// and (above the size threshold) an HLL sketch. Immutable after build.
class HybridIndex {
public:
    HybridIndex() = default;

    const IndexParams& params() const { return params_; }
    const Dataset& dataset() const { return *dataset_; }
    const std::vector<CompositeHash>& hashes() const { return hashes_; }
    const std::vector<BucketMap>& tables() const { return tables_; }

    /// Bucket at g_i(q), or an empty bucket when the key is unoccupied.
    const Bucket& lookup(std::uint32_t table_i, const PointRef& q, std::string& key_scratch) const {
        if (table_i >= tables_.size()) throw input_error("lookup: table index out of range");
        hashes_[table_i].eval(q, key_scratch);
        auto it = tables_[table_i].find(key_scratch);
        return it == tables_[table_i].end() ? empty_bucket_ : it->second;
    }

    const Bucket& lookup(std::uint32_t table_i, const PointRef& q) const {
        std::string key;
        return lookup(table_i, q, key);
    }

    /// Bytes of membership lists + keys vs bytes of materialized sketches,
    /// as serialized. Reported by the build command.
    void space_breakdown(std::uint64_t& bucket_bytes, std::uint64_t& sketch_bytes) const {
        bucket_bytes = 0;
        sketch_bytes = 0;
        for (const auto& table : tables_) {
            for (const auto& [key, bucket] : table) {
                bucket_bytes += 8 + key.size() + 8 + 8 * bucket.ids.size() + 1;
                if (bucket.sketch) sketch_bytes += bucket.sketch->serialized_bytes();
            }
        }
    }

    friend HybridIndex build_index(const Dataset& data, const IndexParams& params,
                                   unsigned max_workers);
    friend HybridIndex load_index(const std::string& path, const Dataset& data);

private:
    IndexParams params_;
    const Dataset* dataset_ = nullptr;
    std::vector<CompositeHash> hashes_;
    std::vector<BucketMap> tables_;

    inline static const Bucket empty_bucket_{};
};

/// Builds the L tables and per-bucket sketches. Deterministic given seeds;
/// tables are built in parallel (each table scans points in id order, so the
/// result is identical to a single-threaded build). max_workers = 0 sizes
/// the pool from the hardware.
inline HybridIndex build_index(const Dataset& data, const IndexParams& params,
                               unsigned max_workers = 0) {
    params.validate();
    if (!family_compatible(params.family.kind, data.metric())) {
        throw config_error("index: family incompatible with dataset metric");
    }
    if (data.size() > 0 && params.family.d != data.dim()) {
        throw config_error("index: family dimensionality does not match dataset");
    }

    HybridIndex index;
    index.params_ = params;
    index.dataset_ = &data;
    index.hashes_ = draw_composite_hashes(params.family, params.L, params.k);
    index.tables_.resize(params.L);

    auto build_table = [&](std::uint32_t t) {
        auto& table = index.tables_[t];
        const auto& g = index.hashes_[t];
        std::string key;
        for (std::size_t id = 0; id < data.size(); id++) {
            g.eval(data[id], key);
            table[key].ids.push_back(static_cast<PointId>(id));
        }
        for (auto& [k2, bucket] : table) {
            if (bucket.ids.size() >= params.hll_threshold) {
                HllSketch s(params.sketch);
                for (PointId id : bucket.ids) s.insert(id);
                bucket.sketch = std::move(s);
            }
        }
    };

    unsigned workers = max_workers == 0 ? std::thread::hardware_concurrency() : max_workers;
    workers = std::min<unsigned>(workers, params.L);
    if (workers <= 1 || data.size() < 4096) {
        for (std::uint32_t t = 0; t < params.L; t++) build_table(t);
    } else {
        std::vector<std::thread> pool;
        std::atomic<std::uint32_t> next{0};
        for (unsigned w = 0; w < workers; w++) {
            pool.emplace_back([&] {
                for (std::uint32_t t = next.fetch_add(1); t < params.L; t = next.fetch_add(1)) {
                    build_table(t);
                }
            });
        }
        for (auto& th : pool) th.join();
    }
    return index;
}

namespace detail {

constexpr char kIndexMagic[5] = {'H', 'L', 'S', 'H', '1'};
constexpr std::uint32_t kIndexVersion = 1;

}  // namespace detail

/// Writes the index file: magic, header (params, seeds, n, d, metric), then
/// per-table bucket records sorted by key bytes. Integers little-endian.
inline void save_index(const HybridIndex& index, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw format_error("cannot open index file for writing: " + path);

    const auto& p = index.params();
    detail::write_bytes(out, detail::kIndexMagic, sizeof(detail::kIndexMagic));
    detail::write_le<std::uint32_t>(out, detail::kIndexVersion);
    detail::write_le<std::uint8_t>(out, static_cast<std::uint8_t>(index.dataset().metric()));
    detail::write_le<std::uint8_t>(out, static_cast<std::uint8_t>(index.dataset().rep()));
    detail::write_le<std::uint64_t>(out, index.dataset().size());
    detail::write_le<std::uint64_t>(out, index.dataset().dim());
    detail::write_f64(out, p.r);
    detail::write_f64(out, p.delta);
    detail::write_le<std::uint64_t>(out, p.L);
    detail::write_le<std::uint64_t>(out, p.k);
    detail::write_le<std::uint8_t>(out, static_cast<std::uint8_t>(p.family.kind));
    detail::write_le<std::uint64_t>(out, p.family.d);
    detail::write_f64(out, p.family.w);
    detail::write_le<std::uint64_t>(out, p.family.rng_seed);
    detail::write_le<std::uint32_t>(out, p.sketch.m);
    detail::write_le<std::uint64_t>(out, p.sketch.hash_seed);
    detail::write_le<std::uint64_t>(out, p.hll_threshold);

    std::vector<const std::string*> keys;
    for (const auto& table : index.tables()) {
        keys.clear();
        keys.reserve(table.size());
        for (const auto& [key, bucket] : table) keys.push_back(&key);
        std::sort(keys.begin(), keys.end(),
                  [](const std::string* a, const std::string* b) { return *a < *b; });
        detail::write_le<std::uint64_t>(out, keys.size());
        for (const auto* key : keys) {
            const Bucket& bucket = table.at(*key);
            detail::write_le<std::uint64_t>(out, key->size());
            detail::write_bytes(out, key->data(), key->size());
            detail::write_le<std::uint64_t>(out, bucket.ids.size());
            for (PointId id : bucket.ids) detail::write_le<std::uint64_t>(out, id);
            detail::write_le<std::uint8_t>(out, bucket.sketch ? 1 : 0);
            if (bucket.sketch) bucket.sketch->serialize(out);
        }
    }
    if (!out) throw format_error("write failure on index file: " + path);
}

/// Reads an index written by save_index. The dataset must be the one the
/// index was built over (n, d, metric are checked against the header).
inline HybridIndex load_index(const std::string& path, const Dataset& data) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw format_error("cannot open index file: " + path);

    char magic[5];
    detail::read_bytes(in, magic, sizeof(magic));
    if (std::memcmp(magic, detail::kIndexMagic, sizeof(magic)) != 0) {
        throw format_error("bad index file magic");
    }
    if (detail::read_le<std::uint32_t>(in) != detail::kIndexVersion) {
        throw format_error("unsupported index file version");
    }

    auto metric = static_cast<Metric>(detail::read_le<std::uint8_t>(in));
    auto rep = static_cast<Rep>(detail::read_le<std::uint8_t>(in));
    auto n = detail::read_le<std::uint64_t>(in);
    auto d = detail::read_le<std::uint64_t>(in);
    if (metric != data.metric() || rep != data.rep() || n != data.size() || d != data.dim()) {
        throw format_error("index file does not match the supplied dataset");
    }

    IndexParams p;
    p.r = detail::read_f64(in);
    p.delta = detail::read_f64(in);
    p.L = static_cast<std::uint32_t>(detail::read_le<std::uint64_t>(in));
    p.k = static_cast<std::uint32_t>(detail::read_le<std::uint64_t>(in));
    p.family.kind = static_cast<FamilyKind>(detail::read_le<std::uint8_t>(in));
    p.family.d = static_cast<std::uint32_t>(detail::read_le<std::uint64_t>(in));
    p.family.w = detail::read_f64(in);
    p.family.rng_seed = detail::read_le<std::uint64_t>(in);
    p.sketch.m = detail::read_le<std::uint32_t>(in);
    p.sketch.hash_seed = detail::read_le<std::uint64_t>(in);
    p.hll_threshold = static_cast<std::uint32_t>(detail::read_le<std::uint64_t>(in));
    p.validate();

    HybridIndex index;
    index.params_ = p;
    index.dataset_ = &data;
    index.hashes_ = draw_composite_hashes(p.family, p.L, p.k);
    index.tables_.resize(p.L);
    for (auto& table : index.tables_) {
        auto bucket_count = detail::read_le<std::uint64_t>(in);
        table.reserve(bucket_count);
        for (std::uint64_t b = 0; b < bucket_count; b++) {
            auto key_len = detail::read_le<std::uint64_t>(in);
            std::string key(key_len, '\0');
            detail::read_bytes(in, key.data(), key_len);
            Bucket bucket;
            auto count = detail::read_le<std::uint64_t>(in);
            bucket.ids.reserve(count);
            for (std::uint64_t i = 0; i < count; i++) {
                auto id = detail::read_le<std::uint64_t>(in);
                if (id >= n) throw format_error("index file: point id out of range");
                bucket.ids.push_back(static_cast<PointId>(id));
            }
            if (detail::read_le<std::uint8_t>(in) != 0) {
                bucket.sketch = HllSketch::deserialize(in);
            }
            table.emplace(std::move(key), std::move(bucket));
        }
    }
    return index;
}

}  // namespace hlsh
