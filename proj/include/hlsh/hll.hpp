#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <utility>
#include <vector>

#include "hlsh/common.hpp"

namespace hlsh {

/// Register count and hash seed shared by every sketch of one index.
struct SketchConfig {
    std::uint32_t m = 128;
    std::uint64_t hash_seed = 0;

    void validate() const {
        if (m < 16 || !std::has_single_bit(m)) {
            throw config_error("sketch: m must be a power of two >= 16");
        }
    }

    std::uint32_t index_bits() const { return static_cast<std::uint32_t>(std::countr_zero(m)); }
};

/// (register index, update rank) for one element id.
///
/// The element id is avalanched with a seeded 64-bit mix; the low log2(m)
/// bits select the register and the rank is the leading-zero count of the
/// remaining bits plus one, so rank ~ Geometric(1/2) under uniform hashing.
inline std::pair<std::uint32_t, std::uint8_t> hll_position_rank(std::uint64_t element_id,
                                                                const SketchConfig& config) {
    std::uint64_t h = mix64(element_id + config.hash_seed);
    std::uint32_t b = config.index_bits();
    auto reg = static_cast<std::uint32_t>(h & (config.m - 1));
    std::uint64_t rest = h >> b;
    std::uint32_t width = 64 - b;
    std::uint32_t lz = rest == 0 ? width : static_cast<std::uint32_t>(std::countl_zero(rest)) - b;
    return {reg, static_cast<std::uint8_t>(lz + 1)};
}

/// Mergeable HyperLogLog cardinality sketch.
///
/// Registers hold the max update rank seen per position; merging is the
/// register-wise max, so sketch(A) merged with sketch(B) is bit-identical
/// to the sketch of the union stream.
class HllSketch {
public:
    HllSketch() = default;

    explicit HllSketch(const SketchConfig& config) : config_(config) {
        config.validate();
        registers_.assign(config.m, 0);
    }

    const SketchConfig& config() const { return config_; }
    std::uint32_t m() const { return config_.m; }
    const std::vector<std::uint8_t>& registers() const { return registers_; }

    void clear() { std::fill(registers_.begin(), registers_.end(), 0); }

    void insert(std::uint64_t element_id) {
        auto [reg, rank] = hll_position_rank(element_id, config_);
        if (rank > registers_[reg]) registers_[reg] = rank;
    }

    /// Register-wise max of another sketch built with the same config.
    void merge(const HllSketch& other) {
        if (config_.m != other.config_.m || config_.hash_seed != other.config_.hash_seed) {
            throw config_error("hll merge: sketch configurations differ");
        }
        for (std::uint32_t j = 0; j < config_.m; j++) {
            registers_[j] = std::max(registers_[j], other.registers_[j]);
        }
    }

    /// Bias-corrected harmonic-mean cardinality estimate with the standard
    /// small-range (linear counting) and large-range corrections.
    double estimate() const {
        const std::uint32_t m = config_.m;
        double sum = 0.0;
        std::uint32_t zeros = 0;
        for (std::uint32_t j = 0; j < m; j++) {
            sum += detail_pow2_neg(registers_[j]);
            if (registers_[j] == 0) zeros++;
        }
        double e = alpha(m) * static_cast<double>(m) * static_cast<double>(m) / sum;
        if (e <= 2.5 * m && zeros > 0) {
            return static_cast<double>(m) * std::log(static_cast<double>(m) / zeros);
        }
        constexpr double two32 = 4294967296.0;
        if (e > two32 / 30.0) {
            return -two32 * std::log(1.0 - e / two32);
        }
        return e;
    }

    bool operator==(const HllSketch& other) const {
        return config_.m == other.config_.m && config_.hash_seed == other.config_.hash_seed &&
               registers_ == other.registers_;
    }

    /// Wire form: m (u32), seed (u64), then m register bytes.
    void serialize(std::ostream& out) const {
        detail::write_le<std::uint32_t>(out, config_.m);
        detail::write_le<std::uint64_t>(out, config_.hash_seed);
        detail::write_bytes(out, registers_.data(), registers_.size());
    }

    static HllSketch deserialize(std::istream& in) {
        SketchConfig config;
        config.m = detail::read_le<std::uint32_t>(in);
        config.hash_seed = detail::read_le<std::uint64_t>(in);
        if (config.m < 16 || !std::has_single_bit(config.m)) {
            throw format_error("hll: invalid register count in stream");
        }
        HllSketch s(config);
        detail::read_bytes(in, s.registers_.data(), s.registers_.size());
        for (auto r : s.registers_) {
            if (r > 64) throw format_error("hll: register value out of range");
        }
        return s;
    }

    std::size_t serialized_bytes() const { return 4 + 8 + registers_.size(); }

private:
    static double alpha(std::uint32_t m) {
        switch (m) {
            case 16: return 0.673;
            case 32: return 0.697;
            case 64: return 0.709;
            default: return 0.7213 / (1.0 + 1.079 / static_cast<double>(m));
        }
    }

    static double detail_pow2_neg(std::uint8_t r) {
        static const auto table = [] {
            std::vector<double> t(65);
            for (int j = 0; j <= 64; j++) t[static_cast<std::size_t>(j)] = std::ldexp(1.0, -j);
            return t;
        }();
        return table[r];
    }

    SketchConfig config_;
    std::vector<std::uint8_t> registers_;
};

inline HllSketch hll_merge(const HllSketch& a, const HllSketch& b) {
    HllSketch out = a;
    out.merge(b);
    return out;
}

}  // namespace hlsh
