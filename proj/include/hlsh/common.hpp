#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace hlsh {

/// Invalid arguments to an operation (mismatched representations, bad ranges).
class input_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Inconsistent or invalid configuration (parameters, sketch/family mismatches).
class config_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed serialized data (bad magic, truncation, version mismatch).
class format_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed text input; carries file/line context in the message.
class parse_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Stafford mix13, the splitmix64 output function. Bijective with full avalanche.
inline std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return x;
}

inline std::uint64_t fnv1a64(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < len; i++) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

/// Seeded deterministic generator used for every random choice in the library.
/// Plain splitmix64 stream; portable across platforms, unlike the standard
/// library distributions.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        return mix64(state_);
    }

    /// Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, bound).
    std::uint64_t next_below(std::uint64_t bound) {
        // Modulo bias is < 2^-40 for the bounds used here (dims, register counts).
        return next_u64() % bound;
    }

    /// Standard normal via Box-Muller on two uniforms.
    double next_gaussian() {
        double u1 = 1.0 - next_double();  // (0, 1]
        double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    /// Standard Cauchy via tan(pi*(u - 1/2)).
    double next_cauchy() {
        double u = next_double();
        return std::tan(M_PI * (u - 0.5));
    }

private:
    std::uint64_t state_;
};

inline std::uint64_t now_ns() {
    return static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(
            std::chrono::steady_clock::now().time_since_epoch())
            .count());
}

namespace detail {

// Little-endian stream primitives for the index/cache file formats.

inline void write_bytes(std::ostream& out, const void* p, std::size_t len) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(len));
}

inline void read_bytes(std::istream& in, void* p, std::size_t len) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(len));
    if (static_cast<std::size_t>(in.gcount()) != len) {
        throw format_error("unexpected end of stream");
    }
}

template <typename T>
void write_le(std::ostream& out, T value) {
    static_assert(std::is_integral_v<T>);
    unsigned char buf[sizeof(T)];
    auto u = static_cast<std::make_unsigned_t<T>>(value);
    for (std::size_t i = 0; i < sizeof(T); i++) {
        buf[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
    }
    write_bytes(out, buf, sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
    static_assert(std::is_integral_v<T>);
    unsigned char buf[sizeof(T)];
    read_bytes(in, buf, sizeof(T));
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); i++) {
        u |= static_cast<std::make_unsigned_t<T>>(buf[i]) << (8 * i);
    }
    return static_cast<T>(u);
}

inline void write_f64(std::ostream& out, double value) {
    std::uint64_t bits;
    std::memcpy(&bits, &value, sizeof(bits));
    write_le<std::uint64_t>(out, bits);
}

inline double read_f64(std::istream& in) {
    std::uint64_t bits = read_le<std::uint64_t>(in);
    double value;
    std::memcpy(&value, &bits, sizeof(value));
    return value;
}

}  // namespace detail

}  // namespace hlsh
