#pragma once

// Shared test utilities: independent numeric oracles (quadrature for the
// p-stable collision integral, chi-square critical values) and generators
// for point pairs at controlled distances.

#include <cmath>
#include <functional>
#include <vector>

#include "hlsh/dataset.hpp"
#include "hlsh/common.hpp"

namespace testutil {

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double sample_std(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double mu = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - mu) * (x - mu);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Adaptive Simpson quadrature; independent of any library numerics.
inline double simpson_step(const std::function<double(double)>& f, double a, double b, double fa,
                           double fb, double fm, double whole, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol) {
        return left + right + (left + right - whole) / 15.0;
    }
    return simpson_step(f, a, m, fa, fm, flm, left, tol / 2.0, depth - 1) +
           simpson_step(f, m, b, fm, fb, frm, right, tol / 2.0, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-10) {
    // Pre-split into panels: a single top-level Simpson pair can alias on
    // smooth integrands (identical coarse/fine sums while both are wrong),
    // which silences the adaptive error estimate.
    const int panels = 8;
    double h = (b - a) / panels;
    double total = 0.0;
    for (int i = 0; i < panels; i++) {
        double lo = a + i * h;
        double hi = i == panels - 1 ? b : lo + h;
        double mid = 0.5 * (lo + hi);
        double flo = f(lo), fhi = f(hi), fmid = f(mid);
        double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
        total += simpson_step(f, lo, hi, flo, fhi, fmid, whole, tol / panels, 44);
    }
    return total;
}

// Collision probability of a p-stable hash as the defining integral
// int_0^w (1/r) f_p(t/r) (1 - t/w) dt with the folded stable density.
inline double pstable_collision_integral(double w, double r, bool cauchy) {
    auto density = [cauchy](double x) {
        if (cauchy) return 2.0 / (M_PI * (1.0 + x * x));
        return 2.0 / std::sqrt(2.0 * M_PI) * std::exp(-0.5 * x * x);
    };
    return integrate([&](double t) { return (1.0 / r) * density(t / r) * (1.0 - t / w); }, 0.0, w,
                     1e-12);
}

// Wilson-Hilferty approximation of the chi-square quantile.
inline double chi2_critical(double df, double z) {
    double t = 2.0 / (9.0 * df);
    double u = 1.0 - t + z * std::sqrt(t);
    return df * u * u * u;
}

// ---- controlled-distance pair constructors --------------------------------

// Random bit vector pair at exact hamming distance h.
inline std::pair<hlsh::Point, hlsh::Point> hamming_pair(std::uint32_t d, std::uint32_t h,
                                                        hlsh::SplitMix64& rng) {
    std::size_t wpp = (d + 63) / 64;
    std::vector<std::uint64_t> a(wpp, 0);
    for (std::size_t w = 0; w < wpp; w++) {
        a[w] = rng.next_u64();
        if (w == wpp - 1 && d % 64) a[w] &= (1ull << (d % 64)) - 1;
    }
    std::vector<std::uint64_t> b = a;
    std::vector<std::uint8_t> flipped(d, 0);
    std::uint32_t done = 0;
    while (done < h) {
        auto bit = static_cast<std::uint32_t>(rng.next_below(d));
        if (flipped[bit]) continue;
        flipped[bit] = 1;
        b[bit / 64] ^= 1ull << (bit % 64);
        done++;
    }
    return {hlsh::Point::make_bits(0, d, std::move(a)), hlsh::Point::make_bits(1, d, std::move(b))};
}

inline std::vector<double> random_unit_vector(std::uint32_t d, hlsh::SplitMix64& rng) {
    std::vector<double> v(d);
    double norm = 0.0;
    do {
        norm = 0.0;
        for (auto& x : v) {
            x = rng.next_gaussian();
            norm += x * x;
        }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
    return v;
}

// Pair at exact cosine distance r = 1 - cos(theta): y is x rotated by theta
// within the plane spanned by x and a random orthogonal direction.
inline std::pair<hlsh::Point, hlsh::Point> cosine_pair(std::uint32_t d, double r,
                                                       hlsh::SplitMix64& rng) {
    double theta = std::acos(1.0 - r);
    auto x = random_unit_vector(d, rng);
    auto u = random_unit_vector(d, rng);
    double proj = 0.0;
    for (std::uint32_t i = 0; i < d; i++) proj += u[i] * x[i];
    double norm = 0.0;
    for (std::uint32_t i = 0; i < d; i++) {
        u[i] -= proj * x[i];
        norm += u[i] * u[i];
    }
    norm = std::sqrt(norm);
    std::vector<double> y(d);
    for (std::uint32_t i = 0; i < d; i++) {
        y[i] = std::cos(theta) * x[i] + std::sin(theta) * u[i] / norm;
    }
    return {hlsh::Point::make_dense(0, std::move(x)), hlsh::Point::make_dense(1, std::move(y))};
}

// Pair at exact l2 distance r.
inline std::pair<hlsh::Point, hlsh::Point> l2_pair(std::uint32_t d, double r,
                                                   hlsh::SplitMix64& rng) {
    std::vector<double> x(d);
    for (auto& v : x) v = rng.next_double() * 10.0;
    auto dir = random_unit_vector(d, rng);
    std::vector<double> y(d);
    for (std::uint32_t i = 0; i < d; i++) y[i] = x[i] + r * dir[i];
    return {hlsh::Point::make_dense(0, std::move(x)), hlsh::Point::make_dense(1, std::move(y))};
}

// Pair at exact l1 distance r: spread the offset over random coordinates
// with random signs.
inline std::pair<hlsh::Point, hlsh::Point> l1_pair(std::uint32_t d, double r,
                                                   hlsh::SplitMix64& rng) {
    std::vector<double> x(d);
    for (auto& v : x) v = rng.next_double() * 10.0;
    std::vector<double> weights(d);
    double total = 0.0;
    for (auto& w : weights) {
        w = rng.next_double();
        total += w;
    }
    std::vector<double> y = x;
    for (std::uint32_t i = 0; i < d; i++) {
        double step = r * weights[i] / total;
        y[i] += rng.next_u64() & 1 ? step : -step;
    }
    return {hlsh::Point::make_dense(0, std::move(x)), hlsh::Point::make_dense(1, std::move(y))};
}

}  // namespace testutil
