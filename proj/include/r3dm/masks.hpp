#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "r3dm/errors.hpp"
#include "r3dm/rng.hpp"

namespace r3dm {

enum class MaskKind { uniform, gaussian };

inline const char* mask_kind_name(MaskKind k) { return k == MaskKind::uniform ? "uniform" : "gaussian"; }

// Binary undersampling pattern, stored in centered-spectrum layout (DC bin at
// index N/2 on both axes). Patterns are column-wise: whole k-space columns
// are kept or dropped, and every row is identical.
struct Mask {
    std::size_t n = 0;
    MaskKind kind = MaskKind::uniform;
    double accel = 1.0;
    double center_frac = 0.0;
    std::uint64_t seed = 0;
    double gaussian_sd = 0.0;  // 0 for uniform masks
    std::string warning;       // set when the center band saturates the pattern
    std::vector<std::uint8_t> pattern;  // n*n row-major, entries 0/1

    std::uint8_t at(std::size_t i, std::size_t j) const { return pattern[i * n + j]; }
    std::size_t dc() const { return n / 2; }

    std::size_t sampled_columns() const {
        std::size_t count = 0;
        for (std::size_t j = 0; j < n; ++j) count += at(dc(), j);
        return count;
    }
};

// Restriction of the mask to the two DC lines.
struct MaskSlice {
    std::vector<double> m_ky;  // pattern[:, dc]
    std::vector<double> m_kx;  // pattern[dc, :]
};

namespace detail {

struct CenterBand {
    std::size_t start, width;
    bool contains(std::size_t j) const { return j >= start && j < start + width; }
};

inline CenterBand center_band(std::size_t n, double center_frac) {
    const std::size_t width = static_cast<std::size_t>(std::ceil(center_frac * static_cast<double>(n)));
    return {(n - width) / 2, width};
}

inline Mask make_mask_from_columns(std::size_t n, const std::vector<std::uint8_t>& cols) {
    Mask m;
    m.n = n;
    m.pattern.resize(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m.pattern[i * n + j] = cols[j];
    return m;
}

inline void validate_mask_args(std::size_t n, double accel, double center_frac) {
    if (n < 2) throw ConfigError("mask: need n >= 2");
    if (accel < 1.0) throw ConfigError("mask: acceleration factor must be >= 1");
    if (center_frac < 0.0 || center_frac > 1.0) throw ConfigError("mask: center fraction must be in [0,1]");
    if (center_frac * static_cast<double>(n) > static_cast<double>(n) / accel)
        throw ConfigError("mask: center band alone exceeds the sampling budget");
}

}  // namespace detail

// Column-wise mask: center band forced on, remaining columns kept i.i.d. with
// a flat probability chosen so the expected total is n/accel.
inline Mask gen_uniform_mask(std::size_t n, double accel, double center_frac, std::uint64_t seed) {
    detail::validate_mask_args(n, accel, center_frac);
    const auto band = detail::center_band(n, center_frac);
    const double budget = static_cast<double>(n) / accel;
    const double p = band.width >= n
                         ? 0.0
                         : (budget - static_cast<double>(band.width)) / static_cast<double>(n - band.width);

    Rng rng(seed);
    std::vector<std::uint8_t> cols(n, 0);
    for (std::size_t j = 0; j < n; ++j) {
        if (band.contains(j)) {
            cols[j] = 1;
        } else {
            cols[j] = rng.uniform() < p ? 1 : 0;
        }
    }

    Mask m = detail::make_mask_from_columns(n, cols);
    m.kind = MaskKind::uniform;
    m.accel = accel;
    m.center_frac = center_frac;
    m.seed = seed;
    if (band.width >= n) m.warning = "center band covers every column; pattern is all-ones";
    return m;
}

// Per-column keep probability for the Gaussian scheme: proportional to a
// Gaussian density centered on DC (sd = n/6), rescaled so the expected total
// is n/accel; center columns report 1. The scale is bisected because
// clipping probabilities at 1 makes the plain ratio undershoot the target
// when near-DC columns saturate.
inline std::vector<double> gaussian_mask_column_probs(std::size_t n, double accel, double center_frac) {
    detail::validate_mask_args(n, accel, center_frac);
    const auto band = detail::center_band(n, center_frac);
    const double sd = static_cast<double>(n) / 6.0;
    const double dc = static_cast<double>(n / 2);
    const double target = std::max(0.0, static_cast<double>(n) / accel - static_cast<double>(band.width));

    std::vector<double> weight(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        if (band.contains(j)) continue;
        const double d = static_cast<double>(j) - dc;
        weight[j] = std::exp(-d * d / (2.0 * sd * sd));
    }
    auto expected = [&](double k) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (!band.contains(j)) acc += std::min(1.0, k * weight[j]);
        return acc;
    };
    double k_hi = 1.0;
    while (expected(k_hi) < target && k_hi < 1e18) k_hi *= 2.0;
    double k_lo = 0.0;
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (k_lo + k_hi);
        (expected(mid) < target ? k_lo : k_hi) = mid;
    }
    const double k = 0.5 * (k_lo + k_hi);

    std::vector<double> probs(n, 1.0);
    for (std::size_t j = 0; j < n; ++j)
        if (!band.contains(j)) probs[j] = std::min(1.0, k * weight[j]);
    return probs;
}

inline Mask gen_gaussian_mask(std::size_t n, double accel, double center_frac, std::uint64_t seed) {
    const auto band = detail::center_band(n, center_frac);
    const std::vector<double> probs = gaussian_mask_column_probs(n, accel, center_frac);

    Rng rng(seed);
    std::vector<std::uint8_t> cols(n, 0);
    for (std::size_t j = 0; j < n; ++j) {
        if (band.contains(j)) {
            cols[j] = 1;
        } else {
            cols[j] = rng.uniform() < probs[j] ? 1 : 0;
        }
    }

    Mask m = detail::make_mask_from_columns(n, cols);
    m.kind = MaskKind::gaussian;
    m.accel = accel;
    m.center_frac = center_frac;
    m.seed = seed;
    m.gaussian_sd = static_cast<double>(n) / 6.0;
    if (band.width >= n) m.warning = "center band covers every column; pattern is all-ones";
    return m;
}

inline MaskSlice slice_mask(const Mask& m) {
    MaskSlice out;
    out.m_ky.resize(m.n);
    out.m_kx.resize(m.n);
    const std::size_t dc = m.dc();
    for (std::size_t i = 0; i < m.n; ++i) out.m_ky[i] = m.at(i, dc);
    for (std::size_t j = 0; j < m.n; ++j) out.m_kx[j] = m.at(dc, j);
    return out;
}

}  // namespace r3dm
