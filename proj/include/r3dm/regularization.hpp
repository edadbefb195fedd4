#pragma once

#include <cmath>

#include "r3dm/errors.hpp"
#include "r3dm/volume.hpp"

namespace r3dm {

struct RegWeights {
    double alpha = 0.0;     // l1 scale
    bool tv_on = true;
    double tv_weight = 1.0;

    double effective_tv() const { return tv_on ? tv_weight : 0.0; }
};

inline double l1_norm(const Volume& vol) {
    require_finite(vol, "l1_norm");
    double acc = 0.0;
    for (const auto& z : vol.raw()) acc += std::abs(z);
    return acc;
}

// Elementwise complex shrinkage: modulus reduced by alpha, phase kept,
// entries with |x| <= alpha go to zero. Exact proximal operator of
// alpha*||.||_1.
inline Volume soft_threshold(const Volume& vol, double alpha) {
    if (alpha < 0.0) throw ConfigError("soft_threshold: alpha must be >= 0");
    Volume out = vol;
    for (auto& z : out.raw()) {
        const double m = std::abs(z);
        z = m > alpha ? z * ((m - alpha) / m) : cdouble(0.0);
    }
    return out;
}

// Sum of squared adjacent-pixel differences within each slice, both in-plane
// axes. No cross-slice terms.
inline double atv_value(const Volume& vol) {
    require_finite(vol, "atv_value");
    const std::size_t S = vol.slices(), N = vol.n();
    double acc = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
        const cdouble* p = vol.slice_ptr(s);
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j + 1 < N; ++j) acc += std::norm(p[i * N + j + 1] - p[i * N + j]);
        for (std::size_t i = 0; i + 1 < N; ++i)
            for (std::size_t j = 0; j < N; ++j) acc += std::norm(p[(i + 1) * N + j] - p[i * N + j]);
    }
    return acc;
}

// Gradient of atv_value in the convention where the real/imaginary parts of
// the result are the partial derivatives w.r.t. the real/imaginary parts of
// the input (so x - t*grad decreases the value for small t). Linear in vol;
// equals twice the normal operator of the first-difference map.
inline Volume atv_gradient(const Volume& vol) {
    require_finite(vol, "atv_gradient");
    const std::size_t S = vol.slices(), N = vol.n();
    Volume out(S, N);
    for (std::size_t s = 0; s < S; ++s) {
        const cdouble* p = vol.slice_ptr(s);
        cdouble* g = out.slice_ptr(s);
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j + 1 < N; ++j) {
                const cdouble d = p[i * N + j + 1] - p[i * N + j];
                g[i * N + j + 1] += 2.0 * d;
                g[i * N + j] -= 2.0 * d;
            }
        for (std::size_t i = 0; i + 1 < N; ++i)
            for (std::size_t j = 0; j < N; ++j) {
                const cdouble d = p[(i + 1) * N + j] - p[i * N + j];
                g[(i + 1) * N + j] += 2.0 * d;
                g[i * N + j] -= 2.0 * d;
            }
    }
    return out;
}

}  // namespace r3dm
