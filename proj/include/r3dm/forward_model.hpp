#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "r3dm/fft.hpp"
#include "r3dm/masks.hpp"
#include "r3dm/volume.hpp"

namespace r3dm {

// S stacked length-N complex vectors (one per slice).
struct SliceVectors {
    std::size_t slices = 0;
    std::size_t n = 0;
    std::vector<cdouble> data;

    SliceVectors() = default;
    SliceVectors(std::size_t S, std::size_t N) : slices(S), n(N), data(S * N) {}

    cdouble& at(std::size_t s, std::size_t i) { return data[s * n + i]; }
    cdouble at(std::size_t s, std::size_t i) const { return data[s * n + i]; }

    std::vector<cdouble> row(std::size_t s) const {
        return {data.begin() + static_cast<std::ptrdiff_t>(s * n),
                data.begin() + static_cast<std::ptrdiff_t>((s + 1) * n)};
    }
};

// Simulated acquisition: masked k-space plus the two DC-line measurement
// vectors extracted from it, so the optimization constraints see exactly what
// was recorded (noise included).
struct UndersampledMeasurement {
    KSpaceVolume kspace;   // zero wherever the mask is zero
    Mask mask;
    SliceVectors proj_ky;  // kspace[:, :, dc]
    SliceVectors proj_kx;  // kspace[:, dc, :]
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
};

// Sum over columns (x-direction): result indexed by row i.
inline std::vector<cdouble> project_y(const Volume& vol, std::size_t s) {
    const std::size_t N = vol.n();
    std::vector<cdouble> out(N, 0.0);
    const cdouble* p = vol.slice_ptr(s);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) out[i] += p[i * N + j];
    return out;
}

// Sum over rows (y-direction): result indexed by column j.
inline std::vector<cdouble> project_x(const Volume& vol, std::size_t s) {
    const std::size_t N = vol.n();
    std::vector<cdouble> out(N, 0.0);
    const cdouble* p = vol.slice_ptr(s);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) out[j] += p[i * N + j];
    return out;
}

namespace detail {

inline void extract_projections(UndersampledMeasurement& meas) {
    const std::size_t S = meas.kspace.slices(), N = meas.kspace.n(), dc = meas.mask.dc();
    meas.proj_ky = SliceVectors(S, N);
    meas.proj_kx = SliceVectors(S, N);
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t i = 0; i < N; ++i) meas.proj_ky.at(s, i) = meas.kspace.at(s, i, dc);
        for (std::size_t j = 0; j < N; ++j) meas.proj_kx.at(s, j) = meas.kspace.at(s, dc, j);
    }
}

}  // namespace detail

// Y_hat = M o (F2(X) + noise). Complex Gaussian noise with E|n|^2 =
// noise_sigma^2 is drawn for every bin (independently of the mask) and only
// survives on sampled entries.
inline UndersampledMeasurement acquire(const ImageVolume& gt, const Mask& mask, double noise_sigma,
                                       std::uint64_t seed) {
    require_finite(gt, "acquire");
    if (gt.n() != mask.n) throw InvalidInputError("acquire: volume/mask shape mismatch");
    if (noise_sigma < 0.0) throw ConfigError("acquire: noise sigma must be >= 0");

    UndersampledMeasurement meas;
    meas.mask = mask;
    meas.noise_sigma = noise_sigma;
    meas.seed = seed;
    meas.kspace = fft2_slices(gt);

    const std::size_t S = gt.slices(), N = gt.n();
    if (noise_sigma > 0.0) {
        Rng rng(seed);
        for (auto& z : meas.kspace.raw()) z += noise_sigma * rng.complex_gaussian();
    }
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j)
                if (!mask.at(i, j)) meas.kspace.at(s, i, j) = 0.0;

    detail::extract_projections(meas);
    return meas;
}

inline ImageVolume zero_filled(const UndersampledMeasurement& meas) { return ifft2_slices(meas.kspace); }

// The DC column of the unitary centered 2D spectrum equals the unitary 1D
// spectrum of the row sums divided by sqrt(N); slice_scale is that constant,
// folded into every comparison between projected image data and the stored
// k-space lines.
inline double slice_scale(std::size_t n) { return 1.0 / std::sqrt(static_cast<double>(n)); }

// m_ky o F1(P_y(X_s)) / sqrt(N), the model-side quantity compared against
// proj_ky (project_axis = 'y'), and the x analogue.
inline std::vector<cdouble> slice_predict_y(const Volume& vol, const MaskSlice& ms, std::size_t s) {
    std::vector<cdouble> f = fft1(project_y(vol, s));
    const double c = slice_scale(vol.n());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] *= ms.m_ky[i] * c;
    return f;
}

inline std::vector<cdouble> slice_predict_x(const Volume& vol, const MaskSlice& ms, std::size_t s) {
    std::vector<cdouble> f = fft1(project_x(vol, s));
    const double c = slice_scale(vol.n());
    for (std::size_t j = 0; j < f.size(); ++j) f[j] *= ms.m_kx[j] * c;
    return f;
}

// Squared residuals of the two projected-measurement constraints, summed over
// slices. Zero (to rounding) whenever vol reproduces the measurement.
inline std::pair<double, double> fourier_slice_residual(const ImageVolume& vol,
                                                        const UndersampledMeasurement& meas) {
    require_same_shape(vol, meas.kspace, "fourier_slice_residual");
    const MaskSlice ms = slice_mask(meas.mask);
    double r_ky = 0.0, r_kx = 0.0;
    for (std::size_t s = 0; s < vol.slices(); ++s) {
        const auto py = slice_predict_y(vol, ms, s);
        const auto px = slice_predict_x(vol, ms, s);
        for (std::size_t k = 0; k < vol.n(); ++k) {
            r_ky += std::norm(meas.proj_ky.at(s, k) - py[k]);
            r_kx += std::norm(meas.proj_kx.at(s, k) - px[k]);
        }
    }
    return {r_ky, r_kx};
}

}  // namespace r3dm
