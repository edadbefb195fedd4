#pragma once

#include <fftw3.h>

#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "r3dm/volume.hpp"

namespace r3dm {

// Unitary, centered Fourier transforms.
//
// Conventions used throughout:
//  - scaling 1/sqrt(N) per transformed dimension (Parseval holds exactly);
//  - image-space indexing is plain (origin at index 0);
//  - spectra are stored centered: the DC bin sits at index N/2 on every
//    transformed axis, i.e. outputs are fftshift-ed and inverse transforms
//    ifftshift their input first.
//
// Under this convention the k_x = 0 column of a slice's 2D spectrum equals
// (1/sqrt(N)) times the 1D spectrum of the slice's row sums; the forward
// model folds that constant where the projected measurements are compared.

inline int& fft_thread_count() {
    static int count = 1;
    return count;
}

namespace detail {

inline std::mutex& fftw_plan_mutex() {
    static std::mutex m;
    return m;
}

struct PlanGuard {
    fftw_plan plan = nullptr;
    ~PlanGuard() {
        if (plan) {
            std::lock_guard<std::mutex> lock(fftw_plan_mutex());
            fftw_destroy_plan(plan);
        }
    }
};

// Plans are created once per call site with FFTW_UNALIGNED so the new-array
// execute interface accepts arbitrary buffers; scratch arrays only need to
// exist while planning.
inline fftw_plan make_plan_2d(int n, int sign) {
    std::vector<cdouble> a(static_cast<std::size_t>(n) * n), b(a.size());
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    return fftw_plan_dft_2d(n, n, reinterpret_cast<fftw_complex*>(a.data()),
                            reinterpret_cast<fftw_complex*>(b.data()), sign,
                            FFTW_ESTIMATE | FFTW_UNALIGNED);
}

inline fftw_plan make_plan_1d(int n, int sign) {
    std::vector<cdouble> a(static_cast<std::size_t>(n)), b(a.size());
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    return fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(a.data()),
                            reinterpret_cast<fftw_complex*>(b.data()), sign,
                            FFTW_ESTIMATE | FFTW_UNALIGNED);
}

// fftshift source index: out[k] = in[shift_src(k)]
inline std::size_t shift_src(std::size_t k, std::size_t n) { return (k + n - n / 2) % n; }
// ifftshift source index
inline std::size_t unshift_src(std::size_t k, std::size_t n) { return (k + n / 2) % n; }

inline void for_each_slice(std::size_t slices, const std::function<void(std::size_t)>& body) {
    const int threads = fft_thread_count();
    if (threads <= 1 || slices <= 1) {
        for (std::size_t s = 0; s < slices; ++s) body(s);
        return;
    }
    std::vector<std::thread> pool;
    std::size_t per = (slices + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
        std::size_t lo = w * per, hi = std::min(slices, lo + per);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            for (std::size_t s = lo; s < hi; ++s) body(s);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace detail

inline std::vector<cdouble> fftshift(const std::vector<cdouble>& v) {
    const std::size_t n = v.size();
    std::vector<cdouble> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = v[detail::shift_src(k, n)];
    return out;
}

inline std::vector<cdouble> ifftshift(const std::vector<cdouble>& v) {
    const std::size_t n = v.size();
    std::vector<cdouble> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = v[detail::unshift_src(k, n)];
    return out;
}

// Per-slice unitary 2D DFT, output centered.
inline KSpaceVolume fft2_slices(const ImageVolume& vol) {
    require_finite(vol, "fft2_slices");
    const std::size_t S = vol.slices(), N = vol.n();
    KSpaceVolume out(S, N);
    detail::PlanGuard guard{detail::make_plan_2d(static_cast<int>(N), FFTW_FORWARD)};
    const double scale = 1.0 / static_cast<double>(N);

    detail::for_each_slice(S, [&](std::size_t s) {
        std::vector<cdouble> in(vol.slice_ptr(s), vol.slice_ptr(s) + N * N);
        std::vector<cdouble> sp(N * N);
        fftw_execute_dft(guard.plan, reinterpret_cast<fftw_complex*>(in.data()),
                         reinterpret_cast<fftw_complex*>(sp.data()));
        cdouble* dst = out.slice_ptr(s);
        for (std::size_t i = 0; i < N; ++i) {
            const std::size_t si = detail::shift_src(i, N);
            for (std::size_t j = 0; j < N; ++j)
                dst[i * N + j] = sp[si * N + detail::shift_src(j, N)] * scale;
        }
    });
    return out;
}

// Exact inverse of fft2_slices.
inline ImageVolume ifft2_slices(const KSpaceVolume& ks) {
    require_finite(ks, "ifft2_slices");
    const std::size_t S = ks.slices(), N = ks.n();
    ImageVolume out(S, N);
    detail::PlanGuard guard{detail::make_plan_2d(static_cast<int>(N), FFTW_BACKWARD)};
    const double scale = 1.0 / static_cast<double>(N);

    detail::for_each_slice(S, [&](std::size_t s) {
        std::vector<cdouble> in(N * N);
        const cdouble* src = ks.slice_ptr(s);
        for (std::size_t i = 0; i < N; ++i) {
            const std::size_t ui = detail::unshift_src(i, N);
            for (std::size_t j = 0; j < N; ++j)
                in[i * N + j] = src[ui * N + detail::unshift_src(j, N)];
        }
        std::vector<cdouble> im(N * N);
        fftw_execute_dft(guard.plan, reinterpret_cast<fftw_complex*>(in.data()),
                         reinterpret_cast<fftw_complex*>(im.data()));
        cdouble* dst = out.slice_ptr(s);
        for (std::size_t k = 0; k < N * N; ++k) dst[k] = im[k] * scale;
    });
    return out;
}

// Unitary 1D DFT, output centered.
inline std::vector<cdouble> fft1(const std::vector<cdouble>& x) {
    const std::size_t n = x.size();
    for (const auto& z : x)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
            throw InvalidInputError("fft1: input contains NaN/Inf");
    detail::PlanGuard guard{detail::make_plan_1d(static_cast<int>(n), FFTW_FORWARD)};
    std::vector<cdouble> in = x, sp(n);
    fftw_execute_dft(guard.plan, reinterpret_cast<fftw_complex*>(in.data()),
                     reinterpret_cast<fftw_complex*>(sp.data()));
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    std::vector<cdouble> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = sp[detail::shift_src(k, n)] * scale;
    return out;
}

inline std::vector<cdouble> ifft1(const std::vector<cdouble>& y) {
    const std::size_t n = y.size();
    for (const auto& z : y)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
            throw InvalidInputError("ifft1: input contains NaN/Inf");
    detail::PlanGuard guard{detail::make_plan_1d(static_cast<int>(n), FFTW_BACKWARD)};
    std::vector<cdouble> in(n), im(n);
    for (std::size_t k = 0; k < n; ++k) in[k] = y[detail::unshift_src(k, n)];
    fftw_execute_dft(guard.plan, reinterpret_cast<fftw_complex*>(in.data()),
                     reinterpret_cast<fftw_complex*>(im.data()));
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    std::vector<cdouble> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = im[k] * scale;
    return out;
}

// Orthonormal 2D DCT-II of an n x n real array (and its inverse). Used by the
// plug-in denoiser; Parseval holds, round-trip is exact to machine precision.
inline std::vector<double> dct2_ortho(const std::vector<double>& x, std::size_t n) {
    std::vector<double> in = x, out(n * n);
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
        plan = fftw_plan_r2r_2d(static_cast<int>(n), static_cast<int>(n), in.data(), out.data(),
                                FFTW_REDFT10, FFTW_REDFT10, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
        fftw_destroy_plan(plan);
    }
    const double s0 = std::sqrt(1.0 / (4.0 * static_cast<double>(n)));
    const double sk = std::sqrt(1.0 / (2.0 * static_cast<double>(n)));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out[i * n + j] *= (i == 0 ? s0 : sk) * (j == 0 ? s0 : sk);
    return out;
}

inline std::vector<double> idct2_ortho(const std::vector<double>& c, std::size_t n) {
    std::vector<double> in = c, out(n * n);
    const double s0 = std::sqrt(1.0 / (4.0 * static_cast<double>(n)));
    const double sk = std::sqrt(1.0 / (2.0 * static_cast<double>(n)));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            in[i * n + j] /= (i == 0 ? s0 : sk) * (j == 0 ? s0 : sk);
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
        plan = fftw_plan_r2r_2d(static_cast<int>(n), static_cast<int>(n), in.data(), out.data(),
                                FFTW_REDFT01, FFTW_REDFT01, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
        fftw_destroy_plan(plan);
    }
    const double scale = 1.0 / (4.0 * static_cast<double>(n) * static_cast<double>(n));
    for (auto& v : out) v *= scale;
    return out;
}

}  // namespace r3dm
