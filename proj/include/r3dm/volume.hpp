#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "r3dm/errors.hpp"
#include "r3dm/rng.hpp"

namespace r3dm {

using cdouble = std::complex<double>;

// Complex 3D grid of shape S x N x N, row-major (slice, row, col).
// Slices are square; S >= 1, N >= 2. Used for both image-space and k-space
// data; k-space is stored with the DC bin at index N/2 on both in-plane axes.
class Volume {
  public:
    Volume() = default;

    Volume(std::size_t slices, std::size_t n) : slices_(slices), n_(n), data_(slices * n * n) {
        if (slices < 1 || n < 2) throw InvalidInputError("Volume: need S >= 1 and N >= 2");
    }

    std::size_t slices() const { return slices_; }
    std::size_t n() const { return n_; }
    std::size_t size() const { return data_.size(); }

    cdouble& at(std::size_t s, std::size_t i, std::size_t j) { return data_[(s * n_ + i) * n_ + j]; }
    cdouble at(std::size_t s, std::size_t i, std::size_t j) const { return data_[(s * n_ + i) * n_ + j]; }

    cdouble& operator[](std::size_t k) { return data_[k]; }
    cdouble operator[](std::size_t k) const { return data_[k]; }

    cdouble* slice_ptr(std::size_t s) { return data_.data() + s * n_ * n_; }
    const cdouble* slice_ptr(std::size_t s) const { return data_.data() + s * n_ * n_; }

    std::vector<cdouble>& raw() { return data_; }
    const std::vector<cdouble>& raw() const { return data_; }

    bool same_shape(const Volume& other) const { return slices_ == other.slices_ && n_ == other.n_; }

    bool is_finite() const {
        for (const auto& z : data_)
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
        return true;
    }

  private:
    std::size_t slices_ = 0;
    std::size_t n_ = 0;
    std::vector<cdouble> data_;
};

// Aliases to keep signatures readable; layout is identical.
using ImageVolume = Volume;
using KSpaceVolume = Volume;

inline void require_finite(const Volume& v, const char* what) {
    if (!v.is_finite()) throw InvalidInputError(std::string(what) + ": input contains NaN/Inf");
}

inline void require_same_shape(const Volume& a, const Volume& b, const char* what) {
    if (!a.same_shape(b)) throw InvalidInputError(std::string(what) + ": shape mismatch");
}

inline double frobenius_norm(const Volume& v) {
    double acc = 0.0;
    for (const auto& z : v.raw()) acc += std::norm(z);
    return std::sqrt(acc);
}

inline double max_abs(const Volume& v) {
    double m = 0.0;
    for (const auto& z : v.raw()) m = std::max(m, std::abs(z));
    return m;
}

inline cdouble dot(const Volume& a, const Volume& b) {
    cdouble acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) acc += std::conj(a[k]) * b[k];
    return acc;
}

inline Volume operator+(const Volume& a, const Volume& b) {
    Volume out = a;
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += b[k];
    return out;
}

inline Volume operator-(const Volume& a, const Volume& b) {
    Volume out = a;
    for (std::size_t k = 0; k < out.size(); ++k) out[k] -= b[k];
    return out;
}

inline Volume operator*(cdouble c, const Volume& v) {
    Volume out = v;
    for (auto& z : out.raw()) z *= c;
    return out;
}

inline Volume& operator+=(Volume& a, const Volume& b) {
    for (std::size_t k = 0; k < a.size(); ++k) a[k] += b[k];
    return a;
}

inline Volume& operator-=(Volume& a, const Volume& b) {
    for (std::size_t k = 0; k < a.size(); ++k) a[k] -= b[k];
    return a;
}

// x / max|x|; the all-zero volume is returned unchanged.
inline Volume normalize(const Volume& v) {
    require_finite(v, "normalize");
    const double m = max_abs(v);
    if (m == 0.0) return v;
    return cdouble(1.0 / m) * v;
}

inline Volume real_part(const Volume& v) {
    Volume out = v;
    for (auto& z : out.raw()) z = cdouble(z.real(), 0.0);
    return out;
}

inline Volume magnitude(const Volume& v) {
    Volume out = v;
    for (auto& z : out.raw()) z = cdouble(std::abs(z), 0.0);
    return out;
}

inline Volume random_gaussian_volume(std::size_t slices, std::size_t n, Rng& rng, bool complex_entries = false) {
    Volume out(slices, n);
    for (auto& z : out.raw())
        z = complex_entries ? cdouble(rng.gaussian(), rng.gaussian()) : cdouble(rng.gaussian(), 0.0);
    return out;
}

}  // namespace r3dm
