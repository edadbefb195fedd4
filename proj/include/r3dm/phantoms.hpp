#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>

#include "r3dm/errors.hpp"
#include "r3dm/volume.hpp"

namespace r3dm {

enum class PhantomKind { tubes, ellipsoids, gaussian_field };

struct PhantomSpec {
    PhantomKind kind = PhantomKind::tubes;
    std::size_t slices = 8;
    std::size_t n = 64;
    std::uint64_t seed = 0;

    // tubes
    int tube_count = 3;
    double tube_radius = 0.65;
    double tube_smoothness = 0.9;  // direction correlation of the walk

    // ellipsoids
    int ellipsoid_count = 3;

    // gaussian field
    double field_mean = 0.5;
    double field_sd = 0.1;

    void validate() const {
        if (slices < 1 || n < 8) throw ConfigError("phantom: need S >= 1 and N >= 8");
        if (tube_count < 0 || ellipsoid_count < 1) throw ConfigError("phantom: bad shape count");
        if (tube_radius <= 0.0 || field_sd < 0.0) throw ConfigError("phantom: parameters must be positive");
    }
};

// Smooth random-walk tubes with Gaussian cross-section; sparse, continuous
// along all three axes. Values in [0,1] after peak normalization.
inline ImageVolume gen_tubes(const PhantomSpec& spec) {
    spec.validate();
    const std::size_t S = spec.slices, N = spec.n;
    Volume vol(S, N);
    if (spec.tube_count == 0) return vol;

    Rng rng(spec.seed);
    const double r = spec.tube_radius;
    const double cutoff = 3.0 * r;
    const double corr = spec.tube_smoothness;

    auto deposit = [&](const std::array<double, 3>& p) {
        const int s_lo = std::max(0, static_cast<int>(std::floor(p[0] - cutoff)));
        const int s_hi = std::min(static_cast<int>(S) - 1, static_cast<int>(std::ceil(p[0] + cutoff)));
        const int i_lo = std::max(0, static_cast<int>(std::floor(p[1] - cutoff)));
        const int i_hi = std::min(static_cast<int>(N) - 1, static_cast<int>(std::ceil(p[1] + cutoff)));
        const int j_lo = std::max(0, static_cast<int>(std::floor(p[2] - cutoff)));
        const int j_hi = std::min(static_cast<int>(N) - 1, static_cast<int>(std::ceil(p[2] + cutoff)));
        for (int s = s_lo; s <= s_hi; ++s)
            for (int i = i_lo; i <= i_hi; ++i)
                for (int j = j_lo; j <= j_hi; ++j) {
                    const double ds = s - p[0], di = i - p[1], dj = j - p[2];
                    const double d2 = ds * ds + di * di + dj * dj;
                    if (d2 > cutoff * cutoff) continue;
                    vol.at(static_cast<std::size_t>(s), static_cast<std::size_t>(i),
                           static_cast<std::size_t>(j)) += std::exp(-d2 / (2.0 * r * r));
                }
    };

    const int steps = 3 * static_cast<int>(std::max(S, N));
    for (int tube = 0; tube < spec.tube_count; ++tube) {
        std::array<double, 3> pos = {rng.uniform() * static_cast<double>(S),
                                     rng.uniform() * static_cast<double>(N),
                                     rng.uniform() * static_cast<double>(N)};
        std::array<double, 3> dir = {rng.gaussian(), rng.gaussian(), rng.gaussian()};
        double dn = std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
        for (auto& d : dir) d /= dn;

        for (int step = 0; step < steps; ++step) {
            deposit(pos);
            std::array<double, 3> kick = {rng.gaussian(), rng.gaussian(), rng.gaussian()};
            double kn = std::sqrt(kick[0] * kick[0] + kick[1] * kick[1] + kick[2] * kick[2]);
            for (std::size_t a = 0; a < 3; ++a) dir[a] = corr * dir[a] + (1.0 - corr) * kick[a] / kn;
            dn = std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
            for (auto& d : dir) d /= dn;

            const std::array<double, 3> extent = {static_cast<double>(S), static_cast<double>(N),
                                                  static_cast<double>(N)};
            for (std::size_t a = 0; a < 3; ++a) {
                pos[a] += 0.5 * dir[a];
                if (pos[a] < 0.0) {  // reflect to stay inside the box
                    pos[a] = -pos[a];
                    dir[a] = -dir[a];
                }
                if (pos[a] > extent[a] - 1.0) {
                    pos[a] = 2.0 * (extent[a] - 1.0) - pos[a];
                    dir[a] = -dir[a];
                }
            }
        }
    }

    return normalize(vol);
}

// Concentric axis-aligned ellipsoids with stacked intensities, clipped to
// [0,1]. A single ellipsoid degenerates to a centered ball.
inline ImageVolume gen_ellipsoids(const PhantomSpec& spec) {
    spec.validate();
    const std::size_t S = spec.slices, N = spec.n;
    Volume vol(S, N);
    Rng rng(spec.seed);

    const double cs = (static_cast<double>(S) - 1.0) / 2.0;
    const double cn = (static_cast<double>(N) - 1.0) / 2.0;

    double as = 0.42 * static_cast<double>(S);
    double an = 0.42 * static_cast<double>(N);
    for (int k = 0; k < spec.ellipsoid_count; ++k) {
        const double js = spec.ellipsoid_count == 1 ? 1.0 : 0.8 + 0.2 * rng.uniform();
        const double ji = spec.ellipsoid_count == 1 ? 1.0 : 0.8 + 0.2 * rng.uniform();
        const double jj = spec.ellipsoid_count == 1 ? 1.0 : 0.8 + 0.2 * rng.uniform();
        const double rs = as * js, ri = an * ji, rj = an * jj;
        const double gain = 0.25 + 0.25 * rng.uniform();
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t i = 0; i < N; ++i)
                for (std::size_t j = 0; j < N; ++j) {
                    const double us = (static_cast<double>(s) - cs) / rs;
                    const double ui = (static_cast<double>(i) - cn) / ri;
                    const double uj = (static_cast<double>(j) - cn) / rj;
                    if (us * us + ui * ui + uj * uj <= 1.0) {
                        double v = vol.at(s, i, j).real() + gain;
                        vol.at(s, i, j) = std::min(1.0, v);
                    }
                }
        as *= 0.62;
        an *= 0.62;
    }
    return vol;
}

// Elementwise draw from N(mean, sd^2), real-valued.
inline ImageVolume gen_gaussian_field(const PhantomSpec& spec) {
    spec.validate();
    Volume vol(spec.slices, spec.n);
    Rng rng(spec.seed);
    for (auto& z : vol.raw()) z = cdouble(spec.field_mean + spec.field_sd * rng.gaussian(), 0.0);
    return vol;
}

inline ImageVolume gen_phantom(const PhantomSpec& spec) {
    switch (spec.kind) {
        case PhantomKind::tubes:
            return gen_tubes(spec);
        case PhantomKind::ellipsoids:
            return gen_ellipsoids(spec);
        case PhantomKind::gaussian_field:
            return gen_gaussian_field(spec);
    }
    throw ConfigError("phantom: unknown kind");
}

}  // namespace r3dm
