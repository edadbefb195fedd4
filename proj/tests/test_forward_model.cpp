#include <catch2/catch_amalgamated.hpp>

#include "r3dm/forward_model.hpp"
#include "support/oracles.hpp"

using namespace r3dm;

namespace {

Volume random_complex(std::size_t S, std::size_t N, std::uint64_t seed) {
    Rng rng(seed);
    return random_gaussian_volume(S, N, rng, true);
}

}  // namespace

TEST_CASE("acquire with identity mask and no noise is the plain spectrum") {
    const Volume gt = random_complex(2, 8, 1);
    const Mask full = gen_uniform_mask(8, 1.0, 0.0, 0);
    const auto meas = acquire(gt, full, 0.0, 0);
    const auto direct = fft2_slices(gt);
    CHECK(frobenius_norm(meas.kspace - direct) == 0.0);
}

TEST_CASE("acquire zeroes unsampled bins and keeps projections consistent") {
    const Volume gt = random_complex(3, 16, 2);
    const Mask mask = gen_uniform_mask(16, 2.0, 0.2, 3);
    const auto meas = acquire(gt, mask, 0.1, 9);

    for (std::size_t s = 0; s < 3; ++s)
        for (std::size_t i = 0; i < 16; ++i)
            for (std::size_t j = 0; j < 16; ++j)
                if (!mask.at(i, j)) CHECK(std::abs(meas.kspace.at(s, i, j)) == 0.0);

    const std::size_t dc = mask.dc();
    for (std::size_t s = 0; s < 3; ++s)
        for (std::size_t k = 0; k < 16; ++k) {
            CHECK(meas.proj_ky.at(s, k) == meas.kspace.at(s, k, dc));
            CHECK(meas.proj_kx.at(s, k) == meas.kspace.at(s, dc, k));
        }
}

TEST_CASE("acquire of a zero volume is zero") {
    const Volume gt(2, 8);
    const auto meas = acquire(gt, gen_uniform_mask(8, 2.0, 0.25, 1), 0.0, 0);
    CHECK(frobenius_norm(meas.kspace) == 0.0);
}

TEST_CASE("acquire is reproducible bit-for-bit under a fixed seed") {
    const Volume gt = random_complex(2, 16, 3);
    const Mask mask = gen_gaussian_mask(16, 2.0, 0.2, 4);
    const auto a = acquire(gt, mask, 0.3, 1234);
    const auto b = acquire(gt, mask, 0.3, 1234);
    for (std::size_t k = 0; k < a.kspace.size(); ++k) {
        CHECK(a.kspace[k].real() == b.kspace[k].real());
        CHECK(a.kspace[k].imag() == b.kspace[k].imag());
    }
    const auto c = acquire(gt, mask, 0.3, 1235);
    CHECK(frobenius_norm(a.kspace - c.kspace) > 0.0);
}

TEST_CASE("acquire validates inputs") {
    const Volume gt(2, 8);
    const Mask mask = gen_uniform_mask(16, 2.0, 0.2, 0);
    CHECK_THROWS_AS(acquire(gt, mask, 0.0, 0), InvalidInputError);
    CHECK_THROWS_AS(acquire(gt, gen_uniform_mask(8, 1.0, 0.0, 0), -1.0, 0), ConfigError);
}

TEST_CASE("zero_filled inverts a fully sampled noiseless acquisition") {
    const Volume gt = random_complex(2, 16, 5);
    const auto meas = acquire(gt, gen_uniform_mask(16, 1.0, 0.0, 0), 0.0, 0);
    CHECK(frobenius_norm(zero_filled(meas) - gt) < 1e-10 * frobenius_norm(gt));
}

TEST_CASE("zero_filled of a half-column mask matches the dense DFT oracle") {
    // constant volume, every second column sampled: compare against the
    // dense inverse transform of the masked dense spectrum
    const std::size_t N = 8;
    Volume gt(1, N);
    for (auto& z : gt.raw()) z = 1.0;

    Mask mask;
    mask.n = N;
    mask.pattern.assign(N * N, 0);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; j += 2) mask.pattern[i * N + j] = 1;

    const auto meas = acquire(gt, mask, 0.0, 0);
    const auto zf = zero_filled(meas);

    const auto f2 = oracle::dft2_matrix(N);
    const oracle::Vec spectrum = f2 * oracle::flatten_slice(gt, 0);
    oracle::Vec masked = spectrum;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j)
            masked(static_cast<Eigen::Index>(i * N + j)) *= mask.at(i, j);
    const oracle::Vec img = f2.adjoint() * masked;  // unitary inverse
    for (std::size_t k = 0; k < N * N; ++k)
        CHECK(std::abs(zf.slice_ptr(0)[k] - img(static_cast<Eigen::Index>(k))) < 1e-12);
}

TEST_CASE("zero measurement gives a zero image") {
    UndersampledMeasurement meas;
    meas.kspace = Volume(2, 8);
    meas.mask = gen_uniform_mask(8, 2.0, 0.25, 0);
    CHECK(frobenius_norm(zero_filled(meas)) == 0.0);
}

TEST_CASE("projections") {
    SECTION("all-ones slice sums to N") {
        Volume v(1, 4);
        for (auto& z : v.raw()) z = 1.0;
        for (const auto& p : project_y(v, 0)) CHECK(p == cdouble(4.0));
        for (const auto& p : project_x(v, 0)) CHECK(p == cdouble(4.0));
    }
    SECTION("delta lands on its row/column") {
        Volume v(1, 4);
        v.at(0, 1, 2) = 1.0;
        const auto py = project_y(v, 0);
        const auto px = project_x(v, 0);
        for (std::size_t i = 0; i < 4; ++i) CHECK(py[i] == cdouble(i == 1 ? 1.0 : 0.0));
        for (std::size_t j = 0; j < 4; ++j) CHECK(px[j] == cdouble(j == 2 ? 1.0 : 0.0));
    }
    SECTION("linearity") {
        const Volume u = random_complex(1, 8, 6), v = random_complex(1, 8, 7);
        const cdouble a(1.5, -0.5), b(0.25, 2.0);
        const auto lhs = project_y(a * u + b * v, 0);
        const auto uu = project_y(u, 0), vv = project_y(v, 0);
        for (std::size_t i = 0; i < 8; ++i) CHECK(std::abs(lhs[i] - (a * uu[i] + b * vv[i])) < 1e-12);
    }
    SECTION("Cauchy-Schwarz norm bound") {
        for (int trial = 0; trial < 20; ++trial) {
            const Volume v = random_complex(1, 16, 100 + trial);
            const auto p = project_y(v, 0);
            double pn = 0.0;
            for (const auto& z : p) pn += std::norm(z);
            CHECK(std::sqrt(pn) <= std::sqrt(16.0) * frobenius_norm(v) + 1e-12);
        }
    }
}

TEST_CASE("discrete slice identity: DC spectrum column = scaled 1D spectrum of row sums") {
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t N = 8 + 4 * static_cast<std::size_t>(trial % 3);
        const Volume v = random_complex(2, N, 200 + trial);
        const auto ks = fft2_slices(v);
        for (std::size_t s = 0; s < 2; ++s) {
            const auto f = fft1(project_y(v, s));
            const double c = slice_scale(N);
            for (std::size_t i = 0; i < N; ++i)
                CHECK(std::abs(ks.at(s, i, N / 2) - c * f[i]) < 1e-12);
            // x-axis analogue along the DC row
            const auto fx = fft1(project_x(v, s));
            for (std::size_t j = 0; j < N; ++j)
                CHECK(std::abs(ks.at(s, N / 2, j) - c * fx[j]) < 1e-12);
        }
    }
}

TEST_CASE("fourier_slice_residual") {
    const Volume gt = random_complex(3, 16, 8);
    const Mask mask = gen_uniform_mask(16, 2.0, 0.2, 9);
    const auto meas = acquire(gt, mask, 0.0, 0);

    SECTION("vanishes at the ground truth") {
        const auto [r_ky, r_kx] = fourier_slice_residual(gt, meas);
        CHECK(r_ky < 1e-18);
        CHECK(r_kx < 1e-18);
    }
    SECTION("zero volume leaves the full measurement energy") {
        const Volume zero(3, 16);
        const auto [r_ky, r_kx] = fourier_slice_residual(zero, meas);
        double e_ky = 0.0, e_kx = 0.0;
        for (const auto& z : meas.proj_ky.data) e_ky += std::norm(z);
        for (const auto& z : meas.proj_kx.data) e_kx += std::norm(z);
        CHECK(r_ky == Catch::Approx(e_ky).epsilon(1e-12));
        CHECK(r_kx == Catch::Approx(e_kx).epsilon(1e-12));
    }
    SECTION("random volume matches the dense-matrix evaluation") {
        const std::size_t N = 8;
        const Volume gt8 = random_complex(2, N, 10);
        const Mask m8 = gen_gaussian_mask(N, 2.0, 0.2, 11);
        const auto meas8 = acquire(gt8, m8, 0.05, 12);
        const Volume probe = random_complex(2, N, 13);

        const auto ops = oracle::DenseLossOperators::build(m8);
        double want_ky = 0.0, want_kx = 0.0;
        for (std::size_t s = 0; s < 2; ++s) {
            const oracle::Vec x = oracle::flatten_slice(probe, s);
            oracle::Vec ky(N), kx(N);
            for (std::size_t k = 0; k < N; ++k) {
                ky(static_cast<Eigen::Index>(k)) = meas8.proj_ky.at(s, k);
                kx(static_cast<Eigen::Index>(k)) = meas8.proj_kx.at(s, k);
            }
            want_ky += (ky - ops.c_y * x).squaredNorm();
            want_kx += (kx - ops.c_x * x).squaredNorm();
        }
        const auto [r_ky, r_kx] = fourier_slice_residual(probe, meas8);
        CHECK(r_ky == Catch::Approx(want_ky).epsilon(1e-10));
        CHECK(r_kx == Catch::Approx(want_kx).epsilon(1e-10));
    }
}
