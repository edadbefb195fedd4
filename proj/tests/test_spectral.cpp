#include <catch2/catch_amalgamated.hpp>

#include "r3dm/spectral.hpp"
#include "support/oracles.hpp"

using namespace r3dm;

TEST_CASE("power_iteration on simple operators") {
    SECTION("identity") {
        const auto rep = power_iteration([](const std::vector<cdouble>& v) { return v; }, 16);
        CHECK(rep.converged);
        CHECK(rep.lambda_max == Catch::Approx(1.0).margin(1e-9));
    }
    SECTION("diagonal 1,2,3") {
        const auto rep = power_iteration(
            [](const std::vector<cdouble>& v) {
                std::vector<cdouble> out(3);
                for (std::size_t k = 0; k < 3; ++k) out[k] = static_cast<double>(k + 1) * v[k];
                return out;
            },
            3);
        CHECK(rep.converged);
        CHECK(rep.lambda_max == Catch::Approx(3.0).margin(1e-5));
    }
    SECTION("null operator reports zero") {
        const auto rep = power_iteration(
            [](const std::vector<cdouble>& v) { return std::vector<cdouble>(v.size(), 0.0); }, 8);
        CHECK(rep.converged);
        CHECK(rep.lambda_max == 0.0);
    }
    SECTION("dense random PSD matrix matches the dense eigensolve") {
        const std::size_t n = 8;
        Rng rng(7);
        oracle::Mat a(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    cdouble(rng.gaussian(), rng.gaussian());
        const oracle::Mat psd = a.adjoint() * a;
        Eigen::SelfAdjointEigenSolver<oracle::Mat> solver(psd);
        const double want = solver.eigenvalues().maxCoeff();
        const auto rep = power_iteration(
            [&](const std::vector<cdouble>& v) {
                oracle::Vec x(n);
                for (std::size_t k = 0; k < n; ++k) x(static_cast<Eigen::Index>(k)) = v[k];
                const oracle::Vec y = psd * x;
                std::vector<cdouble> out(n);
                for (std::size_t k = 0; k < n; ++k) out[k] = y(static_cast<Eigen::Index>(k));
                return out;
            },
            n, 1e-10, 20000);
        CHECK(rep.lambda_max == Catch::Approx(want).epsilon(1e-6));
    }
}

TEST_CASE("masked 2D Fourier normal operator has unit norm whenever sampled") {
    SECTION("random masks") {
        for (int trial = 0; trial < 5; ++trial) {
            const Mask m = trial % 2 == 0 ? gen_uniform_mask(12, 2.0, 0.2, trial)
                                          : gen_gaussian_mask(12, 3.0, 0.1, trial);
            const auto rep = check_A_spectrum(m, 2);
            CHECK(rep.lambda_max == Catch::Approx(1.0).margin(1e-6));
            CHECK(rep.reference == 1.0);
        }
    }
    SECTION("all-zero mask gives the null operator") {
        Mask m;
        m.n = 8;
        m.pattern.assign(64, 0);
        const auto rep = check_A_spectrum(m, 1);
        CHECK(rep.lambda_max == 0.0);
    }
    SECTION("full mask is unitary") {
        const auto rep = check_A_spectrum(gen_uniform_mask(8, 1.0, 0.0, 0), 2);
        CHECK(rep.lambda_max == Catch::Approx(1.0).margin(1e-9));
    }
}

TEST_CASE("masked 1D projection-line operators also have unit norm") {
    const Mask m = gen_uniform_mask(16, 2.0, 0.2, 3);
    const auto ry = check_Ay_spectrum(m, 3);
    const auto rx = check_Ax_spectrum(m, 3);
    CHECK(ry.lambda_max == Catch::Approx(1.0).margin(1e-6));
    CHECK(rx.lambda_max == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("difference gram operator: claimed 4, measured grows past it") {
    SECTION("N=2 matches the claimed value") {
        const auto rep = check_B_spectrum(2);
        CHECK(rep.lambda_max == Catch::Approx(4.0).margin(1e-6));
        CHECK(rep.note.empty());
    }
    SECTION("N=3 measures 6 and emits a discrepancy note") {
        const auto rep = check_B_spectrum(3);
        CHECK(rep.lambda_max == Catch::Approx(6.0).margin(1e-6));
        CHECK_FALSE(rep.note.empty());
    }
    SECTION("N=3 dense eigensolve of the 9x9 operator confirms the measurement") {
        const auto b = oracle::b_matrix(3);
        const oracle::Mat gram = b.adjoint() * b;
        Eigen::SelfAdjointEigenSolver<oracle::Mat> solver(gram);
        CHECK(solver.eigenvalues().maxCoeff() == Catch::Approx(6.0).margin(1e-9));
    }
    SECTION("closed-form maximum stays below 8 for n up to 64") {
        for (std::size_t n = 2; n <= 64; ++n) {
            const double omega_max = 2.0 - 2.0 * std::cos((static_cast<double>(n) - 1.0) * M_PI / static_cast<double>(n));
            CHECK(2.0 * omega_max < 8.0);
        }
    }
    SECTION("power iteration tracks the closed form at N=8") {
        const auto rep = check_B_spectrum(8, 1, 1e-9, 1);
        const double omega_max = 2.0 - 2.0 * std::cos(7.0 * M_PI / 8.0);
        CHECK(rep.lambda_max == Catch::Approx(2.0 * omega_max).epsilon(1e-6));
    }
}

TEST_CASE("first-difference gram spectrum") {
    SECTION("n=2") {
        const auto spec = dhd_eigenvalues(2);
        REQUIRE(spec.computed.size() == 2);
        CHECK(spec.computed[0] == Catch::Approx(0.0).margin(1e-12));
        CHECK(spec.computed[1] == Catch::Approx(2.0).margin(1e-12));
    }
    SECTION("n=3 has eigenvalues 0, 1, 3") {
        const auto spec = dhd_eigenvalues(3);
        REQUIRE(spec.computed.size() == 3);
        CHECK(spec.computed[0] == Catch::Approx(0.0).margin(1e-12));
        CHECK(spec.computed[1] == Catch::Approx(1.0).margin(1e-12));
        CHECK(spec.computed[2] == Catch::Approx(3.0).margin(1e-12));
        REQUIRE(spec.formula.size() == 2);
        CHECK(spec.formula[0] == Catch::Approx(1.0));
        CHECK(spec.formula[1] == Catch::Approx(3.0));
    }
    SECTION("nonzero eigenvalues match the closed form up to n=32") {
        for (std::size_t n = 2; n <= 32; ++n) {
            const auto spec = dhd_eigenvalues(n);
            REQUIRE(spec.computed.size() == n);
            CHECK(std::abs(spec.computed[0]) < 1e-9);  // null eigenvalue
            for (std::size_t i = 1; i < n; ++i)
                CHECK(std::abs(spec.computed[i] - spec.formula[i - 1]) < 1e-9);
        }
    }
}

TEST_CASE("gaussian density gradient bound") {
    SECTION("d=1, sigma=1: bound value and attainment") {
        const auto rep = check_gaussian_lipschitz(1, 1.0);
        CHECK(rep.bound == Catch::Approx(std::exp(-0.5) / std::sqrt(2.0 * M_PI)).epsilon(1e-12));
        CHECK(rep.bound == Catch::Approx(0.24197).epsilon(1e-3));
        CHECK(rep.within_bound);
        CHECK(rep.attained_at_sigma);
        CHECK(rep.argmax_radius == Catch::Approx(1.0).margin(1e-3));
    }
    SECTION("d=1 bound scales as 1/sigma^2") {
        const auto r1 = check_gaussian_lipschitz(1, 1.0);
        const auto r2 = check_gaussian_lipschitz(1, 2.0);
        CHECK(r2.bound == Catch::Approx(r1.bound / 4.0).epsilon(1e-12));
        CHECK(r2.within_bound);
        CHECK(r2.attained_at_sigma);
    }
    SECTION("d=2 across sigmas") {
        for (double sigma : {0.5, 1.0, 2.0}) {
            const auto rep = check_gaussian_lipschitz(2, sigma);
            CHECK(rep.within_bound);
            CHECK(rep.attained_at_sigma);
            CHECK(rep.argmax_radius == Catch::Approx(sigma).margin(6.0 * sigma / 20000.0 + 1e-12));
        }
    }
}

TEST_CASE("spectral reports serialize to JSON") {
    const auto rep = check_B_spectrum(3);
    const auto j = to_json(rep);
    CHECK(j["lambda_max"].get<double>() == Catch::Approx(6.0).margin(1e-6));
    CHECK(j["reference"].get<double>() == 4.0);
    CHECK(j.contains("note"));
}
