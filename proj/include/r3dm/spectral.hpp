#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "r3dm/fft.hpp"
#include "r3dm/masks.hpp"
#include "r3dm/regularization.hpp"
#include "r3dm/volume.hpp"

namespace r3dm {

// Measured dominant eigenvalue of a normal operator, reported side by side
// with the claimed value when one exists. Discrepancies are recorded, never
// patched over; step-size selection elsewhere uses measured values only.
struct SpectralReport {
    std::string operator_name;
    double lambda_max = 0.0;
    int iterations = 0;
    bool converged = false;
    std::optional<double> reference;
    std::string note;
};

using FlatOp = std::function<std::vector<cdouble>(const std::vector<cdouble>&)>;

// Power method with Rayleigh-quotient estimates on a self-adjoint PSD map.
inline SpectralReport power_iteration(const FlatOp& op, std::size_t dim, double tol = 1e-6,
                                      int max_iter = 5000, std::uint64_t seed = 1,
                                      std::string name = "operator") {
    SpectralReport rep;
    rep.operator_name = std::move(name);

    Rng rng(seed);
    std::vector<cdouble> v(dim);
    for (auto& z : v) z = cdouble(rng.gaussian(), rng.gaussian());
    double nv = 0.0;
    for (const auto& z : v) nv += std::norm(z);
    nv = std::sqrt(nv);
    for (auto& z : v) z /= nv;

    double prev = 0.0;
    for (int it = 1; it <= max_iter; ++it) {
        const std::vector<cdouble> w = op(v);
        cdouble rayleigh = 0.0;
        double wn = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
            rayleigh += std::conj(v[k]) * w[k];
            wn += std::norm(w[k]);
        }
        wn = std::sqrt(wn);
        rep.iterations = it;
        rep.lambda_max = rayleigh.real();
        if (wn == 0.0) {
            rep.lambda_max = 0.0;
            rep.converged = true;
            return rep;
        }
        if (it > 1 && std::abs(rep.lambda_max - prev) <= tol * std::max(std::abs(rep.lambda_max), 1e-300)) {
            rep.converged = true;
            return rep;
        }
        prev = rep.lambda_max;
        for (auto& z : v) z = 0.0;
        for (std::size_t k = 0; k < dim; ++k) v[k] = w[k] / wn;
    }
    rep.note = "power iteration did not converge within the iteration cap";
    return rep;
}

namespace detail {

inline FlatOp volume_op(std::size_t S, std::size_t N, std::function<Volume(const Volume&)> f) {
    return [S, N, f = std::move(f)](const std::vector<cdouble>& x) {
        Volume v(S, N);
        v.raw() = x;
        return f(v).raw();
    };
}

}  // namespace detail

// Normal operator of the masked per-slice 2D Fourier map. Its spectrum is
// {0,1}: the claimed maximum (1) holds whenever the mask samples anything.
inline SpectralReport check_A_spectrum(const Mask& mask, std::size_t S, double tol = 1e-6,
                                       std::uint64_t seed = 1) {
    const std::size_t N = mask.n;
    auto op = detail::volume_op(S, N, [&mask](const Volume& v) {
        KSpaceVolume spec = fft2_slices(v);
        for (std::size_t s = 0; s < spec.slices(); ++s)
            for (std::size_t i = 0; i < spec.n(); ++i)
                for (std::size_t j = 0; j < spec.n(); ++j) spec.at(s, i, j) *= mask.at(i, j);
        return ifft2_slices(spec);
    });
    SpectralReport rep = power_iteration(op, S * N * N, tol, 5000, seed, "masked 2D Fourier normal operator");
    rep.reference = 1.0;
    return rep;
}

// Normal operators of the masked 1D Fourier maps on the stacked projection
// vectors (DC column / DC row restrictions).
inline SpectralReport check_Ay_spectrum(const Mask& mask, std::size_t S, double tol = 1e-6,
                                        std::uint64_t seed = 1) {
    const std::size_t N = mask.n;
    const MaskSlice ms = slice_mask(mask);
    FlatOp op = [S, N, ms](const std::vector<cdouble>& x) {
        std::vector<cdouble> out(S * N);
        for (std::size_t s = 0; s < S; ++s) {
            std::vector<cdouble> v(x.begin() + static_cast<std::ptrdiff_t>(s * N),
                                   x.begin() + static_cast<std::ptrdiff_t>((s + 1) * N));
            std::vector<cdouble> f = fft1(v);
            for (std::size_t i = 0; i < N; ++i) f[i] *= ms.m_ky[i];
            const std::vector<cdouble> back = ifft1(f);
            for (std::size_t i = 0; i < N; ++i) out[s * N + i] = back[i];
        }
        return out;
    };
    SpectralReport rep = power_iteration(op, S * N, tol, 5000, seed, "masked 1D Fourier normal operator (k_y)");
    rep.reference = 1.0;
    return rep;
}

inline SpectralReport check_Ax_spectrum(const Mask& mask, std::size_t S, double tol = 1e-6,
                                        std::uint64_t seed = 1) {
    const std::size_t N = mask.n;
    const MaskSlice ms = slice_mask(mask);
    FlatOp op = [S, N, ms](const std::vector<cdouble>& x) {
        std::vector<cdouble> out(S * N);
        for (std::size_t s = 0; s < S; ++s) {
            std::vector<cdouble> v(x.begin() + static_cast<std::ptrdiff_t>(s * N),
                                   x.begin() + static_cast<std::ptrdiff_t>((s + 1) * N));
            std::vector<cdouble> f = fft1(v);
            for (std::size_t j = 0; j < N; ++j) f[j] *= ms.m_kx[j];
            const std::vector<cdouble> back = ifft1(f);
            for (std::size_t j = 0; j < N; ++j) out[s * N + j] = back[j];
        }
        return out;
    };
    SpectralReport rep = power_iteration(op, S * N, tol, 5000, seed, "masked 1D Fourier normal operator (k_x)");
    rep.reference = 1.0;
    return rep;
}

// Gram operator of the per-slice first-difference map (atv_gradient / 2).
// The claimed maximum is 4; the measured maximum is 2*(2 - 2cos((N-1)pi/N)),
// which matches only at N = 2 and approaches 8 from below. The report keeps
// both numbers.
inline SpectralReport check_B_spectrum(std::size_t n, std::size_t slices = 1, double tol = 1e-6,
                                       std::uint64_t seed = 1) {
    if (n < 2) throw ConfigError("check_B_spectrum: need n >= 2");
    auto op = detail::volume_op(slices, n, [](const Volume& v) {
        Volume g = atv_gradient(v);
        for (auto& z : g.raw()) z *= 0.5;
        return g;
    });
    SpectralReport rep = power_iteration(op, slices * n * n, tol, 20000, seed,
                                         "in-plane difference-map gram operator");
    rep.reference = 4.0;
    if (std::abs(rep.lambda_max - 4.0) > 1e-3) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "measured %.6f differs from the claimed 4 (expected 2*(2-2cos((N-1)pi/N)) = %.6f at N=%zu)",
                      rep.lambda_max, 2.0 * (2.0 - 2.0 * std::cos((static_cast<double>(n) - 1.0) * M_PI / static_cast<double>(n))),
                      n);
        rep.note = buf;
    }
    return rep;
}

struct DhdSpectrum {
    std::vector<double> computed;  // n eigenvalues of the n x n gram matrix, ascending (includes 0)
    std::vector<double> formula;   // 2 - 2cos(i*pi/n) for i = 1..n-1, ascending
};

// Dense eigensolve of D^T D for the (n-1) x n first-difference matrix,
// against the closed-form nonzero eigenvalues.
inline DhdSpectrum dhd_eigenvalues(std::size_t n) {
    if (n < 2) throw ConfigError("dhd_eigenvalues: need n >= 2");
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n - 1), static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n - 1); ++i) {
        d(i, i) = -1.0;
        d(i, i + 1) = 1.0;
    }
    const Eigen::MatrixXd gram = d.transpose() * d;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);

    DhdSpectrum out;
    out.computed.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + n);
    for (std::size_t i = 1; i < n; ++i)
        out.formula.push_back(2.0 - 2.0 * std::cos(static_cast<double>(i) * M_PI / static_cast<double>(n)));
    return out;
}

// Grid check of the Gaussian-density gradient bound: the norm of grad p is
// radial, p(a)*a/sigma^2 with a = |z - mu|, maximized at a = sigma where it
// equals exp(-1/2)/sqrt((2pi)^d sigma^(2d+2)).
struct GaussianLipschitzReport {
    int dim = 1;
    double sigma = 1.0;
    double bound = 0.0;
    double grid_max = 0.0;
    double argmax_radius = 0.0;
    bool within_bound = false;
    bool attained_at_sigma = false;  // grid max within 1% of the bound, argmax within one cell of sigma
};

inline GaussianLipschitzReport check_gaussian_lipschitz(int d, double sigma, std::size_t grid_points = 20001) {
    if (d < 1) throw ConfigError("check_gaussian_lipschitz: need d >= 1");
    if (!(sigma > 0.0)) throw ConfigError("check_gaussian_lipschitz: need sigma > 0");

    GaussianLipschitzReport rep;
    rep.dim = d;
    rep.sigma = sigma;
    rep.bound = std::exp(-0.5) / std::sqrt(std::pow(2.0 * M_PI, d) * std::pow(sigma, 2 * d + 2));

    const double norm_const = 1.0 / std::sqrt(std::pow(2.0 * M_PI * sigma * sigma, d));
    const double hi = 6.0 * sigma;
    const double step = hi / static_cast<double>(grid_points - 1);
    for (std::size_t k = 0; k < grid_points; ++k) {
        const double a = static_cast<double>(k) * step;
        const double g = norm_const * std::exp(-a * a / (2.0 * sigma * sigma)) * a / (sigma * sigma);
        if (g > rep.grid_max) {
            rep.grid_max = g;
            rep.argmax_radius = a;
        }
    }
    rep.within_bound = rep.grid_max <= rep.bound * (1.0 + 1e-12);
    rep.attained_at_sigma =
        rep.grid_max >= 0.99 * rep.bound && std::abs(rep.argmax_radius - sigma) <= step;
    return rep;
}

inline nlohmann::json to_json(const SpectralReport& r) {
    nlohmann::json j;
    j["operator"] = r.operator_name;
    j["lambda_max"] = r.lambda_max;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    if (r.reference) j["reference"] = *r.reference;
    if (!r.note.empty()) j["note"] = r.note;
    return j;
}

inline nlohmann::json to_json(const GaussianLipschitzReport& r) {
    return nlohmann::json{{"dim", r.dim},
                          {"sigma", r.sigma},
                          {"bound", r.bound},
                          {"grid_max", r.grid_max},
                          {"argmax_radius", r.argmax_radius},
                          {"within_bound", r.within_bound},
                          {"attained_at_sigma", r.attained_at_sigma}};
}

}  // namespace r3dm
