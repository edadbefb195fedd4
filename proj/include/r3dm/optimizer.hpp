#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "r3dm/forward_model.hpp"
#include "r3dm/regularization.hpp"

namespace r3dm {

enum class StepMode { closed_form, power_iteration, fixed };

struct ReconConfig {
    int inner_iters = 10;        // m
    double lambda = 0.01;        // step size in fixed mode
    double rho = 1.0;            // projected-constraint penalty weight
    RegWeights reg;
    StepMode step_mode = StepMode::power_iteration;
    bool prox_raw_alpha = false; // threshold with alpha itself instead of lambda*alpha

    void validate() const {
        if (inner_iters < 0) throw ConfigError("recon: inner iteration count must be >= 0");
        if (lambda <= 0.0) throw ConfigError("recon: step size must be > 0");
        if (rho < 0.0) throw ConfigError("recon: rho must be >= 0");
        if (reg.alpha < 0.0) throw ConfigError("recon: alpha must be >= 0");
    }
};

// Smooth-loss terms. fidelity and the slice terms carry their 1/2 factors;
// total = fidelity + rho*(slice_ky + slice_kx) + tv_weight*tv. The l1 term is
// handled by the prox and never appears here.
struct LossBreakdown {
    double fidelity = 0.0;
    double slice_ky = 0.0;
    double slice_kx = 0.0;
    double tv = 0.0;
    double total = 0.0;
};

inline LossBreakdown loss(const ImageVolume& vol, const UndersampledMeasurement& meas,
                          const ReconConfig& cfg) {
    require_same_shape(vol, meas.kspace, "loss");
    const std::size_t S = vol.slices(), N = vol.n();

    LossBreakdown out;
    const KSpaceVolume pred = fft2_slices(vol);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) {
                const double m = meas.mask.at(i, j);
                out.fidelity += std::norm(meas.kspace.at(s, i, j) - m * pred.at(s, i, j));
            }
    out.fidelity *= 0.5;

    const auto [r_ky, r_kx] = fourier_slice_residual(vol, meas);
    out.slice_ky = 0.5 * r_ky;
    out.slice_kx = 0.5 * r_kx;
    out.tv = atv_value(vol);
    out.total = out.fidelity + cfg.rho * (out.slice_ky + out.slice_kx) + cfg.reg.effective_tv() * out.tv;
    return out;
}

namespace detail {

// Adjoint of X_s -> m o F1(P_y(X_s))/sqrt(N): inverse 1D transform of the
// masked residual, broadcast back across the summed axis.
inline void add_slice_adjoint_y(Volume& acc, const std::vector<cdouble>& r, const MaskSlice& ms,
                                std::size_t s, cdouble weight) {
    const std::size_t N = acc.n();
    std::vector<cdouble> masked(N);
    for (std::size_t i = 0; i < N; ++i) masked[i] = ms.m_ky[i] * r[i];
    const std::vector<cdouble> u = ifft1(masked);
    const double c = slice_scale(N);
    cdouble* p = acc.slice_ptr(s);
    for (std::size_t i = 0; i < N; ++i) {
        const cdouble w = weight * c * u[i];
        for (std::size_t j = 0; j < N; ++j) p[i * N + j] += w;
    }
}

inline void add_slice_adjoint_x(Volume& acc, const std::vector<cdouble>& r, const MaskSlice& ms,
                                std::size_t s, cdouble weight) {
    const std::size_t N = acc.n();
    std::vector<cdouble> masked(N);
    for (std::size_t j = 0; j < N; ++j) masked[j] = ms.m_kx[j] * r[j];
    const std::vector<cdouble> u = ifft1(masked);
    const double c = slice_scale(N);
    cdouble* p = acc.slice_ptr(s);
    for (std::size_t j = 0; j < N; ++j) {
        const cdouble w = weight * c * u[j];
        for (std::size_t i = 0; i < N; ++i) p[i * N + j] += w;
    }
}

}  // namespace detail

// Gradient of the smooth loss, same derivative convention as atv_gradient.
inline ImageVolume loss_gradient(const ImageVolume& vol, const UndersampledMeasurement& meas,
                                 const ReconConfig& cfg) {
    require_same_shape(vol, meas.kspace, "loss_gradient");
    const std::size_t S = vol.slices(), N = vol.n();

    // -F2^{-1}(M o (Y_hat - M o F2(X)))
    KSpaceVolume resid = fft2_slices(vol);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) {
                const double m = meas.mask.at(i, j);
                resid.at(s, i, j) = m * (meas.kspace.at(s, i, j) - m * resid.at(s, i, j));
            }
    Volume grad = cdouble(-1.0) * ifft2_slices(resid);

    if (cfg.rho > 0.0) {
        const MaskSlice ms = slice_mask(meas.mask);
        for (std::size_t s = 0; s < S; ++s) {
            std::vector<cdouble> ry = slice_predict_y(vol, ms, s);
            std::vector<cdouble> rx = slice_predict_x(vol, ms, s);
            for (std::size_t k = 0; k < N; ++k) {
                ry[k] = meas.proj_ky.at(s, k) - ry[k];
                rx[k] = meas.proj_kx.at(s, k) - rx[k];
            }
            detail::add_slice_adjoint_y(grad, ry, ms, s, -cfg.rho);
            detail::add_slice_adjoint_x(grad, rx, ms, s, -cfg.rho);
        }
    }

    const double tvw = cfg.reg.effective_tv();
    if (tvw > 0.0) {
        const Volume g_tv = atv_gradient(vol);
        for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += tvw * g_tv[k];
    }
    return grad;
}

// The loss is quadratic; this applies its (constant) Hessian. Self-adjoint
// and positive semidefinite by construction.
inline Volume hessian_apply(const Volume& v, const UndersampledMeasurement& meas, const ReconConfig& cfg) {
    const std::size_t S = v.slices(), N = v.n();

    KSpaceVolume spec = fft2_slices(v);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) spec.at(s, i, j) *= meas.mask.at(i, j);
    Volume out = ifft2_slices(spec);

    if (cfg.rho > 0.0) {
        const MaskSlice ms = slice_mask(meas.mask);
        for (std::size_t s = 0; s < S; ++s) {
            detail::add_slice_adjoint_y(out, slice_predict_y(v, ms, s), ms, s, cfg.rho);
            detail::add_slice_adjoint_x(out, slice_predict_x(v, ms, s), ms, s, cfg.rho);
        }
    }

    const double tvw = cfg.reg.effective_tv();
    if (tvw > 0.0) {
        const Volume g_tv = atv_gradient(v);
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += tvw * g_tv[k];
    }
    return out;
}

// Closed-form bound from the operator analysis. Understates the true
// constant in general (see spectral checks), so it is never the default.
inline double lipschitz_closed_form(std::size_t n, double rho) {
    if (n < 2) throw ConfigError("lipschitz_closed_form: need n >= 2");
    if (rho < 0.0) throw ConfigError("lipschitz_closed_form: rho must be >= 0");
    return 5.0 + 2.0 * rho * std::sqrt(static_cast<double>(n));
}

struct LipschitzEstimate {
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Dominant Hessian eigenvalue by power iteration with Rayleigh quotients.
inline LipschitzEstimate lipschitz_estimate(const UndersampledMeasurement& meas, const ReconConfig& cfg,
                                            double tol = 1e-4, int max_iter = 500,
                                            std::uint64_t seed = 0x9e3779b9) {
    const std::size_t S = meas.kspace.slices(), N = meas.kspace.n();
    Rng rng(seed);
    Volume v = random_gaussian_volume(S, N, rng, true);
    const double nv = frobenius_norm(v);
    for (auto& z : v.raw()) z /= nv;

    LipschitzEstimate est;
    double prev = 0.0;
    for (int it = 1; it <= max_iter; ++it) {
        Volume w = hessian_apply(v, meas, cfg);
        const double lambda = dot(v, w).real();
        const double wn = frobenius_norm(w);
        est.iterations = it;
        est.value = lambda;
        if (wn == 0.0) {  // null operator
            est.value = 0.0;
            est.converged = true;
            return est;
        }
        if (it > 1 && std::abs(lambda - prev) <= tol * std::max(std::abs(lambda), 1e-300)) {
            est.converged = true;
            return est;
        }
        prev = lambda;
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = w[k] / wn;
    }
    return est;  // converged stays false; value is the best estimate
}

// Step size according to cfg.step_mode.
inline double resolve_step(const UndersampledMeasurement& meas, const ReconConfig& cfg) {
    switch (cfg.step_mode) {
        case StepMode::fixed:
            return cfg.lambda;
        case StepMode::closed_form:
            return 1.0 / lipschitz_closed_form(meas.kspace.n(), cfg.rho);
        case StepMode::power_iteration: {
            const LipschitzEstimate est = lipschitz_estimate(meas, cfg);
            if (est.value <= 0.0) return cfg.lambda;  // degenerate (empty) operator
            return 1.0 / est.value;
        }
    }
    return cfg.lambda;
}

namespace detail {

inline ImageVolume pgd_step_with(const ImageVolume& vol, const UndersampledMeasurement& meas,
                                 const ReconConfig& cfg, double lambda) {
    Volume g = loss_gradient(vol, meas, cfg);
    Volume z = vol;
    for (std::size_t k = 0; k < z.size(); ++k) z[k] -= lambda * g[k];
    const double threshold = cfg.prox_raw_alpha ? cfg.reg.alpha : lambda * cfg.reg.alpha;
    return threshold > 0.0 ? soft_threshold(z, threshold) : z;
}

}  // namespace detail

// One proximal-gradient step: prox(x - lambda*grad). The prox threshold is
// lambda*alpha so the implicit subproblem matches the step size
// (prox_raw_alpha switches to thresholding with alpha directly).
inline ImageVolume pgd_step(const ImageVolume& vol, const UndersampledMeasurement& meas,
                            const ReconConfig& cfg) {
    cfg.validate();
    return detail::pgd_step_with(vol, meas, cfg, resolve_step(meas, cfg));
}

struct SolveResult {
    ImageVolume volume;
    std::vector<LossBreakdown> trace;  // entry 0 is the initial point
    double lambda_used = 0.0;
};

// m proximal-gradient iterations from vol0, with a loss trace.
inline SolveResult solve_g(const ImageVolume& vol0, const UndersampledMeasurement& meas,
                           const ReconConfig& cfg, bool record_trace = true) {
    cfg.validate();
    SolveResult result;
    result.lambda_used = resolve_step(meas, cfg);
    result.volume = vol0;
    if (record_trace) result.trace.push_back(loss(result.volume, meas, cfg));
    for (int i = 0; i < cfg.inner_iters; ++i) {
        result.volume = detail::pgd_step_with(result.volume, meas, cfg, result.lambda_used);
        if (record_trace) result.trace.push_back(loss(result.volume, meas, cfg));
    }
    return result;
}

inline std::string loss_trace_csv(const std::vector<LossBreakdown>& trace) {
    std::string out = "iteration,fidelity,slice_ky,slice_kx,tv,total\n";
    char line[256];
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto& t = trace[i];
        std::snprintf(line, sizeof(line), "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", i, t.fidelity,
                      t.slice_ky, t.slice_kx, t.tv, t.total);
        out += line;
    }
    return out;
}

}  // namespace r3dm
