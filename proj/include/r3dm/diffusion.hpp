#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "r3dm/errors.hpp"
#include "r3dm/fft.hpp"
#include "r3dm/volume.hpp"

namespace r3dm {

// Noise scales beta_t (t = 1..T) with cumulative products
// alpha_bar_t = prod_{j<=t}(1 - beta_j); alpha_bar_0 = 1 by convention.
struct NoiseSchedule {
    std::vector<double> betas;
    std::vector<double> alphas_bar;

    int steps() const { return static_cast<int>(betas.size()); }

    double beta(int t) const {
        if (t < 1 || t > steps()) throw InvalidInputError("schedule: t out of range");
        return betas[static_cast<std::size_t>(t - 1)];
    }

    double alpha_bar(int t) const {
        if (t < 0 || t > steps()) throw InvalidInputError("schedule: t out of range");
        return t == 0 ? 1.0 : alphas_bar[static_cast<std::size_t>(t - 1)];
    }
};

inline NoiseSchedule linear_schedule(int T, double beta_start = 1e-4, double beta_end = 0.02) {
    if (T < 1) throw ConfigError("schedule: need T >= 1");
    if (!(beta_start > 0.0) || beta_start > beta_end || !(beta_end < 1.0))
        throw ConfigError("schedule: need 0 < beta_start <= beta_end < 1");
    NoiseSchedule sched;
    sched.betas.resize(T);
    sched.alphas_bar.resize(T);
    double prod = 1.0;
    for (int t = 0; t < T; ++t) {
        const double frac = T == 1 ? 0.0 : static_cast<double>(t) / (T - 1);
        sched.betas[t] = beta_start + (beta_end - beta_start) * frac;
        prod *= 1.0 - sched.betas[t];
        sched.alphas_bar[t] = prod;
    }
    return sched;
}

// Closed-form forward jump x_t = sqrt(ab_t) x0 + sqrt(1-ab_t) z. Noise is
// real (the prior acts on real-valued content).
inline Volume perturb(const Volume& x0, int t, const NoiseSchedule& sched, Rng& rng) {
    const double ab = sched.alpha_bar(t);
    Volume out = x0;
    const double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
    for (auto& z : out.raw()) z = a * z + b * rng.gaussian();
    return out;
}

// Score-model contract: approximates the gradient of the log marginal at
// noise level t. Output shape must match the input.
struct ScoreModel {
    virtual ~ScoreModel() = default;
    virtual Volume score(const Volume& x_t, int t) = 0;
    virtual const char* name() const = 0;
};

struct ZeroScoreModel final : ScoreModel {
    Volume score(const Volume& x_t, int) override { return Volume(x_t.slices(), x_t.n()); }
    const char* name() const override { return "zero"; }
};

// Exact score for data drawn from N(mu0, var0*I): the marginal at step t is
// N(sqrt(ab_t) mu0, (ab_t*var0 + 1 - ab_t) I).
struct GaussianScoreModel final : ScoreModel {
    Volume mu0;
    double var0 = 1.0;
    const NoiseSchedule* schedule = nullptr;

    GaussianScoreModel(Volume mean, double variance, const NoiseSchedule* sched)
        : mu0(std::move(mean)), var0(variance), schedule(sched) {
        if (var0 <= 0.0) throw ConfigError("gaussian score model: var0 must be > 0");
    }

    Volume score(const Volume& x_t, int t) override {
        const double ab = schedule->alpha_bar(t);
        const double denom = ab * var0 + 1.0 - ab;
        const double sab = std::sqrt(ab);
        Volume out = x_t;
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = -(x_t[k] - sab * mu0[k]) / denom;
        return out;
    }

    const char* name() const override { return "gaussian"; }
};

using Denoiser = std::function<Volume(const Volume&, double sigma)>;

// Slicewise soft-thresholding of orthonormal DCT coefficients at
// threshold_scale * sigma, applied to real and imaginary parts separately.
// The DC coefficient is kept so means survive. At sigma = 0 this is the
// identity.
inline Denoiser make_dct_denoiser(double threshold_scale = 1.0) {
    return [threshold_scale](const Volume& x, double sigma) {
        const double tau = threshold_scale * sigma;
        if (tau <= 0.0) return x;
        const std::size_t S = x.slices(), N = x.n();
        Volume out(S, N);
        std::vector<double> part(N * N);
        for (std::size_t s = 0; s < S; ++s) {
            for (int comp = 0; comp < 2; ++comp) {
                const cdouble* src = x.slice_ptr(s);
                for (std::size_t k = 0; k < N * N; ++k)
                    part[k] = comp == 0 ? src[k].real() : src[k].imag();
                std::vector<double> c = dct2_ortho(part, N);
                for (std::size_t k = 1; k < c.size(); ++k) {
                    const double m = std::abs(c[k]);
                    c[k] = m > tau ? c[k] * ((m - tau) / m) : 0.0;
                }
                const std::vector<double> rec = idct2_ortho(c, N);
                cdouble* dst = out.slice_ptr(s);
                for (std::size_t k = 0; k < N * N; ++k) {
                    if (comp == 0)
                        dst[k] = cdouble(rec[k], dst[k].imag());
                    else
                        dst[k] = cdouble(dst[k].real(), rec[k]);
                }
            }
        }
        return out;
    };
}

// Plug-and-play score from a denoiser D via the posterior-mean identity:
// score = (sqrt(ab_t) * D(x_t/sqrt(ab_t), sigma_eff) - x_t) / (1 - ab_t)
// with sigma_eff = sqrt((1 - ab_t)/ab_t). D = identity gives a zero score.
struct TweedieDenoiserModel final : ScoreModel {
    Denoiser denoiser;
    const NoiseSchedule* schedule = nullptr;

    TweedieDenoiserModel(Denoiser d, const NoiseSchedule* sched)
        : denoiser(std::move(d)), schedule(sched) {}

    Volume score(const Volume& x_t, int t) override {
        const double ab = schedule->alpha_bar(t);
        const double sab = std::sqrt(ab);
        const double sigma_eff = std::sqrt((1.0 - ab) / ab);
        Volume scaled = x_t;
        for (auto& z : scaled.raw()) z /= sab;
        const Volume den = denoiser(scaled, sigma_eff);
        Volume out(x_t.slices(), x_t.n());
        const double inv = 1.0 / (1.0 - ab);
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = (sab * den[k] - x_t[k]) * inv;
        return out;
    }

    const char* name() const override { return "tweedie"; }
};

// Adapter for networks trained to predict the added noise:
// score = -eps(x_t, t) / sqrt(1 - ab_t).
struct EpsilonPredictionAdapter final : ScoreModel {
    std::function<Volume(const Volume&, int)> eps;
    const NoiseSchedule* schedule = nullptr;

    EpsilonPredictionAdapter(std::function<Volume(const Volume&, int)> f, const NoiseSchedule* sched)
        : eps(std::move(f)), schedule(sched) {}

    Volume score(const Volume& x_t, int t) override {
        Volume e = eps(x_t, t);
        const double c = -1.0 / std::sqrt(1.0 - schedule->alpha_bar(t));
        for (auto& z : e.raw()) z *= c;
        return e;
    }

    const char* name() const override { return "epsilon-adapter"; }
};

// One reverse ancestral step:
// x_{t-1} = (x_t + beta_t * score) / sqrt(1 - beta_t) + sqrt(beta_t) * z,
// with z = 0 on the final step (t = 1). Injected noise is real.
inline Volume ddpm_step(const Volume& x_t, int t, ScoreModel& model, const NoiseSchedule& sched,
                        Rng& rng) {
    const double beta = sched.beta(t);
    const Volume s = model.score(x_t, t);
    if (!s.same_shape(x_t)) throw ExternalModelError("score model returned mismatched shape");
    Volume out = x_t;
    const double inv = 1.0 / std::sqrt(1.0 - beta);
    const double noise = std::sqrt(beta);
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = (x_t[k] + beta * s[k]) * inv;
        if (t > 1) out[k] += noise * rng.gaussian();
    }
    return out;
}

// Posterior-mean estimate of the clean volume given x_t:
// (x_t + (1 - ab_t) * score) / sqrt(ab_t).
inline Volume posterior_mean(const Volume& x_t, int t, ScoreModel& model, const NoiseSchedule& sched) {
    const double ab = sched.alpha_bar(t);
    const Volume s = model.score(x_t, t);
    Volume out = x_t;
    const double inv = 1.0 / std::sqrt(ab);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = (x_t[k] + (1.0 - ab) * s[k]) * inv;
    return out;
}

}  // namespace r3dm
