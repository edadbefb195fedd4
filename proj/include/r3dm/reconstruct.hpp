#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "r3dm/diffusion.hpp"
#include "r3dm/metrics.hpp"
#include "r3dm/optimizer.hpp"

namespace r3dm {

// How the real-valued diffusion prior sees the complex iterate. The
// optimizer always works in complex space; after each sampling step the
// imaginary part carried forward is whatever the optimizer produced.
enum class ComplexBridge { magnitude, real_part };

struct R3dmConfig {
    NoiseSchedule schedule;
    ReconConfig recon;
    ScoreModel* model = nullptr;  // not owned
    std::uint64_t seed = 0;
    bool emit_trace = false;
    ComplexBridge bridge = ComplexBridge::real_part;
    const ImageVolume* ground_truth = nullptr;  // evaluation mode only
};

struct TraceRow {
    int t = 0;      // outer (sampling) step, 0 for plain optimization runs
    int inner = 0;  // 0 = state right after the sampling update
    LossBreakdown loss;
    double ssim = std::numeric_limits<double>::quiet_NaN();
    double psnr = std::numeric_limits<double>::quiet_NaN();
};

struct ReconResult {
    ImageVolume volume;
    std::vector<TraceRow> trace;
    double lambda_used = 0.0;
    double wall_time_sec = 0.0;
};

namespace detail {

inline Volume bridged(const Volume& x, ComplexBridge bridge) {
    return bridge == ComplexBridge::real_part ? real_part(x) : magnitude(x);
}

inline void fill_metrics(TraceRow& row, const R3dmConfig& cfg, const Volume& x) {
    if (!cfg.ground_truth) return;
    const MetricReport rep = report(*cfg.ground_truth, normalize(magnitude(x)));
    row.ssim = rep.ssim_3d;
    row.psnr = rep.psnr_3d;
}

inline void check_finite_or_abort(const Volume& x, int t) {
    if (!x.is_finite())
        throw NumericalError("reconstruction produced NaN/Inf at sampling step t=" + std::to_string(t));
}

}  // namespace detail

// Alternating reconstruction: one reverse sampling update, then m
// data-consistency iterations, from t = T down to 1.
inline ReconResult reconstruct(const UndersampledMeasurement& meas, const R3dmConfig& cfg) {
    if (!cfg.model) throw ConfigError("reconstruct: no score model configured");
    cfg.recon.validate();
    const auto start = std::chrono::steady_clock::now();

    const std::size_t S = meas.kspace.slices(), N = meas.kspace.n();
    Rng rng(cfg.seed);
    ImageVolume x = random_gaussian_volume(S, N, rng, false);

    ReconResult result;
    result.lambda_used = resolve_step(meas, cfg.recon);

    ReconConfig inner_cfg = cfg.recon;
    inner_cfg.step_mode = StepMode::fixed;
    inner_cfg.lambda = result.lambda_used;

    auto trace_point = [&](int t, int inner, const Volume& v) {
        if (!cfg.emit_trace) return;
        TraceRow row;
        row.t = t;
        row.inner = inner;
        row.loss = loss(v, meas, inner_cfg);
        detail::fill_metrics(row, cfg, v);
        result.trace.push_back(row);
    };

    if (cfg.schedule.steps() == 0) {
        // Degenerate schedule: pure optimization from the Gaussian init.
        trace_point(0, 0, x);
        for (int i = 1; i <= inner_cfg.inner_iters; ++i) {
            x = detail::pgd_step_with(x, meas, inner_cfg, result.lambda_used);
            trace_point(0, i, x);
        }
    } else {
        for (int t = cfg.schedule.steps(); t >= 1; --t) {
            const Volume seen = detail::bridged(x, cfg.bridge);
            Volume updated = ddpm_step(seen, t, *cfg.model, cfg.schedule, rng);
            // carry the imaginary part the optimizer produced
            for (std::size_t k = 0; k < x.size(); ++k) x[k] = cdouble(updated[k].real(), x[k].imag());
            detail::check_finite_or_abort(x, t);
            trace_point(t, 0, x);
            for (int i = 1; i <= inner_cfg.inner_iters; ++i) {
                x = detail::pgd_step_with(x, meas, inner_cfg, result.lambda_used);
                trace_point(t, i, x);
            }
            detail::check_finite_or_abort(x, t);
        }
    }

    result.volume = std::move(x);
    result.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

// Ablation baseline: plain proximal-gradient from the zero-filled image for
// T*m total iterations, no diffusion prior.
inline ReconResult reconstruct_pgd_only(const UndersampledMeasurement& meas, const R3dmConfig& cfg) {
    cfg.recon.validate();
    const auto start = std::chrono::steady_clock::now();

    ReconResult result;
    result.lambda_used = resolve_step(meas, cfg.recon);

    ReconConfig inner_cfg = cfg.recon;
    inner_cfg.step_mode = StepMode::fixed;
    inner_cfg.lambda = result.lambda_used;

    ImageVolume x = zero_filled(meas);
    const long total = static_cast<long>(std::max(0, cfg.schedule.steps())) * inner_cfg.inner_iters;

    if (cfg.emit_trace) {
        TraceRow row;
        row.loss = loss(x, meas, inner_cfg);
        detail::fill_metrics(row, cfg, x);
        result.trace.push_back(row);
    }
    for (long i = 1; i <= total; ++i) {
        x = detail::pgd_step_with(x, meas, inner_cfg, result.lambda_used);
        if (cfg.emit_trace) {
            TraceRow row;
            row.inner = static_cast<int>(i);
            row.loss = loss(x, meas, inner_cfg);
            detail::fill_metrics(row, cfg, x);
            result.trace.push_back(row);
        }
        if (!x.is_finite()) throw NumericalError("pgd-only reconstruction produced NaN/Inf");
    }

    result.volume = std::move(x);
    result.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

inline std::string recon_trace_csv(const std::vector<TraceRow>& trace) {
    std::string out = "t,inner,fidelity,slice_ky,slice_kx,tv,total,ssim,psnr\n";
    char line[320];
    for (const auto& row : trace) {
        std::snprintf(line, sizeof(line), "%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", row.t,
                      row.inner, row.loss.fidelity, row.loss.slice_ky, row.loss.slice_kx, row.loss.tv,
                      row.loss.total, row.ssim, row.psnr);
        out += line;
    }
    return out;
}

}  // namespace r3dm
