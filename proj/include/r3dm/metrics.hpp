#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "r3dm/errors.hpp"
#include "r3dm/volume.hpp"

namespace r3dm {

struct SsimParams {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double data_range = 1.0;
};

inline double psnr(const std::vector<double>& ref, const std::vector<double>& test, double data_range) {
    if (ref.size() != test.size()) throw InvalidInputError("psnr: shape mismatch");
    if (!(data_range > 0.0)) throw InvalidInputError("psnr: data range must be > 0");
    double mse = 0.0;
    for (std::size_t k = 0; k < ref.size(); ++k) {
        const double d = ref[k] - test[k];
        mse += d * d;
    }
    mse /= static_cast<double>(ref.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(data_range * data_range / mse);
}

namespace detail {

inline std::vector<double> gaussian_kernel(int width, double sigma) {
    std::vector<double> k(width);
    const double c = (width - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < width; ++i) {
        k[i] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
        sum += k[i];
    }
    for (auto& v : k) v /= sum;
    return k;
}

// Valid-mode convolution along one axis of a dense row-major array; dims is
// updated to the output shape.
inline std::vector<double> conv_axis_valid(const std::vector<double>& in, std::vector<std::size_t>& dims,
                                           std::size_t axis, const std::vector<double>& kernel) {
    const std::size_t w = kernel.size();
    std::vector<std::size_t> out_dims = dims;
    out_dims[axis] = dims[axis] - w + 1;

    std::size_t inner = 1;  // stride of the convolved axis
    for (std::size_t d = axis + 1; d < dims.size(); ++d) inner *= dims[d];
    std::size_t outer = 1;
    for (std::size_t d = 0; d < axis; ++d) outer *= dims[d];

    std::size_t out_total = 1;
    for (auto d : out_dims) out_total *= d;
    std::vector<double> out(out_total);

    const std::size_t in_axis = dims[axis], out_axis = out_dims[axis];
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t a = 0; a < out_axis; ++a)
            for (std::size_t i = 0; i < inner; ++i) {
                double acc = 0.0;
                const std::size_t base = (o * in_axis + a) * inner + i;
                for (std::size_t t = 0; t < w; ++t) acc += kernel[t] * in[base + t * inner];
                out[(o * out_axis + a) * inner + i] = acc;
            }
    dims = out_dims;
    return out;
}

inline std::vector<double> gaussian_filter_valid(const std::vector<double>& in,
                                                 std::vector<std::size_t> dims,
                                                 const std::vector<int>& windows, double sigma,
                                                 std::vector<std::size_t>* out_dims = nullptr) {
    std::vector<double> cur = in;
    for (std::size_t axis = 0; axis < dims.size(); ++axis)
        cur = conv_axis_valid(cur, dims, axis, gaussian_kernel(windows[axis], sigma));
    if (out_dims) *out_dims = dims;
    return cur;
}

// Mean local SSIM with per-axis Gaussian windows over the valid region.
inline double ssim_nd(const std::vector<double>& ref, const std::vector<double>& test,
                      const std::vector<std::size_t>& dims, const std::vector<int>& windows,
                      const SsimParams& p) {
    for (std::size_t d = 0; d < dims.size(); ++d)
        if (dims[d] < static_cast<std::size_t>(windows[d]))
            throw InvalidInputError("ssim: image smaller than window");

    std::vector<double> rr(ref.size()), tt(ref.size()), rt(ref.size());
    for (std::size_t k = 0; k < ref.size(); ++k) {
        rr[k] = ref[k] * ref[k];
        tt[k] = test[k] * test[k];
        rt[k] = ref[k] * test[k];
    }
    const auto mu_r = gaussian_filter_valid(ref, dims, windows, p.sigma);
    const auto mu_t = gaussian_filter_valid(test, dims, windows, p.sigma);
    const auto m_rr = gaussian_filter_valid(rr, dims, windows, p.sigma);
    const auto m_tt = gaussian_filter_valid(tt, dims, windows, p.sigma);
    const auto m_rt = gaussian_filter_valid(rt, dims, windows, p.sigma);

    const double c1 = (p.k1 * p.data_range) * (p.k1 * p.data_range);
    const double c2 = (p.k2 * p.data_range) * (p.k2 * p.data_range);

    double acc = 0.0;
    for (std::size_t k = 0; k < mu_r.size(); ++k) {
        const double var_r = m_rr[k] - mu_r[k] * mu_r[k];
        const double var_t = m_tt[k] - mu_t[k] * mu_t[k];
        const double cov = m_rt[k] - mu_r[k] * mu_t[k];
        acc += ((2.0 * mu_r[k] * mu_t[k] + c1) * (2.0 * cov + c2)) /
               ((mu_r[k] * mu_r[k] + mu_t[k] * mu_t[k] + c1) * (var_r + var_t + c2));
    }
    return acc / static_cast<double>(mu_r.size());
}

// Largest odd window <= both the requested size and the dimension; degrades
// to 1 along very thin axes (no averaging on that axis).
inline int fit_window(int requested, std::size_t dim) {
    int w = std::min<int>(requested, static_cast<int>(dim));
    if (w % 2 == 0) --w;
    return std::max(w, 1);
}

}  // namespace detail

inline double ssim2d(const std::vector<double>& ref, const std::vector<double>& test,
                     std::size_t rows, std::size_t cols, const SsimParams& p = {}) {
    if (ref.size() != rows * cols || test.size() != ref.size())
        throw InvalidInputError("ssim2d: shape mismatch");
    return detail::ssim_nd(ref, test, {rows, cols}, {p.window, p.window}, p);
}

// Volume-level quality report following the 3D + per-axis-means layout.
// Axis naming: axial = slice index, sagittal = in-plane rows, coronal =
// in-plane columns. Windows shrink to fit small dimensions and are recorded.
struct MetricReport {
    double psnr_3d = 0.0, ssim_3d = 0.0;
    double psnr_axial = 0.0, ssim_axial = 0.0;
    double psnr_sagittal = 0.0, ssim_sagittal = 0.0;
    double psnr_coronal = 0.0, ssim_coronal = 0.0;
    std::vector<double> psnr_axial_slices, ssim_axial_slices;
    std::vector<double> psnr_sagittal_slices, ssim_sagittal_slices;
    std::vector<double> psnr_coronal_slices, ssim_coronal_slices;
    std::vector<int> window_3d;  // per axis (s, i, j)
    int window_2d = 11;
    double ssim_sigma = 1.5;
    double data_range = 1.0;
};

namespace detail {

inline double mean(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

}  // namespace detail

// Metrics on magnitude images; inputs are expected normalized so data_range=1.
inline MetricReport report(const ImageVolume& ref, const ImageVolume& test, SsimParams p = {}) {
    require_same_shape(ref, test, "metrics report");
    const std::size_t S = ref.slices(), N = ref.n();

    std::vector<double> r(ref.size()), t(test.size());
    for (std::size_t k = 0; k < ref.size(); ++k) {
        r[k] = std::abs(ref[k]);
        t[k] = std::abs(test[k]);
    }

    MetricReport rep;
    rep.ssim_sigma = p.sigma;
    rep.data_range = p.data_range;
    rep.psnr_3d = psnr(r, t, p.data_range);

    const int ws = detail::fit_window(p.window, S);
    const int wn = detail::fit_window(p.window, N);
    rep.window_3d = {ws, wn, wn};
    rep.ssim_3d = detail::ssim_nd(r, t, {S, N, N}, {ws, wn, wn}, p);
    rep.window_2d = p.window;

    auto slice_metrics = [&](int axis, std::vector<double>& ps, std::vector<double>& ss) {
        const std::size_t count = axis == 0 ? S : N;
        const std::size_t rows = axis == 0 ? N : S;
        const std::size_t cols = N;
        const int wr = detail::fit_window(p.window, rows);
        const int wc = detail::fit_window(p.window, cols);
        std::vector<double> a(rows * cols), b(rows * cols);
        for (std::size_t c = 0; c < count; ++c) {
            for (std::size_t u = 0; u < rows; ++u)
                for (std::size_t v = 0; v < cols; ++v) {
                    std::size_t idx;
                    if (axis == 0)
                        idx = (c * N + u) * N + v;  // fixed slice
                    else if (axis == 1)
                        idx = (u * N + c) * N + v;  // fixed row
                    else
                        idx = (u * N + v) * N + c;  // fixed column
                    a[u * cols + v] = r[idx];
                    b[u * cols + v] = t[idx];
                }
            ps.push_back(psnr(a, b, p.data_range));
            ss.push_back(detail::ssim_nd(a, b, {rows, cols}, {wr, wc}, p));
        }
    };

    slice_metrics(0, rep.psnr_axial_slices, rep.ssim_axial_slices);
    slice_metrics(1, rep.psnr_sagittal_slices, rep.ssim_sagittal_slices);
    slice_metrics(2, rep.psnr_coronal_slices, rep.ssim_coronal_slices);
    rep.psnr_axial = detail::mean(rep.psnr_axial_slices);
    rep.ssim_axial = detail::mean(rep.ssim_axial_slices);
    rep.psnr_sagittal = detail::mean(rep.psnr_sagittal_slices);
    rep.ssim_sagittal = detail::mean(rep.ssim_sagittal_slices);
    rep.psnr_coronal = detail::mean(rep.psnr_coronal_slices);
    rep.ssim_coronal = detail::mean(rep.ssim_coronal_slices);
    return rep;
}

namespace detail {

inline nlohmann::json finite_or_string(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

inline nlohmann::json vec_json(const std::vector<double>& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (double x : v) arr.push_back(finite_or_string(x));
    return arr;
}

}  // namespace detail

inline nlohmann::json to_json(const MetricReport& r) {
    using detail::finite_or_string;
    nlohmann::json j;
    j["psnr"] = {{"3d", finite_or_string(r.psnr_3d)},
                 {"axial", finite_or_string(r.psnr_axial)},
                 {"sagittal", finite_or_string(r.psnr_sagittal)},
                 {"coronal", finite_or_string(r.psnr_coronal)}};
    j["ssim"] = {{"3d", r.ssim_3d},
                 {"axial", r.ssim_axial},
                 {"sagittal", r.ssim_sagittal},
                 {"coronal", r.ssim_coronal}};
    j["per_slice"] = {{"psnr_axial", detail::vec_json(r.psnr_axial_slices)},
                      {"ssim_axial", detail::vec_json(r.ssim_axial_slices)},
                      {"psnr_sagittal", detail::vec_json(r.psnr_sagittal_slices)},
                      {"ssim_sagittal", detail::vec_json(r.ssim_sagittal_slices)},
                      {"psnr_coronal", detail::vec_json(r.psnr_coronal_slices)},
                      {"ssim_coronal", detail::vec_json(r.ssim_coronal_slices)}};
    j["params"] = {{"window_3d", r.window_3d},
                   {"window_2d", r.window_2d},
                   {"sigma", r.ssim_sigma},
                   {"data_range", r.data_range}};
    return j;
}

inline std::string to_markdown(const MetricReport& r, const std::string& label = "volume") {
    char buf[512];
    std::string out;
    out += "| | 3D | Axial | Sagittal | Coronal |\n";
    out += "|---|---|---|---|---|\n";
    std::snprintf(buf, sizeof(buf), "| SSIM (%s) | %.4f | %.4f | %.4f | %.4f |\n", label.c_str(),
                  r.ssim_3d, r.ssim_axial, r.ssim_sagittal, r.ssim_coronal);
    out += buf;
    std::snprintf(buf, sizeof(buf), "| PSNR (%s) | %.2f | %.2f | %.2f | %.2f |\n", label.c_str(),
                  r.psnr_3d, r.psnr_axial, r.psnr_sagittal, r.psnr_coronal);
    out += buf;
    return out;
}

}  // namespace r3dm
