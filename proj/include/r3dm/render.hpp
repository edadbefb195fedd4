#pragma once

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "r3dm/errors.hpp"
#include "r3dm/volume.hpp"

namespace r3dm {

namespace detail {

inline void write_png(const std::string& path, std::size_t rows, std::size_t cols,
                      const std::vector<unsigned char>& pixels, int channels) {
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw IoError("cannot open " + path + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        std::fclose(fp);
        throw IoError("png encode failed for " + path);
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(cols), static_cast<png_uint_32>(rows), 8,
                 channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> row_ptrs(rows);
    for (std::size_t i = 0; i < rows; ++i)
        row_ptrs[i] = const_cast<png_bytep>(pixels.data() + i * cols * static_cast<std::size_t>(channels));
    png_write_image(png, row_ptrs.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

// Diverging blue-white-red ramp on [-1, 1].
inline void diverging_color(double v, unsigned char* rgb) {
    v = std::clamp(v, -1.0, 1.0);
    double r = 1.0, g = 1.0, b = 1.0;
    if (v < 0.0) {
        r = 1.0 + v;
        g = 1.0 + v;
    } else {
        g = 1.0 - v;
        b = 1.0 - v;
    }
    rgb[0] = static_cast<unsigned char>(std::lround(255.0 * r));
    rgb[1] = static_cast<unsigned char>(std::lround(255.0 * g));
    rgb[2] = static_cast<unsigned char>(std::lround(255.0 * b));
}

}  // namespace detail

inline void write_png_gray(const std::string& path, std::size_t rows, std::size_t cols,
                           const std::vector<double>& values) {
    std::vector<unsigned char> pixels(rows * cols);
    for (std::size_t k = 0; k < pixels.size(); ++k)
        pixels[k] = static_cast<unsigned char>(std::lround(255.0 * std::clamp(values[k], 0.0, 1.0)));
    detail::write_png(path, rows, cols, pixels, 1);
}

// Per-slice grayscale magnitude images; with a reference volume, signed
// magnitude difference maps on a diverging ramp clipped to +-diff_range.
inline std::vector<std::string> render_volume(const std::string& out_dir, const ImageVolume& vol,
                                              const ImageVolume* ref = nullptr, double diff_range = 0.02) {
    if (ref && !vol.same_shape(*ref)) throw InvalidInputError("render: reference shape mismatch");
    if (!(diff_range > 0.0)) throw ConfigError("render: diff range must be > 0");
    const std::size_t S = vol.slices(), N = vol.n();
    std::vector<std::string> written;
    char name[64];

    for (std::size_t s = 0; s < S; ++s) {
        std::vector<double> mag(N * N);
        for (std::size_t k = 0; k < N * N; ++k) mag[k] = std::abs(vol.slice_ptr(s)[k]);
        std::snprintf(name, sizeof(name), "/slice_%03zu.png", s);
        write_png_gray(out_dir + name, N, N, mag);
        written.push_back(out_dir + name);

        if (!ref) continue;
        std::vector<unsigned char> rgb(N * N * 3);
        for (std::size_t k = 0; k < N * N; ++k) {
            const double d = std::abs(vol.slice_ptr(s)[k]) - std::abs(ref->slice_ptr(s)[k]);
            detail::diverging_color(d / diff_range, rgb.data() + 3 * k);
        }
        std::snprintf(name, sizeof(name), "/diff_%03zu.png", s);
        detail::write_png(out_dir + name, N, N, rgb, 3);
        written.push_back(out_dir + name);
    }
    return written;
}

}  // namespace r3dm
