#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "r3dm/errors.hpp"
#include "r3dm/forward_model.hpp"
#include "r3dm/masks.hpp"
#include "r3dm/volume.hpp"

namespace r3dm {

// On-disk formats: raw little-endian float32 payloads with JSON sidecars at
// "<path>.json". Storage is float32 for economy; in-memory math stays double.

inline std::vector<char> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::string& path, const void* data, std::size_t count) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(count));
    if (!out) throw IoError("short write to " + path);
}

inline void write_text_file(const std::string& path, const std::string& text) {
    write_file_bytes(path, text.data(), text.size());
}

inline std::uint64_t fnv1a64(const void* data, std::size_t count) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t k = 0; k < count; ++k) {
        h ^= p[k];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64_file(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    return fnv1a64(bytes.data(), bytes.size());
}

inline nlohmann::json load_json(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    nlohmann::json j = nlohmann::json::parse(bytes.begin(), bytes.end(), nullptr, false);
    if (j.is_discarded()) throw IoError("malformed JSON in " + path);
    return j;
}

struct VolumeFileMeta {
    std::string dtype;  // "f32" or "c64f32"
    std::array<double, 3> voxel_size = {1.0, 1.0, 1.0};
    std::string description;
};

inline void write_volume(const std::string& path, const Volume& vol, const std::string& dtype = "c64f32",
                         const std::array<double, 3>& voxel_size = {1.0, 1.0, 1.0},
                         const std::string& description = "") {
    std::vector<float> payload;
    if (dtype == "f32") {
        payload.resize(vol.size());
        for (std::size_t k = 0; k < vol.size(); ++k) payload[k] = static_cast<float>(vol[k].real());
    } else if (dtype == "c64f32") {
        payload.resize(vol.size() * 2);
        for (std::size_t k = 0; k < vol.size(); ++k) {
            payload[2 * k] = static_cast<float>(vol[k].real());
            payload[2 * k + 1] = static_cast<float>(vol[k].imag());
        }
    } else {
        throw ConfigError("write_volume: unknown dtype " + dtype);
    }
    write_file_bytes(path, payload.data(), payload.size() * sizeof(float));

    nlohmann::json side;
    side["dims"] = {vol.slices(), vol.n(), vol.n()};
    side["dtype"] = dtype;
    side["voxel_size"] = voxel_size;
    side["description"] = description;
    write_text_file(path + ".json", side.dump(2) + "\n");
}

inline Volume read_volume(const std::string& path, VolumeFileMeta* meta = nullptr) {
    const nlohmann::json side = load_json(path + ".json");
    if (!side.contains("dims") || !side.contains("dtype")) throw IoError("volume sidecar missing dims/dtype: " + path);
    const auto dims = side["dims"].get<std::vector<std::size_t>>();
    if (dims.size() != 3 || dims[1] != dims[2]) throw IoError("volume sidecar has bad dims: " + path);
    const std::string dtype = side["dtype"].get<std::string>();

    const auto bytes = read_file_bytes(path);
    const std::size_t count = dims[0] * dims[1] * dims[2];
    const std::size_t expect = count * sizeof(float) * (dtype == "c64f32" ? 2 : 1);
    if (dtype != "f32" && dtype != "c64f32") throw IoError("volume sidecar has unknown dtype: " + path);
    if (bytes.size() != expect) throw IoError("payload size does not match sidecar dims: " + path);

    Volume vol(dims[0], dims[1]);
    const float* payload = reinterpret_cast<const float*>(bytes.data());
    if (dtype == "f32") {
        for (std::size_t k = 0; k < count; ++k) vol[k] = cdouble(payload[k], 0.0);
    } else {
        for (std::size_t k = 0; k < count; ++k) vol[k] = cdouble(payload[2 * k], payload[2 * k + 1]);
    }
    if (meta) {
        meta->dtype = dtype;
        if (side.contains("voxel_size")) {
            const auto vs = side["voxel_size"].get<std::vector<double>>();
            if (vs.size() == 3) meta->voxel_size = {vs[0], vs[1], vs[2]};
        }
        if (side.contains("description")) meta->description = side["description"].get<std::string>();
    }
    return vol;
}

inline void write_mask(const std::string& path, const Mask& mask) {
    write_file_bytes(path, mask.pattern.data(), mask.pattern.size());
    nlohmann::json side;
    side["kind"] = mask_kind_name(mask.kind);
    side["n"] = mask.n;
    side["accel"] = mask.accel;
    side["center_frac"] = mask.center_frac;
    side["seed"] = mask.seed;
    side["sd"] = mask.gaussian_sd;
    if (!mask.warning.empty()) side["warning"] = mask.warning;
    write_text_file(path + ".json", side.dump(2) + "\n");
}

inline Mask read_mask(const std::string& path) {
    const nlohmann::json side = load_json(path + ".json");
    Mask mask;
    mask.n = side.at("n").get<std::size_t>();
    mask.kind = side.at("kind").get<std::string>() == "gaussian" ? MaskKind::gaussian : MaskKind::uniform;
    mask.accel = side.at("accel").get<double>();
    mask.center_frac = side.at("center_frac").get<double>();
    mask.seed = side.at("seed").get<std::uint64_t>();
    mask.gaussian_sd = side.value("sd", 0.0);
    mask.warning = side.value("warning", std::string());

    const auto bytes = read_file_bytes(path);
    if (bytes.size() != mask.n * mask.n) throw IoError("mask payload size mismatch: " + path);
    mask.pattern.resize(bytes.size());
    for (std::size_t k = 0; k < bytes.size(); ++k) {
        const auto b = static_cast<std::uint8_t>(bytes[k]);
        if (b > 1) throw IoError("mask payload has entries outside {0,1}: " + path);
        mask.pattern[k] = b;
    }
    return mask;
}

// A measurement on disk is its masked k-space plus the mask and a small meta
// file; the DC-line projections are re-extracted on load, which preserves
// their consistency with the stored k-space by construction.
inline void write_measurement(const std::string& prefix, const UndersampledMeasurement& meas) {
    write_volume(prefix + ".kspace.raw", meas.kspace, "c64f32");
    write_mask(prefix + ".mask.raw", meas.mask);
    nlohmann::json meta;
    meta["noise_sigma"] = meas.noise_sigma;
    meta["seed"] = meas.seed;
    write_text_file(prefix + ".meas.json", meta.dump(2) + "\n");
}

inline UndersampledMeasurement read_measurement(const std::string& prefix) {
    UndersampledMeasurement meas;
    meas.kspace = read_volume(prefix + ".kspace.raw");
    meas.mask = read_mask(prefix + ".mask.raw");
    if (meas.mask.n != meas.kspace.n()) throw IoError("measurement mask/k-space shape mismatch: " + prefix);
    const nlohmann::json meta = load_json(prefix + ".meas.json");
    meas.noise_sigma = meta.value("noise_sigma", 0.0);
    meas.seed = meta.value("seed", std::uint64_t{0});
    detail::extract_projections(meas);
    return meas;
}

}  // namespace r3dm
