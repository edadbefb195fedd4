// Command-line front end: phantom/mask generation, acquisition simulation,
// reconstruction, metrics, spectral checks, and slice rendering. Every
// subcommand writes a JSON run manifest next to its primary output.

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "r3dm/r3dm.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace r3dm;

namespace {

constexpr const char* k_version = "0.1.0";

struct ManifestWriter {
    std::string subcommand;
    std::vector<std::string> argv;
    json config = json::object();
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    void write(const std::string& path) const {
        json m;
        m["tool"] = "r3dm";
        m["version"] = k_version;
        m["subcommand"] = subcommand;
        m["argv"] = argv;
        m["config"] = config;
        char hex[32];
        json ins = json::array();
        for (const auto& p : inputs) {
            std::snprintf(hex, sizeof(hex), "%016llx",
                          static_cast<unsigned long long>(fnv1a64_file(p)));
            ins.push_back({{"path", p}, {"fnv1a64", hex}});
        }
        m["inputs"] = ins;
        m["outputs"] = outputs;
        std::snprintf(hex, sizeof(hex), "%016llx",
                      static_cast<unsigned long long>(fnv1a64(config.dump().data(), config.dump().size())));
        m["config_fnv1a64"] = hex;
        m["wall_time_ms"] =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        write_text_file(path, m.dump(2) + "\n");
    }
};

// Reject unknown keys so config typos fail loudly.
void validate_keys(const json& j, const std::vector<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError(where + ": unknown key '" + key + "'");
        (void)value;
    }
}

struct ExperimentConfig {
    NoiseSchedule schedule = linear_schedule(50);
    int schedule_steps = 50;
    double beta_start = 1e-4, beta_end = 0.02;
    ReconConfig recon;
    json model = {{"kind", "tweedie_dct"}};
    std::uint64_t seed = 0;
    bool emit_trace = false;
    ComplexBridge bridge = ComplexBridge::real_part;

    json resolved() const {
        json j;
        j["schedule"] = {{"T", schedule_steps}, {"beta_start", beta_start}, {"beta_end", beta_end}};
        const char* mode = recon.step_mode == StepMode::fixed ? "fixed"
                           : recon.step_mode == StepMode::closed_form ? "closed_form"
                                                                        : "power_iteration";
        j["recon"] = {{"m", recon.inner_iters},       {"lambda", recon.lambda},
                      {"rho", recon.rho},             {"alpha", recon.reg.alpha},
                      {"tv", recon.reg.tv_on},        {"tv_weight", recon.reg.tv_weight},
                      {"step_mode", mode},            {"prox_raw_alpha", recon.prox_raw_alpha}};
        j["model"] = model;
        j["seed"] = seed;
        j["emit_trace"] = emit_trace;
        j["complex_bridge"] = bridge == ComplexBridge::real_part ? "real_part" : "magnitude";
        return j;
    }
};

ExperimentConfig load_experiment_config(const std::string& path) {
    ExperimentConfig cfg;
    if (path.empty()) return cfg;
    const json j = load_json(path);
    validate_keys(j, {"schedule", "recon", "model", "seed", "emit_trace", "complex_bridge"}, "config");

    if (j.contains("schedule")) {
        const json& s = j["schedule"];
        validate_keys(s, {"T", "beta_start", "beta_end"}, "config.schedule");
        cfg.schedule_steps = s.value("T", cfg.schedule_steps);
        cfg.beta_start = s.value("beta_start", cfg.beta_start);
        cfg.beta_end = s.value("beta_end", cfg.beta_end);
    }
    cfg.schedule = cfg.schedule_steps > 0 ? linear_schedule(cfg.schedule_steps, cfg.beta_start, cfg.beta_end)
                                          : NoiseSchedule{};

    if (j.contains("recon")) {
        const json& r = j["recon"];
        validate_keys(r, {"m", "lambda", "rho", "alpha", "tv", "tv_weight", "step_mode", "prox_raw_alpha"},
                      "config.recon");
        cfg.recon.inner_iters = r.value("m", cfg.recon.inner_iters);
        cfg.recon.lambda = r.value("lambda", cfg.recon.lambda);
        cfg.recon.rho = r.value("rho", cfg.recon.rho);
        cfg.recon.reg.alpha = r.value("alpha", cfg.recon.reg.alpha);
        cfg.recon.reg.tv_on = r.value("tv", cfg.recon.reg.tv_on);
        cfg.recon.reg.tv_weight = r.value("tv_weight", cfg.recon.reg.tv_weight);
        cfg.recon.prox_raw_alpha = r.value("prox_raw_alpha", cfg.recon.prox_raw_alpha);
        const std::string mode = r.value("step_mode", std::string("power_iteration"));
        if (mode == "fixed")
            cfg.recon.step_mode = StepMode::fixed;
        else if (mode == "closed_form")
            cfg.recon.step_mode = StepMode::closed_form;
        else if (mode == "power_iteration")
            cfg.recon.step_mode = StepMode::power_iteration;
        else
            throw ConfigError("config.recon.step_mode: unknown mode '" + mode + "'");
    }

    if (j.contains("model")) {
        cfg.model = j["model"];
        validate_keys(cfg.model, {"kind", "threshold_scale", "mu0", "var0", "command", "timeout_ms"},
                      "config.model");
        if (!cfg.model.contains("kind")) throw ConfigError("config.model: missing 'kind'");
    }
    cfg.seed = j.value("seed", cfg.seed);
    cfg.emit_trace = j.value("emit_trace", cfg.emit_trace);
    const std::string bridge = j.value("complex_bridge", std::string("real_part"));
    if (bridge == "real_part")
        cfg.bridge = ComplexBridge::real_part;
    else if (bridge == "magnitude")
        cfg.bridge = ComplexBridge::magnitude;
    else
        throw ConfigError("config.complex_bridge: unknown value '" + bridge + "'");
    return cfg;
}

std::unique_ptr<ScoreModel> make_model(const json& spec, const NoiseSchedule* sched,
                                       const UndersampledMeasurement& meas) {
    const std::string kind = spec.value("kind", std::string("tweedie_dct"));
    if (kind == "zero") return std::make_unique<ZeroScoreModel>();
    if (kind == "tweedie_dct")
        return std::make_unique<TweedieDenoiserModel>(make_dct_denoiser(spec.value("threshold_scale", 1.0)),
                                                      sched);
    if (kind == "gaussian") {
        const std::size_t S = meas.kspace.slices(), N = meas.kspace.n();
        Volume mu0(S, N);
        if (spec.contains("mu0") && spec["mu0"].is_string()) {
            mu0 = read_volume(spec["mu0"].get<std::string>());
            if (mu0.slices() != S || mu0.n() != N)
                throw ConfigError("model.mu0 volume shape does not match the measurement");
        } else {
            const double m = spec.value("mu0", 0.0);
            for (auto& z : mu0.raw()) z = m;
        }
        return std::make_unique<GaussianScoreModel>(std::move(mu0), spec.value("var0", 1.0), sched);
    }
    if (kind == "external") {
        if (!spec.contains("command")) throw ConfigError("model.external: missing 'command'");
        return std::make_unique<ExternalScoreModel>(spec["command"].get<std::string>(),
                                                    spec.value("timeout_ms", 60000));
    }
    throw ConfigError("unknown score model kind '" + kind + "'");
}

int run(int argc, char** argv) {
    CLI::App app{"Regularized diffusion reconstruction for undersampled volumetric k-space"};
    app.require_subcommand(1);
    argv = app.ensure_utf8(argv);

    std::vector<std::string> arg_strings(argv, argv + argc);

    // ---- phantom gen ----
    auto* phantom = app.add_subcommand("phantom", "synthetic ground-truth volumes");
    auto* phantom_gen = phantom->add_subcommand("gen", "generate a phantom volume");
    PhantomSpec pspec;
    std::string phantom_kind = "tubes", phantom_out, phantom_dtype = "f32";
    phantom_gen->add_option("--kind", phantom_kind, "tubes|ellipsoids|gaussian")->capture_default_str();
    phantom_gen->add_option("--s", pspec.slices, "slice count")->capture_default_str();
    phantom_gen->add_option("--n", pspec.n, "in-plane size")->capture_default_str();
    phantom_gen->add_option("--seed", pspec.seed, "rng seed")->capture_default_str();
    phantom_gen->add_option("--tubes", pspec.tube_count, "tube count")->capture_default_str();
    phantom_gen->add_option("--radius", pspec.tube_radius, "tube radius")->capture_default_str();
    phantom_gen->add_option("--ellipsoids", pspec.ellipsoid_count, "ellipsoid count")->capture_default_str();
    phantom_gen->add_option("--mean", pspec.field_mean, "field mean")->capture_default_str();
    phantom_gen->add_option("--sd", pspec.field_sd, "field standard deviation")->capture_default_str();
    phantom_gen->add_option("--dtype", phantom_dtype, "f32|c64f32")->capture_default_str();
    phantom_gen->add_option("--out", phantom_out, "output volume path")->required();

    // ---- mask gen ----
    auto* mask_cmd = app.add_subcommand("mask", "undersampling masks");
    auto* mask_gen = mask_cmd->add_subcommand("gen", "generate a mask");
    std::string mask_kind = "uniform", mask_out;
    std::size_t mask_n = 64;
    double mask_accel = 2.0, mask_center = 0.15;
    std::uint64_t mask_seed = 0;
    mask_gen->add_option("--kind", mask_kind, "uniform|gaussian")->capture_default_str();
    mask_gen->add_option("--n", mask_n, "grid size")->capture_default_str();
    mask_gen->add_option("--accel", mask_accel, "acceleration factor")->capture_default_str();
    mask_gen->add_option("--center-frac", mask_center, "center fraction")->capture_default_str();
    mask_gen->add_option("--seed", mask_seed, "rng seed")->capture_default_str();
    mask_gen->add_option("--out", mask_out, "output mask path")->required();

    // ---- acquire ----
    auto* acquire_cmd = app.add_subcommand("acquire", "simulate an undersampled acquisition");
    std::string acq_input, acq_mask, acq_out;
    double acq_sigma = 0.0;
    std::uint64_t acq_seed = 0;
    acquire_cmd->add_option("--input", acq_input, "ground-truth volume")->required();
    acquire_cmd->add_option("--mask", acq_mask, "mask path")->required();
    acquire_cmd->add_option("--sigma", acq_sigma, "complex noise std")->capture_default_str();
    acquire_cmd->add_option("--seed", acq_seed, "noise seed")->capture_default_str();
    acquire_cmd->add_option("--out", acq_out, "measurement prefix")->required();

    // ---- recon ----
    auto* recon_cmd = app.add_subcommand("recon", "reconstruct from a measurement");
    std::string recon_mode, recon_meas, recon_out, recon_config, recon_gt, recon_trace;
    recon_cmd->add_option("mode", recon_mode, "zero-filled|pgd|r3dm")->required();
    recon_cmd->add_option("--meas", recon_meas, "measurement prefix")->required();
    recon_cmd->add_option("--out", recon_out, "output volume path")->required();
    recon_cmd->add_option("--config", recon_config, "experiment config JSON");
    recon_cmd->add_option("--gt", recon_gt, "ground truth for trace metrics");
    recon_cmd->add_option("--trace", recon_trace, "trace CSV path");

    // ---- metrics ----
    auto* metrics_cmd = app.add_subcommand("metrics", "quality report against a reference");
    std::string met_ref, met_test, met_out, met_md;
    metrics_cmd->add_option("--ref", met_ref, "reference volume")->required();
    metrics_cmd->add_option("--test", met_test, "volume under test")->required();
    metrics_cmd->add_option("--out", met_out, "JSON report path")->required();
    metrics_cmd->add_option("--markdown", met_md, "also write a markdown table");

    // ---- spectral check ----
    auto* spectral_cmd = app.add_subcommand("spectral", "operator spectrum verification");
    auto* spectral_check = spectral_cmd->add_subcommand("check", "run the spectrum checks");
    std::size_t spec_n = 16, spec_s = 2;
    std::string spec_mask, spec_out;
    spectral_check->add_option("--n", spec_n, "grid size")->capture_default_str();
    spectral_check->add_option("--s", spec_s, "slice count")->capture_default_str();
    spectral_check->add_option("--mask", spec_mask, "mask path (defaults to all-ones)");
    spectral_check->add_option("--out", spec_out, "JSON report path")->required();

    // ---- render ----
    auto* render_cmd = app.add_subcommand("render", "write slice PNGs (plus difference maps)");
    std::string ren_input, ren_ref, ren_outdir;
    double ren_range = 0.02;
    render_cmd->add_option("--input", ren_input, "volume to render")->required();
    render_cmd->add_option("--ref", ren_ref, "reference volume for difference maps");
    render_cmd->add_option("--outdir", ren_outdir, "output directory")->required();
    render_cmd->add_option("--diff-range", ren_range, "difference clip range")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    if (const char* threads = std::getenv("R3DM_THREADS")) {
        const int t = std::atoi(threads);
        if (t >= 1) fft_thread_count() = t;
    }

    ManifestWriter manifest;
    manifest.argv = arg_strings;

    if (phantom_gen->parsed()) {
        manifest.subcommand = "phantom gen";
        if (phantom_kind == "tubes")
            pspec.kind = PhantomKind::tubes;
        else if (phantom_kind == "ellipsoids")
            pspec.kind = PhantomKind::ellipsoids;
        else if (phantom_kind == "gaussian")
            pspec.kind = PhantomKind::gaussian_field;
        else
            throw ConfigError("phantom gen: unknown kind '" + phantom_kind + "'");
        const Volume vol = gen_phantom(pspec);
        write_volume(phantom_out, vol, phantom_dtype);
        manifest.config = {{"kind", phantom_kind}, {"s", pspec.slices},        {"n", pspec.n},
                           {"seed", pspec.seed},   {"tubes", pspec.tube_count}, {"radius", pspec.tube_radius},
                           {"ellipsoids", pspec.ellipsoid_count},              {"mean", pspec.field_mean},
                           {"sd", pspec.field_sd}, {"dtype", phantom_dtype}};
        manifest.outputs = {phantom_out, phantom_out + ".json"};
        manifest.write(phantom_out + ".manifest.json");
        return exit_ok;
    }

    if (mask_gen->parsed()) {
        manifest.subcommand = "mask gen";
        Mask mask;
        if (mask_kind == "uniform")
            mask = gen_uniform_mask(mask_n, mask_accel, mask_center, mask_seed);
        else if (mask_kind == "gaussian")
            mask = gen_gaussian_mask(mask_n, mask_accel, mask_center, mask_seed);
        else
            throw ConfigError("mask gen: unknown kind '" + mask_kind + "'");
        if (!mask.warning.empty()) std::cerr << "warning: " << mask.warning << "\n";
        write_mask(mask_out, mask);
        manifest.config = {{"kind", mask_kind},
                           {"n", mask_n},
                           {"accel", mask_accel},
                           {"center_frac", mask_center},
                           {"seed", mask_seed}};
        manifest.outputs = {mask_out, mask_out + ".json"};
        manifest.write(mask_out + ".manifest.json");
        return exit_ok;
    }

    if (acquire_cmd->parsed()) {
        manifest.subcommand = "acquire";
        manifest.inputs = {acq_input, acq_mask};
        const Volume gt = read_volume(acq_input);
        const Mask mask = read_mask(acq_mask);
        const auto meas = acquire(gt, mask, acq_sigma, acq_seed);
        write_measurement(acq_out, meas);
        manifest.config = {{"sigma", acq_sigma}, {"seed", acq_seed}};
        manifest.outputs = {acq_out + ".kspace.raw", acq_out + ".mask.raw", acq_out + ".meas.json"};
        manifest.write(acq_out + ".manifest.json");
        return exit_ok;
    }

    if (recon_cmd->parsed()) {
        manifest.subcommand = "recon " + recon_mode;
        manifest.inputs = {recon_meas + ".kspace.raw", recon_meas + ".mask.raw"};
        const auto meas = read_measurement(recon_meas);
        ExperimentConfig cfg = load_experiment_config(recon_config);
        manifest.config = cfg.resolved();

        Volume gt;
        const bool has_gt = !recon_gt.empty();
        if (has_gt) {
            gt = read_volume(recon_gt);
            manifest.inputs.push_back(recon_gt);
        }

        ReconResult result;
        if (recon_mode == "zero-filled") {
            result.volume = zero_filled(meas);
        } else if (recon_mode == "pgd" || recon_mode == "r3dm") {
            R3dmConfig rc;
            rc.schedule = cfg.schedule;
            rc.recon = cfg.recon;
            rc.seed = cfg.seed;
            rc.emit_trace = cfg.emit_trace || !recon_trace.empty();
            rc.bridge = cfg.bridge;
            if (has_gt) rc.ground_truth = &gt;
            std::unique_ptr<ScoreModel> model;
            if (recon_mode == "r3dm") {
                model = make_model(cfg.model, &rc.schedule, meas);
                rc.model = model.get();
                result = reconstruct(meas, rc);
            } else {
                result = reconstruct_pgd_only(meas, rc);
            }
            if (!recon_trace.empty()) {
                write_text_file(recon_trace, recon_trace_csv(result.trace));
                manifest.outputs.push_back(recon_trace);
            }
        } else {
            throw ConfigError("recon: unknown mode '" + recon_mode + "'");
        }
        write_volume(recon_out, result.volume, "c64f32");
        manifest.outputs.insert(manifest.outputs.begin(), {recon_out, recon_out + ".json"});
        manifest.write(recon_out + ".manifest.json");
        return exit_ok;
    }

    if (metrics_cmd->parsed()) {
        manifest.subcommand = "metrics";
        manifest.inputs = {met_ref, met_test};
        const Volume ref = normalize(magnitude(read_volume(met_ref)));
        const Volume test = normalize(magnitude(read_volume(met_test)));
        const MetricReport rep = report(ref, test);
        write_text_file(met_out, to_json(rep).dump(2) + "\n");
        manifest.outputs = {met_out};
        if (!met_md.empty()) {
            write_text_file(met_md, to_markdown(rep));
            manifest.outputs.push_back(met_md);
        }
        manifest.write(met_out + ".manifest.json");
        return exit_ok;
    }

    if (spectral_check->parsed()) {
        manifest.subcommand = "spectral check";
        Mask mask = spec_mask.empty() ? gen_uniform_mask(spec_n, 1.0, 0.0, 0) : read_mask(spec_mask);
        if (!spec_mask.empty()) {
            manifest.inputs = {spec_mask};
            spec_n = mask.n;
        }
        json out;
        out["masked_fourier_2d"] = to_json(check_A_spectrum(mask, spec_s));
        out["masked_fourier_1d_ky"] = to_json(check_Ay_spectrum(mask, spec_s));
        out["masked_fourier_1d_kx"] = to_json(check_Ax_spectrum(mask, spec_s));
        out["difference_gram"] = to_json(check_B_spectrum(spec_n, 1));
        const auto dhd = dhd_eigenvalues(spec_n);
        out["first_difference_gram"] = {{"computed", dhd.computed}, {"formula", dhd.formula}};
        json gauss = json::array();
        for (int d : {1, 2})
            for (double sigma : {0.5, 1.0, 2.0}) gauss.push_back(to_json(check_gaussian_lipschitz(d, sigma)));
        out["gaussian_gradient_bound"] = gauss;
        write_text_file(spec_out, out.dump(2) + "\n");
        manifest.config = {{"n", spec_n}, {"s", spec_s}};
        manifest.outputs = {spec_out};
        manifest.write(spec_out + ".manifest.json");
        return exit_ok;
    }

    if (render_cmd->parsed()) {
        manifest.subcommand = "render";
        manifest.inputs = {ren_input};
        const Volume vol = read_volume(ren_input);
        Volume ref;
        const bool has_ref = !ren_ref.empty();
        if (has_ref) {
            ref = read_volume(ren_ref);
            manifest.inputs.push_back(ren_ref);
        }
        fs::create_directories(ren_outdir);
        manifest.outputs = render_volume(ren_outdir, vol, has_ref ? &ref : nullptr, ren_range);
        manifest.config = {{"diff_range", ren_range}};
        manifest.write(ren_outdir + "/manifest.json");
        return exit_ok;
    }

    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const InvalidInputError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return exit_io;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return exit_numerical;
    } catch (const ExternalModelError& e) {
        std::cerr << "external model failure: " << e.what() << "\n";
        return exit_external_model;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
