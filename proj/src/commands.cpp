#include "csplat/cli.hpp"

#include "csplat/baseline.hpp"
#include "csplat/cloud.hpp"
#include "csplat/io.hpp"
#include "csplat/loss.hpp"
#include "csplat/metrics.hpp"
#include "csplat/optim.hpp"
#include "csplat/recurrence.hpp"
#include "csplat/rng.hpp"
#include "csplat/spectral.hpp"
#include "csplat/splat.hpp"
#include "csplat/synth.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace csplat::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "0.1.0";
constexpr std::uint64_t kCausticSeedOffset = 1000003;

json formatVersions() {
    return json{{"tool", kToolVersion}, {"fimg", 1}, {"pose", 1}, {"cloud", 1}};
}

template <typename T>
T jget(const json& j, const char* key, T fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

std::string frameName(int f) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%03d", f);
    return buf;
}

void ensureDir(const fs::path& p) {
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw IoError("cannot create directory " + p.string() + ": " + ec.message());
}

void writeJsonFile(const fs::path& path, const json& j) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path.string());
    os << j.dump(2) << '\n';
    if (!os) throw IoError("write failed for " + path.string());
}

void writeImagePair(const fs::path& dir, const std::string& stem, const Imaged& img,
                    double preview_offset = 0.0) {
    writeFimg(dir / (stem + ".fimg"), img);
    if (preview_offset != 0.0) {
        Imaged shifted = img;
        for (auto& c : shifted.ch) c += preview_offset;
        writePng8(dir / (stem + ".png"), shifted);
    } else {
        writePng8(dir / (stem + ".png"), img);
    }
}

std::vector<Imaged> readImageDir(const fs::path& dir) {
    std::vector<Imaged> out;
    for (int f = 0;; ++f) {
        const fs::path p = dir / (frameName(f) + ".fimg");
        if (!fs::exists(p)) break;
        out.push_back(readFimg(p));
    }
    return out;
}

std::string fmtDouble(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace

json loadJsonFile(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config " + path.string());
    try {
        return json::parse(is);
    } catch (const json::exception& e) {
        throw ConfigError("bad JSON in " + path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// SynthConfig

SynthConfig SynthConfig::fromJson(const json& j) {
    SynthConfig c;
    c.width = jget(j, "width", c.width);
    c.height = jget(j, "height", c.height);
    c.frames = jget(j, "frames", c.frames);
    c.seed = jget(j, "seed", c.seed);
    const json t = jget(j, "trajectory", json::object());
    c.pattern = jget(t, "pattern", c.pattern);
    c.rows = jget(t, "rows", c.rows);
    c.altitude = jget(t, "altitude", c.altitude);
    c.along_overlap = jget(t, "along_overlap", c.along_overlap);
    c.cross_overlap = jget(t, "cross_overlap", c.cross_overlap);
    c.arc_radius = jget(t, "arc_radius", c.arc_radius);
    c.focal_px = jget(t, "focal_px", c.focal_px);
    const json s = jget(j, "scene", json::object());
    c.num_gaussians = jget(s, "num_gaussians", c.num_gaussians);
    c.relief_amplitude = jget(s, "relief_amplitude", c.relief_amplitude);
    c.relief_cycles = jget(s, "relief_cycles", c.relief_cycles);
    c.scene_jitter = jget(s, "jitter", c.scene_jitter);
    c.extent_margin = jget(s, "extent_margin", c.extent_margin);
    const json k = jget(j, "caustic", json::object());
    c.caustic_mode = jget(k, "mode", c.caustic_mode);
    c.caustic_components = jget(k, "num_components", c.caustic_components);
    c.freq_min = jget(k, "freq_min", c.freq_min);
    c.freq_max = jget(k, "freq_max", c.freq_max);
    c.speed_min = jget(k, "speed_min", c.speed_min);
    c.speed_max = jget(k, "speed_max", c.speed_max);
    c.amplitude = jget(k, "amplitude", c.amplitude);
    c.chroma_jitter = jget(k, "chroma_jitter", c.chroma_jitter);
    c.rectify = jget(k, "rectify", c.rectify);
    c.clamp_max = jget(j, "clamp_max", c.clamp_max);
    return c;
}

json SynthConfig::toJson() const {
    return json{
        {"width", width},
        {"height", height},
        {"frames", frames},
        {"seed", seed},
        {"trajectory",
         {{"pattern", pattern},
          {"rows", rows},
          {"altitude", altitude},
          {"along_overlap", along_overlap},
          {"cross_overlap", cross_overlap},
          {"arc_radius", arc_radius},
          {"focal_px", focal_px}}},
        {"scene",
         {{"num_gaussians", num_gaussians},
          {"relief_amplitude", relief_amplitude},
          {"relief_cycles", relief_cycles},
          {"jitter", scene_jitter},
          {"extent_margin", extent_margin}}},
        {"caustic",
         {{"mode", caustic_mode},
          {"num_components", caustic_components},
          {"freq_min", freq_min},
          {"freq_max", freq_max},
          {"speed_min", speed_min},
          {"speed_max", speed_max},
          {"amplitude", amplitude},
          {"chroma_jitter", chroma_jitter},
          {"rectify", rectify}}},
        {"clamp_max", clamp_max},
    };
}

fs::path runSynth(const SynthConfig& cfg, const fs::path& out_dir) {
    if (cfg.width < 16 || cfg.height < 16) throw ConfigError("synth: image too small");
    if (cfg.frames < 1) throw ConfigError("synth: frames < 1");

    TrajectorySpec<double> traj;
    if (cfg.pattern == "lawnmower") traj.pattern = TrajectorySpec<double>::Pattern::Lawnmower;
    else if (cfg.pattern == "arc") traj.pattern = TrajectorySpec<double>::Pattern::Arc;
    else if (cfg.pattern == "static") traj.pattern = TrajectorySpec<double>::Pattern::Static;
    else throw ConfigError("synth: unknown trajectory pattern '" + cfg.pattern + "'");
    traj.frames = cfg.frames;
    traj.rows = cfg.rows;
    traj.altitude = cfg.altitude;
    traj.along_overlap = cfg.along_overlap;
    traj.cross_overlap = cfg.cross_overlap;
    traj.arc_radius = cfg.arc_radius;
    traj.width = cfg.width;
    traj.height = cfg.height;
    traj.focal_px = cfg.focal_px;

    std::vector<Camerad> cameras;
    try {
        cameras = makeTrajectory(traj);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("synth: ") + e.what());
    }

    // Plane extents cover the union of camera footprints with a margin.
    double min_x = 0, max_x = 0, min_y = 0, max_y = 0;
    for (const auto& cam : cameras) {
        const auto c = cam.center();
        min_x = std::min(min_x, c.x());
        max_x = std::max(max_x, c.x());
        min_y = std::min(min_y, c.y());
        max_y = std::max(max_y, c.y());
    }
    SceneSpec<double> scene;
    scene.num_gaussians = cfg.num_gaussians;
    scene.extent_x = (0.5 * (max_x - min_x) + 0.5 * traj.footprintWidth()) * cfg.extent_margin;
    scene.extent_y = (0.5 * (max_y - min_y) + 0.5 * traj.footprintHeight()) * cfg.extent_margin;
    scene.relief_amplitude = cfg.relief_amplitude;
    scene.relief_cycles = cfg.relief_cycles;
    scene.jitter = cfg.scene_jitter;
    scene.seed = cfg.seed;

    CausticFieldSpec<double> caustic;
    if (cfg.caustic_mode == "sinusoid-mixture")
        caustic.mode = CausticFieldSpec<double>::Mode::SinusoidMixture;
    else if (cfg.caustic_mode == "refraction")
        caustic.mode = CausticFieldSpec<double>::Mode::Refraction;
    else
        throw ConfigError("synth: unknown caustic mode '" + cfg.caustic_mode + "'");
    caustic.num_components = cfg.caustic_components;
    caustic.freq_min = cfg.freq_min;
    caustic.freq_max = cfg.freq_max;
    caustic.speed_min = cfg.speed_min;
    caustic.speed_max = cfg.speed_max;
    caustic.amplitude = cfg.amplitude;
    caustic.chroma_jitter = cfg.chroma_jitter;
    caustic.rectify = cfg.rectify;
    caustic.seed = cfg.seed + kCausticSeedOffset;

    SceneResult<double> sr;
    try {
        sr = makeScene(scene);
        caustic.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("synth: ") + e.what());
    }

    ensureDir(out_dir);
    ensureDir(out_dir / "images");
    ensureDir(out_dir / "gt_clean");
    ensureDir(out_dir / "gt_caustic");

    std::int64_t clamped = 0, total = 0;
    for (int f = 0; f < cfg.frames; ++f) {
        const Imaged clean = render(sr.cloud, cameras[size_t(f)], cfg.width, cfg.height);
        const Imaged field = makeCaustic(caustic, f, cfg.width, cfg.height);
        Imaged obs = clean + field;
        for (auto& c : obs.ch) {
            clamped += ((c < 0.0) || (c > cfg.clamp_max)).count();
            total += c.size();
            c = c.max(0.0).min(cfg.clamp_max);
        }
        writeImagePair(out_dir / "images", frameName(f), obs);
        writeImagePair(out_dir / "gt_clean", frameName(f), clean);
        writeImagePair(out_dir / "gt_caustic", frameName(f), field, 0.5);
    }

    writePoses(out_dir / "poses.txt", cameras, cfg.width, cfg.height);
    writeCloud(out_dir / "cloud_gt.txt", sr.cloud);

    json manifest{
        {"kind", "dataset"},
        {"format_versions", formatVersions()},
        {"config", cfg.toJson()},
        {"derived_seeds",
         {{"scene", scene.seed}, {"caustic", caustic.seed}}},
        {"plane",
         {{"normal", {sr.plane.normal.x(), sr.plane.normal.y(), sr.plane.normal.z()}},
          {"offset", sr.plane.offset}}},
        {"scene_extent", {{"x", scene.extent_x}, {"y", scene.extent_y}}},
        {"outputs",
         {{"images", "images"},
          {"gt_clean", "gt_clean"},
          {"gt_caustic", "gt_caustic"},
          {"poses", "poses.txt"},
          {"cloud", "cloud_gt.txt"}}},
        {"stats",
         {{"frames", cfg.frames},
          {"clamped_fraction", double(clamped) / double(total)}}},
        {"timing", {{"rendered_frames", cfg.frames}}},
    };
    writeJsonFile(out_dir / "manifest.json", manifest);
    return out_dir;
}

// ---------------------------------------------------------------------------
// TrainConfig

TrainConfig TrainConfig::fromJson(const json& j) {
    TrainConfig c;
    c.method = jget(j, "method", c.method);
    c.seed = jget(j, "seed", c.seed);
    c.warmup_steps = jget(j, "warmup_steps", c.warmup_steps);
    c.steps_per_iteration = jget(j, "steps_per_iteration", c.steps_per_iteration);
    c.max_iterations = jget(j, "max_iterations", c.max_iterations);
    c.k = jget(j, "k", c.k);
    c.threshold = jget(j, "threshold", c.threshold);
    c.vanilla_steps = jget(j, "vanilla_steps", c.vanilla_steps);
    c.joint_steps = jget(j, "joint_steps", c.joint_steps);
    c.lambda_dssim = jget(j, "lambda_dssim", c.lambda_dssim);
    const json init = jget(j, "init", json::object());
    c.init_position_jitter = jget(init, "position_jitter", c.init_position_jitter);
    c.init_scale_jitter = jget(init, "scale_jitter", c.init_scale_jitter);
    c.init_color_jitter = jget(init, "color_jitter", c.init_color_jitter);
    c.init_opacity_jitter = jget(init, "opacity_jitter", c.init_opacity_jitter);
    return c;
}

json TrainConfig::toJson() const {
    return json{
        {"method", method},
        {"seed", seed},
        {"warmup_steps", warmup_steps},
        {"steps_per_iteration", steps_per_iteration},
        {"max_iterations", max_iterations},
        {"k", k},
        {"threshold", threshold},
        {"vanilla_steps", vanilla_steps},
        {"joint_steps", joint_steps},
        {"lambda_dssim", lambda_dssim},
        {"init",
         {{"position_jitter", init_position_jitter},
          {"scale_jitter", init_scale_jitter},
          {"color_jitter", init_color_jitter},
          {"opacity_jitter", init_opacity_jitter}}},
    };
}

namespace {

struct Dataset {
    json manifest;
    std::vector<Camerad> cameras;
    std::vector<Imaged> observations;
    GaussianCloudd gt_cloud;
    PlaneSpec<double> plane;
    int width = 0, height = 0;
};

Dataset loadDataset(const fs::path& dir) {
    if (!fs::exists(dir / "manifest.json"))
        throw IoError("dataset manifest missing: " + (dir / "manifest.json").string());
    Dataset d;
    d.manifest = loadJsonFile(dir / "manifest.json");
    const auto poses = readPoses(dir / "poses.txt");
    d.cameras = poses.cameras;
    d.width = poses.width;
    d.height = poses.height;
    d.observations = readImageDir(dir / "images");
    if (d.observations.size() != d.cameras.size())
        throw IoError("dataset: image count does not match pose count");
    d.gt_cloud = readCloud(dir / "cloud_gt.txt");
    if (d.manifest.contains("plane")) {
        const auto& pj = d.manifest.at("plane");
        const auto n = pj.at("normal");
        d.plane.normal = {n.at(0).get<double>(), n.at(1).get<double>(), n.at(2).get<double>()};
        d.plane.offset = pj.at("offset").get<double>();
    }
    return d;
}

GaussianCloudd jitterCloud(const GaussianCloudd& gt, const TrainConfig& cfg) {
    Rng rng(cfg.seed);
    double mean_scale = 0;
    for (const auto& g : gt.gaussians) mean_scale += g.scale.mean();
    mean_scale /= double(gt.size());

    GaussianCloudd out;
    out.gaussians.reserve(gt.size());
    for (const auto& g : gt.gaussians) {
        Eigen::Vector3d pos = g.position;
        for (int a = 0; a < 3; ++a)
            pos[a] += rng.normal(0, cfg.init_position_jitter * mean_scale);
        Eigen::Vector3d scale;
        for (int a = 0; a < 3; ++a)
            scale[a] = std::max(kScaleFloor,
                                g.scale[a] * std::exp(rng.normal(0, cfg.init_scale_jitter)));
        Eigen::Vector3d color;
        for (int a = 0; a < 3; ++a)
            color[a] = std::clamp(g.color[a] + rng.uniform(-1, 1) * cfg.init_color_jitter,
                                  0.0, 1.0);
        double lop = logit(g.opacity) + rng.normal(0, cfg.init_opacity_jitter);
        lop = std::clamp(lop, -kOpacityRawLimit, kOpacityRawLimit);
        out.gaussians.emplace_back(pos, scale, g.rotation, sigmoid(lop), color);
    }
    return out;
}

void writeRenders(const fs::path& dir, const GaussianCloudd& cloud,
                  const std::vector<Camerad>& cameras, int w, int h) {
    ensureDir(dir);
    for (std::size_t f = 0; f < cameras.size(); ++f)
        writeImagePair(dir, frameName(int(f)), render(cloud, cameras[f], w, h));
}

void writeCaustics(const fs::path& dir, const std::vector<Imaged>& caustics) {
    ensureDir(dir);
    for (std::size_t f = 0; f < caustics.size(); ++f)
        writeImagePair(dir, frameName(int(f)), caustics[f], 0.5);
}

void writeLossLog(const fs::path& path, const std::vector<double>& trace) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path.string());
    for (std::size_t i = 0; i < trace.size(); ++i)
        os << json{{"step", i}, {"loss", trace[i]}}.dump() << '\n';
}

}  // namespace

TrainOutcome runTrain(const fs::path& dataset_dir, const TrainConfig& cfg,
                      const fs::path& out_dir) {
    if (cfg.method != "vanilla" && cfg.method != "recurrent" && cfg.method != "joint")
        throw ConfigError("train: unknown method '" + cfg.method + "'");
    if (cfg.k < 1) throw ConfigError("train: k must be >= 1");
    if (!(cfg.threshold > 0)) throw ConfigError("train: threshold must be positive");
    if (cfg.max_iterations < 1) throw ConfigError("train: max_iterations must be >= 1");

    const Dataset ds = loadDataset(dataset_dir);
    const int w = ds.width, h = ds.height;

    std::vector<Frame<double>> frames;
    frames.reserve(ds.cameras.size());
    for (std::size_t f = 0; f < ds.cameras.size(); ++f)
        frames.push_back({ds.cameras[f], ds.observations[f]});

    const GaussianCloudd init = jitterCloud(ds.gt_cloud, cfg);
    const double extent = sceneExtent(init);

    auto opt = OptimizerConfig<double>::defaults(extent);
    LossConfig<double> loss;
    loss.lambda_dssim = cfg.lambda_dssim;

    ensureDir(out_dir);
    TrainOutcome outcome;
    json result_json;

    if (cfg.method == "vanilla") {
        opt.steps = cfg.vanilla_steps;
        const auto res = fit(init, frames, {}, opt, loss, cfg.seed);
        writeRenders(out_dir / "renders", res.cloud, ds.cameras, w, h);
        writeCloud(out_dir / "model.txt", res.cloud);
        writeLossLog(out_dir / "loss.jsonl", res.trace);
        outcome.total_steps = cfg.vanilla_steps;
        result_json = json{{"final_loss", res.trace.empty() ? 0.0 : res.trace.back()},
                           {"total_steps", outcome.total_steps}};
    } else if (cfg.method == "joint") {
        opt.steps = cfg.joint_steps;
        opt.lr_spectral = OptimizerConfig<double>::spectralRate(w, h);
        const auto mask = buildMask(w, h, cfg.k);
        const auto res = fitJoint(init, frames, mask, opt, loss, cfg.seed);
        writeRenders(out_dir / "renders", res.cloud, ds.cameras, w, h);
        std::vector<Imaged> caustics;
        for (std::size_t f = 0; f < frames.size(); ++f)
            caustics.push_back(reconstructFromCoefficients(res.coefficients, int(f), w, h));
        writeCaustics(out_dir / "caustic", caustics);
        writeCloud(out_dir / "model.txt", res.cloud);
        writeLossLog(out_dir / "loss.jsonl", res.trace);
        outcome.total_steps = cfg.joint_steps;
        result_json = json{{"final_loss", res.trace.empty() ? 0.0 : res.trace.back()},
                           {"total_steps", outcome.total_steps},
                           {"kept_bins", mask.kept.size()}};
    } else {
        RecurrenceConfig<double> rc;
        rc.k = cfg.k;
        rc.threshold = cfg.threshold;
        rc.steps_per_iteration = cfg.steps_per_iteration;
        rc.max_iterations = cfg.max_iterations;
        rc.warmup_steps = cfg.warmup_steps;

        std::ofstream iter_log(out_dir / "iterations.jsonl");
        if (!iter_log) throw IoError("cannot open iterations.jsonl");
        auto sink = [&iter_log](const IterationRecord<double>& rec) {
            iter_log << json{{"iteration", rec.iteration},
                             {"delta", rec.delta},
                             {"mean_loss", rec.mean_loss}}
                            .dump()
                     << '\n';
        };

        const auto res = trainRecurrent(frames, init, rc, opt, loss, cfg.seed, sink);
        writeRenders(out_dir / "renders", res.cloud, ds.cameras, w, h);
        writeCaustics(out_dir / "caustic", res.state.caustics);
        writeCloud(out_dir / "model.txt", res.cloud);

        outcome.converged = res.state.converged;
        outcome.iterations = res.state.iteration;
        outcome.change_history = res.state.change_history;
        const int fitted_iters =
            res.state.converged ? res.state.iteration - 1 : rc.max_iterations;
        outcome.total_steps =
            long(rc.warmup_steps) + long(fitted_iters) * rc.steps_per_iteration;
        const auto mask = buildMask(w, h, cfg.k);
        result_json = json{{"converged", outcome.converged},
                           {"iterations", outcome.iterations},
                           {"final_delta", res.state.change_history.empty()
                                               ? 0.0
                                               : res.state.change_history.back()},
                           {"total_steps", outcome.total_steps},
                           {"kept_bins", mask.kept.size()}};
    }

    json manifest{
        {"kind", "train-run"},
        {"format_versions", formatVersions()},
        {"method", cfg.method},
        {"config", cfg.toJson()},
        {"dataset_config", ds.manifest.contains("config") ? ds.manifest.at("config") : json()},
        {"resolved",
         {{"scene_extent", extent},
          {"lr_position", opt.lr_position},
          {"lr_scale_raw", opt.lr_scale_raw},
          {"lr_rotation", opt.lr_rotation},
          {"lr_opacity_raw", opt.lr_opacity_raw},
          {"lr_color", opt.lr_color},
          {"lr_spectral", opt.lr_spectral},
          {"beta1", opt.beta1},
          {"beta2", opt.beta2},
          {"epsilon", opt.epsilon},
          {"near_clip", kNearClip},
          {"cov_floor", kCovFloor},
          {"truncation_q", kTruncQ},
          {"termination_transmittance", kTermTransmittance},
          {"scale_floor", kScaleFloor}}},
        {"result", result_json},
        {"timing", {{"optimizer_steps", outcome.total_steps}}},
        {"outputs",
         {{"renders", "renders"},
          {"caustic", cfg.method == "vanilla" ? "" : "caustic"},
          {"model", "model.txt"}}},
    };
    writeJsonFile(out_dir / "manifest.json", manifest);
    return outcome;
}

// ---------------------------------------------------------------------------
// Baseline

BaselineConfig BaselineConfig::fromJson(const json& j) {
    BaselineConfig c;
    c.window = jget(j, "window", c.window);
    return c;
}

json BaselineConfig::toJson() const { return json{{"window", window}}; }

void runBaseline(const fs::path& dataset_dir, const BaselineConfig& cfg,
                 const fs::path& out_dir) {
    const Dataset ds = loadDataset(dataset_dir);
    if (!ds.manifest.contains("plane"))
        throw ConfigError("baseline: dataset manifest does not declare the scene plane");
    if (cfg.window < 1 || cfg.window % 2 == 0)
        throw ConfigError("baseline: window must be odd and positive");

    std::vector<Frame<double>> frames;
    for (std::size_t f = 0; f < ds.cameras.size(); ++f)
        frames.push_back({ds.cameras[f], ds.observations[f]});

    const auto res = filterSequence(frames, ds.plane, cfg.window);

    ensureDir(out_dir);
    ensureDir(out_dir / "renders");
    for (std::size_t f = 0; f < res.clean.size(); ++f)
        writeImagePair(out_dir / "renders", frameName(int(f)), res.clean[f]);
    writeCaustics(out_dir / "caustic", res.caustic);

    std::int64_t low = 0, total = 0;
    for (const auto& m : res.low_support) {
        low += m.count();
        total += m.size();
    }

    json manifest{
        {"kind", "baseline-run"},
        {"format_versions", formatVersions()},
        {"config", cfg.toJson()},
        {"dataset_config", ds.manifest.contains("config") ? ds.manifest.at("config") : json()},
        {"result",
         {{"frames", res.clean.size()},
          {"low_support_fraction", total ? double(low) / double(total) : 0.0}}},
        {"timing", {{"filtered_frames", res.clean.size()}}},
        {"outputs", {{"renders", "renders"}, {"caustic", "caustic"}}},
    };
    writeJsonFile(out_dir / "manifest.json", manifest);
}

// ---------------------------------------------------------------------------
// Eval

EvalReport runEval(const fs::path& results_dir, const fs::path& dataset_dir,
                   std::ostream* text_out) {
    const auto renders = readImageDir(results_dir / "renders");
    const auto gt_clean = readImageDir(dataset_dir / "gt_clean");
    if (renders.empty()) throw IoError("eval: no renders in " + results_dir.string());
    if (renders.size() != gt_clean.size())
        throw IoError("eval: frame count mismatch between results and dataset");

    std::vector<Imaged> est_caustic, gt_caustic;
    if (fs::exists(results_dir / "caustic") && fs::exists(dataset_dir / "gt_caustic")) {
        est_caustic = readImageDir(results_dir / "caustic");
        gt_caustic = readImageDir(dataset_dir / "gt_caustic");
        if (est_caustic.size() != renders.size() || gt_caustic.size() != renders.size())
            throw IoError("eval: caustic frame count mismatch");
    }

    EvalReport rep;
    rep.has_caustics = !est_caustic.empty();
    LossConfig<double> lc;

    double pooled_mse = 0;
    double sum_render = 0, sum_gt = 0;
    double pooled_caustic_err = 0, pooled_caustic_ref = 0;
    const int n = int(renders.size());
    for (int f = 0; f < n; ++f) {
        const double m = mse(renders[size_t(f)], gt_clean[size_t(f)]);
        pooled_mse += m;
        rep.psnr.push_back(psnrFromMse(m));
        rep.ssim.push_back(ssim(gt_clean[size_t(f)], renders[size_t(f)], lc));
        rep.brightness_drift.push_back(
            std::abs(renders[size_t(f)].mean() - gt_clean[size_t(f)].mean()));
        sum_render += renders[size_t(f)].mean();
        sum_gt += gt_clean[size_t(f)].mean();
        if (rep.has_caustics) {
            const auto& est = est_caustic[size_t(f)];
            const auto& ref = gt_caustic[size_t(f)];
            rep.caustic_l1.push_back((est - ref).meanAbs());
            rep.caustic_rel_l2.push_back(relativeL2(est, ref));
            rep.caustic_pearson.push_back(pearson(est, ref));
            pooled_caustic_err += (est - ref).squaredNorm();
            pooled_caustic_ref += ref.squaredNorm();
        }
    }
    rep.aggregate_psnr = psnrFromMse(pooled_mse / n);
    rep.aggregate_ssim = 0;
    for (double v : rep.ssim) rep.aggregate_ssim += v;
    rep.aggregate_ssim /= n;
    rep.aggregate_brightness_drift = std::abs(sum_render / n - sum_gt / n);
    if (rep.has_caustics) {
        rep.aggregate_caustic_rel_l2 =
            pooled_caustic_ref > 0 ? std::sqrt(pooled_caustic_err / pooled_caustic_ref) : 0;
        rep.aggregate_caustic_pearson = 0;
        rep.min_caustic_pearson = rep.caustic_pearson.front();
        for (double v : rep.caustic_pearson) {
            rep.aggregate_caustic_pearson += v;
            rep.min_caustic_pearson = std::min(rep.min_caustic_pearson, v);
        }
        rep.aggregate_caustic_pearson /= n;
    }

    std::ostringstream text;
    for (int f = 0; f < n; ++f) {
        text << "psnr " << f << ' ' << fmtDouble(rep.psnr[size_t(f)]) << '\n';
        text << "ssim " << f << ' ' << fmtDouble(rep.ssim[size_t(f)]) << '\n';
        text << "brightness_drift " << f << ' ' << fmtDouble(rep.brightness_drift[size_t(f)])
             << '\n';
        if (rep.has_caustics) {
            text << "caustic_l1 " << f << ' ' << fmtDouble(rep.caustic_l1[size_t(f)]) << '\n';
            text << "caustic_rel_l2 " << f << ' ' << fmtDouble(rep.caustic_rel_l2[size_t(f)])
                 << '\n';
            text << "caustic_pearson " << f << ' '
                 << fmtDouble(rep.caustic_pearson[size_t(f)]) << '\n';
        }
    }
    text << "summary\n";
    text << "aggregate_psnr " << fmtDouble(rep.aggregate_psnr) << '\n';
    text << "aggregate_ssim " << fmtDouble(rep.aggregate_ssim) << '\n';
    text << "aggregate_brightness_drift " << fmtDouble(rep.aggregate_brightness_drift)
         << '\n';
    if (rep.has_caustics) {
        text << "aggregate_caustic_rel_l2 " << fmtDouble(rep.aggregate_caustic_rel_l2)
             << '\n';
        text << "aggregate_caustic_pearson " << fmtDouble(rep.aggregate_caustic_pearson)
             << '\n';
        text << "min_caustic_pearson " << fmtDouble(rep.min_caustic_pearson) << '\n';
    }

    std::ofstream metrics(results_dir / "metrics.txt");
    if (!metrics) throw IoError("eval: cannot write metrics.txt");
    metrics << text.str();
    if (text_out) (*text_out) << text.str();
    return rep;
}

}  // namespace csplat::cli
