#pragma once

#include "csplat/image.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace csplat::cli {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Exit codes shared by the command line tool and the command layer.
enum ExitCode : int {
    kOk = 0,
    kConfigError = 2,
    kDivergence = 3,
    kIoFailure = 4,
};

/// Resolved configuration of a dataset generation run.
struct SynthConfig {
    int width = 256;
    int height = 192;
    int frames = 24;
    std::uint64_t seed = 0;

    // trajectory
    std::string pattern = "lawnmower";  // lawnmower | arc | static
    int rows = 2;
    double altitude = 2.0;
    double along_overlap = 0.8;
    double cross_overlap = 2.0 / 3.0;
    double arc_radius = 0.5;
    double focal_px = 256.0;

    // scene
    int num_gaussians = 500;
    double relief_amplitude = 0.0;
    double relief_cycles = 1.5;
    double scene_jitter = 0.35;
    double extent_margin = 1.15;

    // caustic
    std::string caustic_mode = "sinusoid-mixture";  // sinusoid-mixture | refraction
    int caustic_components = 4;
    double freq_min = 0.5;
    double freq_max = 1.6;
    double speed_min = 0.3;
    double speed_max = 0.9;
    double amplitude = 0.25;
    double chroma_jitter = 0.15;
    bool rectify = false;

    double clamp_max = 1.2;

    static SynthConfig fromJson(const nlohmann::json& j);
    nlohmann::json toJson() const;
};

/// Resolved configuration of a training run (any method).
struct TrainConfig {
    std::string method = "recurrent";  // vanilla | recurrent | joint
    std::uint64_t seed = 0;

    int warmup_steps = 5000;
    int steps_per_iteration = 1000;
    int max_iterations = 60;
    int k = 9;
    double threshold = 2e-4;

    int vanilla_steps = 15000;
    int joint_steps = 20000;

    double lambda_dssim = 0.2;

    // Initialization jitter applied to the dataset's ground-truth cloud.
    double init_position_jitter = 0.5;   // fraction of the mean splat scale
    double init_scale_jitter = 0.25;     // log-space sigma
    double init_color_jitter = 0.1;      // uniform half-range
    double init_opacity_jitter = 0.5;    // logit-space sigma

    static TrainConfig fromJson(const nlohmann::json& j);
    nlohmann::json toJson() const;
};

struct BaselineConfig {
    int window = 7;

    static BaselineConfig fromJson(const nlohmann::json& j);
    nlohmann::json toJson() const;
};

/// Ground-truth metrics of one results directory against its dataset.
struct EvalReport {
    std::vector<double> psnr;              // per frame, renders vs gt_clean
    std::vector<double> ssim;
    std::vector<double> brightness_drift;  // per frame |mean render - mean gt|
    std::vector<double> caustic_l1;        // empty when either side lacks caustics
    std::vector<double> caustic_rel_l2;
    std::vector<double> caustic_pearson;

    double aggregate_psnr = 0;   // PSNR of the pooled MSE
    double aggregate_ssim = 0;   // mean per-frame SSIM
    double aggregate_brightness_drift = 0;  // |mean(all renders) - mean(all gt)|
    double aggregate_caustic_rel_l2 = 0;    // pooled over frames
    double aggregate_caustic_pearson = 0;   // mean per-frame
    double min_caustic_pearson = 0;
    bool has_caustics = false;
};

/// Summary facts about a finished training run, mirrored in its manifest.
struct TrainOutcome {
    bool converged = false;
    int iterations = 0;
    long total_steps = 0;
    std::vector<double> change_history;
};

std::filesystem::path runSynth(const SynthConfig& cfg, const std::filesystem::path& out_dir);

TrainOutcome runTrain(const std::filesystem::path& dataset_dir, const TrainConfig& cfg,
                      const std::filesystem::path& out_dir);

void runBaseline(const std::filesystem::path& dataset_dir, const BaselineConfig& cfg,
                 const std::filesystem::path& out_dir);

EvalReport runEval(const std::filesystem::path& results_dir,
                   const std::filesystem::path& dataset_dir, std::ostream* text_out = nullptr);

nlohmann::json loadJsonFile(const std::filesystem::path& path);

}  // namespace csplat::cli
