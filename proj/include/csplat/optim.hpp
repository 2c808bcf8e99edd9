#pragma once

#include "csplat/cloud.hpp"
#include "csplat/image.hpp"
#include "csplat/loss.hpp"
#include "csplat/spectral.hpp"
#include "csplat/splat.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace csplat {

struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Per-group step sizes for the adaptive-moment optimizer. Position scales
/// with the scene extent; the spectral rate follows the DFT normalization
/// (coefficients carry a W*H factor).
template <typename Scalar>
struct OptimizerConfig {
    Scalar lr_position = Scalar(2e-4);
    Scalar lr_scale_raw = Scalar(5e-3);
    Scalar lr_rotation = Scalar(1e-3);
    Scalar lr_opacity_raw = Scalar(5e-2);
    Scalar lr_color = Scalar(2.5e-3);
    Scalar lr_spectral = Scalar(0);  // set via spectralRate for joint runs
    Scalar beta1 = Scalar(0.9);
    Scalar beta2 = Scalar(0.999);
    Scalar epsilon = Scalar(1e-8);
    int steps = 1000;

    static OptimizerConfig defaults(Scalar scene_extent) {
        OptimizerConfig cfg;
        cfg.lr_position = Scalar(2e-4) * scene_extent;
        return cfg;
    }

    static Scalar spectralRate(int width, int height) {
        return Scalar(1e-2) * Scalar(width) * Scalar(height);
    }

    void validate() const {
        for (Scalar lr : {lr_position, lr_scale_raw, lr_rotation, lr_opacity_raw,
                          lr_color, lr_spectral})
            if (!(lr >= Scalar(0)) || !std::isfinite(double(lr)))
                throw std::invalid_argument("OptimizerConfig: step size must be finite and >= 0");
        if (!(beta1 >= Scalar(0)) || !(beta1 < Scalar(1)) || !(beta2 >= Scalar(0)) ||
            !(beta2 < Scalar(1)))
            throw std::invalid_argument("OptimizerConfig: decay rates outside [0,1)");
        if (!(epsilon > Scalar(0)))
            throw std::invalid_argument("OptimizerConfig: epsilon must be positive");
        if (steps < 0) throw std::invalid_argument("OptimizerConfig: negative step count");
    }
};

/// Largest centroid-to-position distance; the conventional scale for the
/// position step size.
template <typename Scalar>
Scalar sceneExtent(const GaussianCloud<Scalar>& cloud) {
    if (cloud.empty()) return Scalar(1);
    Eigen::Matrix<Scalar, 3, 1> centroid = Eigen::Matrix<Scalar, 3, 1>::Zero();
    for (const auto& g : cloud.gaussians) centroid += g.position;
    centroid /= Scalar(cloud.size());
    Scalar r = 0;
    for (const auto& g : cloud.gaussians)
        r = std::max(r, (g.position - centroid).norm());
    return std::max(r, Scalar(1e-3));
}

template <typename Scalar>
struct Frame {
    Camera<Scalar> camera;
    Image<Scalar> image;
};

namespace detail {

template <typename Scalar>
struct AdamState {
    using Arr = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    Arr m, v;
    long t = 0;

    void init(Eigen::Index rows, Eigen::Index cols) {
        m = Arr::Zero(rows, cols);
        v = Arr::Zero(rows, cols);
        t = 0;
    }

    template <typename ParamArr, typename GradArr>
    void step(ParamArr& param, const GradArr& grad, Scalar lr, Scalar b1, Scalar b2,
              Scalar eps) {
        ++t;
        m = b1 * m + (Scalar(1) - b1) * grad;
        v = b2 * v + (Scalar(1) - b2) * grad.square();
        const Scalar bc1 = Scalar(1) - std::pow(b1, Scalar(t));
        const Scalar bc2 = Scalar(1) - std::pow(b2, Scalar(t));
        param -= (lr / bc1) * m / ((v / bc2).sqrt() + eps);
    }
};

}  // namespace detail

/// Owns the raw (unconstrained) parameterization of a cloud plus the
/// optimizer moments, and runs photometric training steps against a frame
/// set with optional per-frame caustic targets or jointly optimized
/// spectral coefficients. Moments persist across run() calls.
template <typename Scalar>
class Trainer {
public:
    using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
    using MatX3 = Eigen::Array<Scalar, Eigen::Dynamic, 3>;
    using MatX4 = Eigen::Array<Scalar, Eigen::Dynamic, 4>;
    using ArrX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

    Trainer(const GaussianCloud<Scalar>& cloud, std::vector<Frame<Scalar>> frames,
            OptimizerConfig<Scalar> opt, LossConfig<Scalar> loss, std::uint64_t seed = 0)
        : frames_(std::move(frames)), opt_(opt), loss_(loss) {
        opt_.validate();
        loss_.validate();
        if (cloud.empty()) throw std::invalid_argument("Trainer: empty cloud");
        if (frames_.empty()) throw std::invalid_argument("Trainer: no frames");
        const auto n = Eigen::Index(cloud.size());
        pos_.resize(n, 3);
        lscale_.resize(n, 3);
        quat_.resize(n, 4);
        lopacity_.resize(n);
        color_.resize(n, 3);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& g = cloud[size_t(i)];
            pos_.row(i) = g.position.transpose().array();
            lscale_.row(i) = g.scale.array().log().transpose();
            quat_.row(i) = g.rotation.coeffs().transpose().array();  // (x,y,z,w)
            lopacity_[i] = logit(g.opacity);
            color_.row(i) = g.color.transpose().array();
        }
        adam_pos_.init(n, 3);
        adam_scale_.init(n, 3);
        adam_quat_.init(n, 4);
        adam_opacity_.init(n, 1);
        adam_color_.init(n, 3);
        cursor_ = int(seed % std::uint64_t(frames_.size()));
        setCaustics({});
    }

    /// Fix the per-frame caustic targets: subsequent steps minimize
    /// dist(I - C, render). An empty vector means zero caustics.
    void setCaustics(const std::vector<Image<Scalar>>& caustics) {
        if (!caustics.empty() && caustics.size() != frames_.size())
            throw std::invalid_argument("setCaustics: one caustic per frame required");
        joint_ = false;
        targets_.clear();
        ssim_refs_.clear();
        targets_.reserve(frames_.size());
        for (std::size_t f = 0; f < frames_.size(); ++f) {
            if (caustics.empty()) {
                targets_.push_back(frames_[f].image);
            } else {
                frames_[f].image.requireSameShape(caustics[f], "setCaustics");
                targets_.push_back(frames_[f].image - caustics[f]);
            }
        }
        if (loss_.lambda_dssim > Scalar(0)) {
            ssim_refs_.reserve(targets_.size());
            for (const auto& t : targets_) ssim_refs_.push_back(precomputeSsimReference(t, loss_));
        }
    }

    /// Switch to joint mode: per-frame spectral coefficients become
    /// optimization variables, and C is reconstructed from them inside the
    /// objective each step.
    void enableJoint(SpectralCoefficients<Scalar> coeffs) {
        if (coeffs.numFrames() != int(frames_.size()))
            throw std::invalid_argument("enableJoint: coefficients must cover every frame");
        coeffs_ = std::move(coeffs);
        joint_ = true;
        targets_.clear();
        ssim_refs_.clear();
        adam_coeffs_.assign(frames_.size(), {});
        const int dof = coeffs_.mask.dof();
        for (auto& per_frame : adam_coeffs_)
            for (auto& st : per_frame) st.init(dof, 1);
    }

    /// Run `steps` optimizer steps (seeded round-robin over frames) and
    /// return the per-step loss sequence. Aborts with DivergenceError when
    /// the loss exceeds 10x its initial value for 50 consecutive steps.
    std::vector<Scalar> run(int steps) {
        std::vector<Scalar> trace;
        trace.reserve(size_t(std::max(steps, 0)));
        Scalar guard_threshold = 0;
        int bad_streak = 0;
        for (int s = 0; s < steps; ++s) {
            const Scalar loss = step();
            trace.push_back(loss);
            if (s == 0) guard_threshold = Scalar(10) * loss + Scalar(1e-6);
            bad_streak = (loss > guard_threshold) ? bad_streak + 1 : 0;
            if (bad_streak >= 50)
                throw DivergenceError("training diverged: loss above 10x initial for 50 steps");
        }
        return trace;
    }

    GaussianCloud<Scalar> cloud() const {
        GaussianCloud<Scalar> out;
        out.gaussians.reserve(size_t(pos_.rows()));
        for (Eigen::Index i = 0; i < pos_.rows(); ++i) out.gaussians.push_back(gaussianAt(i));
        return out;
    }

    const SpectralCoefficients<Scalar>& coefficients() const { return coeffs_; }
    long totalSteps() const { return adam_pos_.t; }
    int frameCount() const { return int(frames_.size()); }

private:
    Gaussian<Scalar> gaussianAt(Eigen::Index i) const {
        using Quat = Eigen::Quaternion<Scalar>;
        Vec3 scale = lscale_.row(i).exp().transpose().matrix();
        scale = scale.cwiseMax(Scalar(kScaleFloor));
        Quat q(quat_(i, 3), quat_(i, 0), quat_(i, 1), quat_(i, 2));
        return Gaussian<Scalar>(pos_.row(i).transpose().matrix(), scale, q,
                                sigmoid(lopacity_[i]), color_.row(i).transpose().matrix());
    }

    Scalar step() {
        const int f = cursor_;
        cursor_ = (cursor_ + 1) % int(frames_.size());
        const auto& frame = frames_[size_t(f)];
        const int w = frame.image.width, h = frame.image.height;

        const GaussianCloud<Scalar> cloud_now = cloud();
        const Image<Scalar> rendered = render(cloud_now, frame.camera, w, h);

        DistGradients<Scalar> dg;
        if (joint_) {
            const Image<Scalar> caustic = reconstructFromCoefficients(coeffs_, f, w, h);
            const Image<Scalar> target = frame.image - caustic;
            dg = distWithGradient(target, rendered, loss_, nullptr, true);
        } else {
            const SsimReference<Scalar>* ref =
                ssim_refs_.empty() ? nullptr : &ssim_refs_[size_t(f)];
            dg = distWithGradient(targets_[size_t(f)], rendered, loss_, ref, false);
        }

        const auto grads = renderBackward(cloud_now, frame.camera, dg.grad_b);

        adam_pos_.step(pos_, grads.position.array(), opt_.lr_position, opt_.beta1,
                       opt_.beta2, opt_.epsilon);
        adam_scale_.step(lscale_, grads.scale_raw.array(), opt_.lr_scale_raw, opt_.beta1,
                         opt_.beta2, opt_.epsilon);
        adam_quat_.step(quat_, grads.rotation_raw.array(), opt_.lr_rotation, opt_.beta1,
                        opt_.beta2, opt_.epsilon);
        adam_opacity_.step(lopacity_, grads.opacity_raw.array(), opt_.lr_opacity_raw,
                           opt_.beta1, opt_.beta2, opt_.epsilon);
        adam_color_.step(color_, grads.color.array(), opt_.lr_color, opt_.beta1,
                         opt_.beta2, opt_.epsilon);

        if (joint_) {
            // dL/dC = -dL/dtarget for target = I - C.
            Image<Scalar> grad_c = dg.grad_a;
            grad_c *= Scalar(-1);
            const auto cg = coefficientGradient(grad_c, coeffs_.mask);
            for (int c = 0; c < 3; ++c) {
                auto& dof = coeffs_.frames[size_t(f)][size_t(c)];
                Eigen::Array<Scalar, Eigen::Dynamic, 1> darr = dof.array();
                adam_coeffs_[size_t(f)][size_t(c)].step(darr, cg[size_t(c)].array(),
                                                        opt_.lr_spectral, opt_.beta1,
                                                        opt_.beta2, opt_.epsilon);
                dof = darr.matrix();
            }
        }

        // Projections keeping the raw state inside the admissible set.
        color_ = color_.min(Scalar(1)).max(Scalar(0));
        lscale_ = lscale_.max(Scalar(std::log(kScaleFloor)));
        lopacity_ = lopacity_.min(Scalar(kOpacityRawLimit)).max(Scalar(-kOpacityRawLimit));
        for (Eigen::Index i = 0; i < quat_.rows(); ++i) {
            const Scalar n = std::sqrt(quat_.row(i).square().sum());
            if (n > Scalar(1e-12))
                quat_.row(i) /= n;
            else
                quat_.row(i) = Eigen::Array<Scalar, 1, 4>{0, 0, 0, 1};
        }

        return dg.value;
    }

    std::vector<Frame<Scalar>> frames_;
    OptimizerConfig<Scalar> opt_;
    LossConfig<Scalar> loss_;

    MatX3 pos_, lscale_, color_;
    MatX4 quat_;
    ArrX lopacity_;

    detail::AdamState<Scalar> adam_pos_, adam_scale_, adam_quat_, adam_opacity_,
        adam_color_;

    std::vector<Image<Scalar>> targets_;
    std::vector<SsimReference<Scalar>> ssim_refs_;

    bool joint_ = false;
    SpectralCoefficients<Scalar> coeffs_;
    std::vector<std::array<detail::AdamState<Scalar>, 3>> adam_coeffs_;

    int cursor_ = 0;
};

template <typename Scalar>
struct FitResult {
    GaussianCloud<Scalar> cloud;
    std::vector<Scalar> trace;
};

/// Photometric fit of the cloud against (I - C) targets. Empty caustics
/// mean plain fitting of the observations.
template <typename Scalar>
FitResult<Scalar> fit(const GaussianCloud<Scalar>& cloud,
                      const std::vector<Frame<Scalar>>& frames,
                      const std::vector<Image<Scalar>>& caustics,
                      const OptimizerConfig<Scalar>& opt, const LossConfig<Scalar>& loss,
                      std::uint64_t seed = 0) {
    Trainer<Scalar> trainer(cloud, frames, opt, loss, seed);
    trainer.setCaustics(caustics);
    auto trace = trainer.run(opt.steps);
    return {trainer.cloud(), std::move(trace)};
}

template <typename Scalar>
struct JointFitResult {
    GaussianCloud<Scalar> cloud;
    SpectralCoefficients<Scalar> coefficients;
    std::vector<Scalar> trace;
};

/// Joint optimization of the cloud together with per-frame low-frequency
/// spectral coefficients (initialized to zero).
template <typename Scalar>
JointFitResult<Scalar> fitJoint(const GaussianCloud<Scalar>& cloud,
                                const std::vector<Frame<Scalar>>& frames,
                                const FrequencyMask& mask,
                                const OptimizerConfig<Scalar>& opt,
                                const LossConfig<Scalar>& loss, std::uint64_t seed = 0) {
    Trainer<Scalar> trainer(cloud, frames, opt, loss, seed);
    trainer.enableJoint(SpectralCoefficients<Scalar>::zeros(mask, int(frames.size())));
    auto trace = trainer.run(opt.steps);
    return {trainer.cloud(), trainer.coefficients(), std::move(trace)};
}

}  // namespace csplat
