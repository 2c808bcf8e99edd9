#pragma once

#include "csplat/camera.hpp"
#include "csplat/image.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace csplat {

/// Smallest admissible per-axis standard deviation, in scene units.
/// Prevents degenerate covariances and the gradient blow-up they cause.
inline constexpr double kScaleFloor = 1e-4;

/// Raw (logit-space) opacity is clamped to this band so that
/// sigmoid(raw) stays strictly inside (0,1) in double precision.
inline constexpr double kOpacityRawLimit = 15.0;

template <typename Scalar>
Scalar sigmoid(Scalar x) {
    return Scalar(1) / (Scalar(1) + std::exp(-x));
}

template <typename Scalar>
Scalar logit(Scalar p) {
    return std::log(p / (Scalar(1) - p));
}

/// One anisotropic splat: position, per-axis scale, orientation, opacity
/// and a flat RGB radiance (no view dependence).
template <typename Scalar>
struct Gaussian {
    using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
    using Quat = Eigen::Quaternion<Scalar>;
    using Mat3 = Eigen::Matrix<Scalar, 3, 3>;

    Vec3 position = Vec3::Zero();
    Vec3 scale = Vec3::Constant(Scalar(1e-2));  // per-axis stddev, scene units
    Quat rotation = Quat::Identity();
    Scalar opacity = Scalar(0.5);  // strictly inside (0,1)
    Vec3 color = Vec3::Constant(Scalar(0.5));  // RGB in [0,1]

    Gaussian() = default;

    Gaussian(const Vec3& pos, const Vec3& scl, const Quat& rot, Scalar alpha,
             const Vec3& rgb)
        : position(pos), scale(scl), rotation(rot), opacity(alpha), color(rgb) {
        if (!position.allFinite())
            throw std::invalid_argument("Gaussian: non-finite position");
        if (!scale.allFinite() || (scale.array() < Scalar(kScaleFloor)).any())
            throw std::invalid_argument("Gaussian: scale below floor");
        if (!(opacity > Scalar(0)) || !(opacity < Scalar(1)))
            throw std::invalid_argument("Gaussian: opacity outside (0,1)");
        if (!color.allFinite() || (color.array() < Scalar(0)).any() ||
            (color.array() > Scalar(1)).any())
            throw std::invalid_argument("Gaussian: color outside [0,1]");
        // Tolerant unit check: raw-space optimizer steps and perturbations
        // land near the sphere; the stored value is renormalized exactly.
        const Scalar n = rotation.norm();
        if (std::abs(double(n) - 1.0) > 1e-2)
            throw std::invalid_argument("Gaussian: rotation quaternion is not unit");
        rotation.normalize();
    }

    /// World covariance R * diag(scale^2) * R^T.
    Mat3 covariance() const {
        Mat3 r = rotation.toRotationMatrix();
        return r * scale.array().square().matrix().asDiagonal() * r.transpose();
    }
};

template <typename Scalar>
struct GaussianCloud {
    std::vector<Gaussian<Scalar>> gaussians;

    std::size_t size() const { return gaussians.size(); }
    bool empty() const { return gaussians.empty(); }
    Gaussian<Scalar>& operator[](std::size_t i) { return gaussians[i]; }
    const Gaussian<Scalar>& operator[](std::size_t i) const { return gaussians[i]; }
};

/// Non-throwing scene audit. Returns one human-readable line per violation;
/// an empty report means the scene is consistent.
template <typename Scalar>
std::vector<std::string> validateScene(const GaussianCloud<Scalar>& cloud,
                                       const std::vector<Camera<Scalar>>& cameras,
                                       const std::vector<Image<Scalar>>& images) {
    std::vector<std::string> report;
    auto add = [&report](std::string msg) { report.push_back(std::move(msg)); };

    if (cloud.empty()) add("cloud: empty (render/optimize require at least one Gaussian)");
    if (cameras.size() != images.size())
        add("frames: camera count " + std::to_string(cameras.size()) +
            " != image count " + std::to_string(images.size()));

    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto& g = cloud[i];
        const std::string tag = "gaussian " + std::to_string(i);
        if (!g.position.allFinite()) add(tag + ": non-finite position");
        if (!g.scale.allFinite() || (g.scale.array() < Scalar(kScaleFloor)).any())
            add(tag + ": scale component below floor " + std::to_string(kScaleFloor));
        if (!(g.opacity > Scalar(0)) || !(g.opacity < Scalar(1)))
            add(tag + ": opacity outside (0,1)");
        if (!g.color.allFinite() || (g.color.array() < Scalar(0)).any() ||
            (g.color.array() > Scalar(1)).any())
            add(tag + ": color outside [0,1]");
        if (std::abs(double(g.rotation.norm()) - 1.0) > 1e-9)
            add(tag + ": rotation quaternion not unit");
    }

    const std::size_t n = std::min(cameras.size(), images.size());
    for (std::size_t f = 0; f < n; ++f) {
        const auto& cam = cameras[f];
        const auto& img = images[f];
        const std::string tag = "frame " + std::to_string(f);
        if (img.width <= 0 || img.height <= 0) {
            add(tag + ": empty image");
            continue;
        }
        if (!img.allFinite()) add(tag + ": image contains NaN/Inf");
        if (!(cam.fx > 0) || !(cam.fy > 0)) add(tag + ": non-positive focal length");
        if (!(cam.cx >= 0) || !(cam.cx < Scalar(img.width)))
            add(tag + ": cx outside [0," + std::to_string(img.width) + ")");
        if (!(cam.cy >= 0) || !(cam.cy < Scalar(img.height)))
            add(tag + ": cy outside [0," + std::to_string(img.height) + ")");
        if (std::abs(double(cam.rotation.norm()) - 1.0) > 1e-9)
            add(tag + ": camera quaternion not unit");
    }
    return report;
}

using Gaussiand = Gaussian<double>;
using GaussianCloudd = GaussianCloud<double>;

}  // namespace csplat
