#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <stdexcept>

namespace csplat {

/// Pinhole intrinsics plus a world-to-camera rigid pose for one frame.
/// Camera frame: +x right, +y down, +z forward (points with z > 0 are in
/// front of the camera).
template <typename Scalar>
struct Camera {
    using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
    using Quat = Eigen::Quaternion<Scalar>;

    int frame_id = 0;
    Scalar fx = 0, fy = 0;
    Scalar cx = 0, cy = 0;
    Quat rotation = Quat::Identity();  // world -> camera
    Vec3 translation = Vec3::Zero();   // world -> camera

    Camera() = default;

    Camera(int frame, Scalar fx_, Scalar fy_, Scalar cx_, Scalar cy_,
           const Quat& rot, const Vec3& trans)
        : frame_id(frame), fx(fx_), fy(fy_), cx(cx_), cy(cy_), rotation(rot),
          translation(trans) {
        if (!(fx > 0) || !(fy > 0))
            throw std::invalid_argument("Camera: focal lengths must be positive");
        if (!(cx >= 0) || !(cy >= 0) || !std::isfinite(double(cx)) || !std::isfinite(double(cy)))
            throw std::invalid_argument("Camera: principal point must be finite and non-negative");
        const Scalar n = rotation.norm();
        if (std::abs(double(n) - 1.0) > 1e-6)
            throw std::invalid_argument("Camera: rotation quaternion is not unit");
        rotation.normalize();
    }

    Vec3 worldToCamera(const Vec3& p) const { return rotation * p + translation; }

    /// Camera center in world coordinates.
    Vec3 center() const { return rotation.conjugate() * (-translation); }

    /// Viewing direction (camera +z) expressed in world coordinates.
    Vec3 forward() const { return rotation.conjugate() * Vec3(0, 0, 1); }
};

using Camerad = Camera<double>;

}  // namespace csplat
