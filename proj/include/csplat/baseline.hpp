#pragma once

#include "csplat/camera.hpp"
#include "csplat/image.hpp"
#include "csplat/optim.hpp"
#include "csplat/synth.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace csplat {

template <typename Scalar>
struct BaselineResult {
    std::vector<Image<Scalar>> clean;
    std::vector<Image<Scalar>> caustic;
    // Pixels copied from the input because fewer than ceil(window/2)
    // warped samples were available.
    std::vector<Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>> low_support;
};

namespace detail {

/// Bilinear sample at continuous pixel-center coordinates. Valid only when
/// all four neighbors exist (border policy: invalid, not extended).
template <typename Scalar>
bool sampleBilinear(const Image<Scalar>& img, Scalar x, Scalar y, Scalar out[3]) {
    // (x, y) are pixel-center coordinates: texel (i, j) sits at (i+0.5, j+0.5).
    const Scalar u = x - Scalar(0.5);
    const Scalar v = y - Scalar(0.5);
    if (!(u >= Scalar(0)) || !(v >= Scalar(0)) || !(u <= Scalar(img.width - 1)) ||
        !(v <= Scalar(img.height - 1)))
        return false;
    int i0 = int(u), j0 = int(v);
    if (i0 > img.width - 2) i0 = img.width - 2;
    if (j0 > img.height - 2) j0 = img.height - 2;
    if (img.width == 1) i0 = 0;
    if (img.height == 1) j0 = 0;
    const Scalar fx = u - Scalar(i0), fy = v - Scalar(j0);
    const int i1 = std::min(i0 + 1, img.width - 1);
    const int j1 = std::min(j0 + 1, img.height - 1);
    for (int c = 0; c < 3; ++c) {
        const auto& ch = img.ch[size_t(c)];
        out[c] = (Scalar(1) - fy) * ((Scalar(1) - fx) * ch(j0, i0) + fx * ch(j0, i1)) +
                 fy * ((Scalar(1) - fx) * ch(j1, i0) + fx * ch(j1, i1));
    }
    return true;
}

template <typename Scalar>
Scalar medianOf(std::vector<Scalar>& v) {
    const std::size_t n = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + long(n), v.end());
    Scalar med = v[n];
    if (v.size() % 2 == 0) {
        std::nth_element(v.begin(), v.begin() + long(n) - 1, v.end());
        med = Scalar(0.5) * (med + v[n - 1]);
    }
    return med;
}

}  // namespace detail

/// Warp source frame `src` into the view of `dst` through the scene plane:
/// for each destination pixel, intersect its ray with the plane and sample
/// the source image there.
template <typename Scalar>
void warpViaPlane(const Camera<Scalar>& dst_cam, const Camera<Scalar>& src_cam,
                  const Image<Scalar>& src, const PlaneSpec<Scalar>& plane,
                  Image<Scalar>& out,
                  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& valid) {
    using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
    const int w = out.width, h = out.height;
    valid.setConstant(h, w, false);

    const Eigen::Matrix<Scalar, 3, 3> rdst = dst_cam.rotation.toRotationMatrix();
    const Vec3 center = dst_cam.center();
    const Scalar ndotc = plane.normal.dot(center);

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Vec3 dir_cam((Scalar(x) + Scalar(0.5) - dst_cam.cx) / dst_cam.fx,
                               (Scalar(y) + Scalar(0.5) - dst_cam.cy) / dst_cam.fy,
                               Scalar(1));
            const Vec3 dir = rdst.transpose() * dir_cam;
            const Scalar denom = plane.normal.dot(dir);
            if (std::abs(double(denom)) < 1e-12) continue;
            const Scalar lambda = (plane.offset - ndotc) / denom;
            if (!(lambda > Scalar(0))) continue;
            const Vec3 world = center + lambda * dir;
            const Vec3 pc = src_cam.worldToCamera(world);
            if (!(pc.z() > Scalar(kNearClip))) continue;
            const Scalar sx = src_cam.fx * pc.x() / pc.z() + src_cam.cx;
            const Scalar sy = src_cam.fy * pc.y() / pc.z() + src_cam.cy;
            Scalar rgb[3];
            if (!detail::sampleBilinear(src, sx, sy, rgb)) continue;
            for (int c = 0; c < 3; ++c) out.ch[size_t(c)](y, x) = rgb[c];
            valid(y, x) = true;
        }
    }
}

/// Motion-compensated temporal median over a sliding window of frames
/// warped via the known scene plane. clean + caustic = input exactly.
template <typename Scalar>
BaselineResult<Scalar> filterSequence(const std::vector<Frame<Scalar>>& frames,
                                      const PlaneSpec<Scalar>& plane, int window) {
    if (window < 1 || window % 2 == 0)
        throw std::invalid_argument("filterSequence: window must be odd and positive");
    if (frames.empty()) throw std::invalid_argument("filterSequence: no frames");
    if (!(plane.normal.norm() > Scalar(0)))
        throw std::invalid_argument("filterSequence: degenerate plane");

    const int nf = int(frames.size());
    const int half = window / 2;
    const int min_support = (window + 1) / 2;

    BaselineResult<Scalar> out;
    out.clean.resize(size_t(nf));
    out.caustic.resize(size_t(nf));
    out.low_support.resize(size_t(nf));

    parallelBlocks(nf, [&](int t) {
        const auto& ref = frames[size_t(t)];
        const int w = ref.image.width, h = ref.image.height;

        std::vector<Image<Scalar>> stack;
        std::vector<Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>> valid;
        for (int s = std::max(0, t - half); s <= std::min(nf - 1, t + half); ++s) {
            Image<Scalar> warped = Image<Scalar>::zeros(w, h);
            Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> mask;
            warpViaPlane(ref.camera, frames[size_t(s)].camera, frames[size_t(s)].image,
                         plane, warped, mask);
            stack.push_back(std::move(warped));
            valid.push_back(std::move(mask));
        }

        Image<Scalar> clean = Image<Scalar>::zeros(w, h);
        Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> low =
            Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(h, w, false);
        std::vector<Scalar> samples;
        samples.reserve(stack.size());

        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                int support = 0;
                for (const auto& m : valid) support += m(y, x) ? 1 : 0;
                if (support < min_support) {
                    for (int c = 0; c < 3; ++c)
                        clean.ch[size_t(c)](y, x) = ref.image.ch[size_t(c)](y, x);
                    low(y, x) = true;
                    continue;
                }
                for (int c = 0; c < 3; ++c) {
                    samples.clear();
                    for (std::size_t s = 0; s < stack.size(); ++s)
                        if (valid[s](y, x)) samples.push_back(stack[s].ch[size_t(c)](y, x));
                    clean.ch[size_t(c)](y, x) = detail::medianOf(samples);
                }
            }
        }

        out.caustic[size_t(t)] = ref.image - clean;
        out.clean[size_t(t)] = std::move(clean);
        out.low_support[size_t(t)] = std::move(low);
    });

    return out;
}

}  // namespace csplat
