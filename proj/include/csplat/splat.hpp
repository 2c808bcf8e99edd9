#pragma once

#include "csplat/camera.hpp"
#include "csplat/cloud.hpp"
#include "csplat/image.hpp"
#include "csplat/parallel.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace csplat {

/// Rendering constants. All of them are part of the differentiated
/// function: gradients are exact for the function as implemented.
inline constexpr double kNearClip = 0.01;      // scene units
inline constexpr double kCovFloor = 0.3;       // pixel^2, added to cov2d diagonal
inline constexpr double kTruncQ = 9.0;         // 3-sigma elliptical footprint cutoff
inline constexpr double kTermTransmittance = 1e-4;

template <typename Scalar>
struct ProjectedGaussian {
    Eigen::Matrix<Scalar, 2, 1> mean2d;  // pixel coordinates
    Eigen::Matrix<Scalar, 2, 2> cov2d;   // pixel^2, floor already added
    Scalar depth;                        // camera-frame z
    Scalar opacity;
    Eigen::Matrix<Scalar, 3, 1> color;
    int source_index;
};

/// Perspective-project every Gaussian in front of the near plane and sort
/// the survivors by depth (source index breaks ties). cov2d = J Sigma J^T
/// with the local affine pinhole Jacobian J, plus the anti-aliasing floor.
template <typename Scalar>
std::vector<ProjectedGaussian<Scalar>> project(const GaussianCloud<Scalar>& cloud,
                                               const Camera<Scalar>& camera) {
    using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
    using Mat23 = Eigen::Matrix<Scalar, 2, 3>;
    if (cloud.empty()) throw std::invalid_argument("project: empty cloud");

    const Mat3 rc = camera.rotation.toRotationMatrix();
    std::vector<ProjectedGaussian<Scalar>> out;
    out.reserve(cloud.size());

    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto& g = cloud[i];
        const Eigen::Matrix<Scalar, 3, 1> p = rc * g.position + camera.translation;
        const Scalar z = p.z();
        if (!(z > Scalar(kNearClip))) continue;

        ProjectedGaussian<Scalar> pg;
        pg.mean2d = {camera.fx * p.x() / z + camera.cx,
                     camera.fy * p.y() / z + camera.cy};

        Mat23 jac;
        jac << camera.fx / z, 0, -camera.fx * p.x() / (z * z),
               0, camera.fy / z, -camera.fy * p.y() / (z * z);
        const Mat23 w2 = jac * rc;
        pg.cov2d = w2 * g.covariance() * w2.transpose();
        pg.cov2d(0, 0) += Scalar(kCovFloor);
        pg.cov2d(1, 1) += Scalar(kCovFloor);

        pg.depth = z;
        pg.opacity = g.opacity;
        pg.color = g.color;
        pg.source_index = int(i);
        out.push_back(pg);
    }

    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.depth != b.depth) return a.depth < b.depth;
        return a.source_index < b.source_index;
    });
    return out;
}

struct RenderStats {
    std::uint64_t composited_pairs = 0;  // pixel/Gaussian pairs that contributed
    std::uint64_t truncated_pairs = 0;   // pairs rejected by the 3-sigma cutoff
    std::uint64_t pair_checksum = 0;     // order-independent id hash of composited pairs

    bool operator==(const RenderStats&) const = default;
};

template <typename Scalar>
struct RenderResult {
    Image<Scalar> image;
    typename Image<Scalar>::Channel weight;  // per-pixel accumulated alpha mass
    RenderStats stats;
};

template <typename Scalar>
struct CloudGradients {
    using MatX2 = Eigen::Matrix<Scalar, Eigen::Dynamic, 2>;
    using MatX3 = Eigen::Matrix<Scalar, Eigen::Dynamic, 3>;
    using MatX4 = Eigen::Matrix<Scalar, Eigen::Dynamic, 4>;
    using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    MatX3 position;
    MatX3 scale_raw;    // w.r.t. log(scale)
    MatX4 rotation_raw; // w.r.t. quaternion coeffs (x,y,z,w), through normalization
    VecX opacity_raw;   // w.r.t. logit(opacity)
    MatX3 color;

    static CloudGradients zero(Eigen::Index n) {
        CloudGradients g;
        g.position = MatX3::Zero(n, 3);
        g.scale_raw = MatX3::Zero(n, 3);
        g.rotation_raw = MatX4::Zero(n, 4);
        g.opacity_raw = VecX::Zero(n);
        g.color = MatX3::Zero(n, 3);
        return g;
    }
};

namespace detail {

inline constexpr int kTileSize = 16;

template <typename Scalar>
struct RasterGaussian {
    Scalar mx, my;         // mean, pixel coords
    Scalar ca, cb, cc;     // conic = cov2d^{-1} entries (00, 01, 11)
    Scalar opacity;
    Scalar col[3];
    int src;
    int x0, x1, y0, y1;    // inclusive pixel bbox, clamped to the image
};

template <typename Scalar>
struct RasterScene {
    int width = 0, height = 0;
    int tiles_x = 0, tiles_y = 0;
    std::vector<RasterGaussian<Scalar>> gaussians;        // depth order
    std::vector<std::vector<std::int32_t>> tile_lists;    // indices, depth order
};

template <typename Scalar>
RasterScene<Scalar> prepareRaster(const GaussianCloud<Scalar>& cloud,
                                  const Camera<Scalar>& camera, int width, int height) {
    if (width <= 0 || height <= 0)
        throw std::invalid_argument("render: non-positive image dimensions");

    RasterScene<Scalar> rs;
    rs.width = width;
    rs.height = height;
    rs.tiles_x = (width + kTileSize - 1) / kTileSize;
    rs.tiles_y = (height + kTileSize - 1) / kTileSize;
    rs.tile_lists.assign(size_t(rs.tiles_x) * rs.tiles_y, {});

    const auto projected = project(cloud, camera);
    rs.gaussians.reserve(projected.size());

    for (const auto& pg : projected) {
        const Scalar det = pg.cov2d(0, 0) * pg.cov2d(1, 1) - pg.cov2d(0, 1) * pg.cov2d(1, 0);
        if (!(det > Scalar(0))) continue;  // floor guarantees this; belt and braces
        RasterGaussian<Scalar> rg;
        rg.mx = pg.mean2d.x();
        rg.my = pg.mean2d.y();
        rg.ca = pg.cov2d(1, 1) / det;
        rg.cb = -pg.cov2d(0, 1) / det;
        rg.cc = pg.cov2d(0, 0) / det;
        rg.opacity = pg.opacity;
        rg.col[0] = pg.color.x();
        rg.col[1] = pg.color.y();
        rg.col[2] = pg.color.z();
        rg.src = pg.source_index;

        // Pixel centers sit at integer + 0.5; the 3-sigma extent along an
        // axis is 3*sqrt(cov_axis).
        const Scalar rx = Scalar(3) * std::sqrt(pg.cov2d(0, 0));
        const Scalar ry = Scalar(3) * std::sqrt(pg.cov2d(1, 1));
        rg.x0 = std::max(0, int(std::ceil(rg.mx - rx - Scalar(0.5))));
        rg.x1 = std::min(width - 1, int(std::floor(rg.mx + rx - Scalar(0.5))));
        rg.y0 = std::max(0, int(std::ceil(rg.my - ry - Scalar(0.5))));
        rg.y1 = std::min(height - 1, int(std::floor(rg.my + ry - Scalar(0.5))));
        if (rg.x0 > rg.x1 || rg.y0 > rg.y1) continue;  // footprint off screen

        const int idx = int(rs.gaussians.size());
        rs.gaussians.push_back(rg);

        const int tx0 = rg.x0 / kTileSize, tx1 = rg.x1 / kTileSize;
        const int ty0 = rg.y0 / kTileSize, ty1 = rg.y1 / kTileSize;
        for (int ty = ty0; ty <= ty1; ++ty)
            for (int tx = tx0; tx <= tx1; ++tx)
                rs.tile_lists[size_t(ty) * rs.tiles_x + tx].push_back(idx);
    }
    return rs;
}

}  // namespace detail

/// Forward splatting with per-pixel alpha mass and coverage statistics.
template <typename Scalar>
RenderResult<Scalar> renderFull(const GaussianCloud<Scalar>& cloud,
                                const Camera<Scalar>& camera, int width, int height) {
    using detail::kTileSize;
    const auto rs = detail::prepareRaster(cloud, camera, width, height);

    RenderResult<Scalar> out;
    out.image = Image<Scalar>::zeros(width, height);
    out.weight = Image<Scalar>::Channel::Zero(height, width);

    const int ntiles = rs.tiles_x * rs.tiles_y;
    std::vector<RenderStats> tile_stats(static_cast<std::size_t>(ntiles));

    parallelBlocks(ntiles, [&](int tile) {
        const auto& list = rs.tile_lists[size_t(tile)];
        const int tx = tile % rs.tiles_x, ty = tile / rs.tiles_x;
        const int px0 = tx * kTileSize, px1 = std::min(width, px0 + kTileSize);
        const int py0 = ty * kTileSize, py1 = std::min(height, py0 + kTileSize);
        RenderStats st;

        for (int py = py0; py < py1; ++py) {
            for (int px = px0; px < px1; ++px) {
                const Scalar cxp = Scalar(px) + Scalar(0.5);
                const Scalar cyp = Scalar(py) + Scalar(0.5);
                Scalar T = 1, r = 0, g = 0, b = 0;
                for (const std::int32_t idx : list) {
                    if (T < Scalar(kTermTransmittance)) break;
                    const auto& G = rs.gaussians[size_t(idx)];
                    if (px < G.x0 || px > G.x1 || py < G.y0 || py > G.y1) continue;
                    const Scalar dx = cxp - G.mx, dy = cyp - G.my;
                    const Scalar q = G.ca * dx * dx + Scalar(2) * G.cb * dx * dy + G.cc * dy * dy;
                    if (q > Scalar(kTruncQ)) {
                        ++st.truncated_pairs;
                        continue;
                    }
                    const Scalar gauss = std::exp(Scalar(-0.5) * q);
                    const Scalar alpha = G.opacity * gauss;
                    const Scalar w = alpha * T;
                    r += w * G.col[0];
                    g += w * G.col[1];
                    b += w * G.col[2];
                    T *= (Scalar(1) - alpha);
                    ++st.composited_pairs;
                    st.pair_checksum +=
                        std::uint64_t(py) * 8191u * std::uint64_t(width) +
                        std::uint64_t(px) * 8191u + std::uint64_t(G.src);
                }
                out.image.ch[0](py, px) = r;
                out.image.ch[1](py, px) = g;
                out.image.ch[2](py, px) = b;
                out.weight(py, px) = Scalar(1) - T;
            }
        }
        tile_stats[size_t(tile)] = st;
    });

    for (const auto& st : tile_stats) {
        out.stats.composited_pairs += st.composited_pairs;
        out.stats.truncated_pairs += st.truncated_pairs;
        out.stats.pair_checksum += st.pair_checksum;
    }
    return out;
}

template <typename Scalar>
Image<Scalar> render(const GaussianCloud<Scalar>& cloud, const Camera<Scalar>& camera,
                     int width, int height) {
    return renderFull(cloud, camera, width, height).image;
}

/// Exact gradients of <grad_output, render(cloud, camera)> with respect to
/// every Gaussian parameter, under the same truncation and early-termination
/// rules as the forward pass. Raw space: log-scale, logit-opacity,
/// quaternion coefficients through normalization.
template <typename Scalar>
CloudGradients<Scalar> renderBackward(const GaussianCloud<Scalar>& cloud,
                                      const Camera<Scalar>& camera,
                                      const Image<Scalar>& grad_output) {
    using detail::kTileSize;
    using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
    using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
    using Mat2 = Eigen::Matrix<Scalar, 2, 2>;
    using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
    using Mat23 = Eigen::Matrix<Scalar, 2, 3>;

    if (grad_output.empty())
        throw std::invalid_argument("renderBackward: empty gradient image");
    const int width = grad_output.width, height = grad_output.height;
    const auto rs = detail::prepareRaster(cloud, camera, width, height);

    // Screen-space gradient slots per rasterized Gaussian:
    // [d/dmu_x, d/dmu_y, d/dA00, d/dA01, d/dA11, d/dopacity, d/dr, d/dg, d/db]
    constexpr int kSlots = 9;
    const int ntiles = rs.tiles_x * rs.tiles_y;
    std::vector<std::vector<Scalar>> tile_grads(static_cast<std::size_t>(ntiles));

    struct Visit {
        std::int32_t idx;
        Scalar alpha, gauss, T, dot, dx, dy, w;
    };

    parallelBlocks(ntiles, [&](int tile) {
        const auto& list = rs.tile_lists[size_t(tile)];
        if (list.empty()) return;
        auto& buf = tile_grads[size_t(tile)];
        buf.assign(list.size() * kSlots, Scalar(0));

        const int tx = tile % rs.tiles_x, ty = tile / rs.tiles_x;
        const int px0 = tx * kTileSize, px1 = std::min(width, px0 + kTileSize);
        const int py0 = ty * kTileSize, py1 = std::min(height, py0 + kTileSize);

        std::vector<Visit> visits;
        visits.reserve(64);

        for (int py = py0; py < py1; ++py) {
            for (int px = px0; px < px1; ++px) {
                const Scalar cxp = Scalar(px) + Scalar(0.5);
                const Scalar cyp = Scalar(py) + Scalar(0.5);
                const Scalar sr = grad_output.ch[0](py, px);
                const Scalar sg = grad_output.ch[1](py, px);
                const Scalar sb = grad_output.ch[2](py, px);

                visits.clear();
                Scalar T = 1;
                for (std::size_t j = 0; j < list.size(); ++j) {
                    if (T < Scalar(kTermTransmittance)) break;
                    const auto& G = rs.gaussians[size_t(list[j])];
                    if (px < G.x0 || px > G.x1 || py < G.y0 || py > G.y1) continue;
                    const Scalar dx = cxp - G.mx, dy = cyp - G.my;
                    const Scalar q = G.ca * dx * dx + Scalar(2) * G.cb * dx * dy + G.cc * dy * dy;
                    if (q > Scalar(kTruncQ)) continue;
                    const Scalar gauss = std::exp(Scalar(-0.5) * q);
                    const Scalar alpha = G.opacity * gauss;
                    const Scalar dot = G.col[0] * sr + G.col[1] * sg + G.col[2] * sb;
                    visits.push_back({std::int32_t(j), alpha, gauss, T, dot, dx, dy, alpha * T});
                    T *= (Scalar(1) - alpha);
                }

                Scalar suffix = 0;  // sum over later visits of w_j * dot_j
                for (auto it = visits.rbegin(); it != visits.rend(); ++it) {
                    const auto& v = *it;
                    const auto& G = rs.gaussians[size_t(list[size_t(v.idx)])];
                    Scalar* slot = buf.data() + size_t(v.idx) * kSlots;

                    const Scalar dalpha = v.T * v.dot - suffix / (Scalar(1) - v.alpha);
                    suffix += v.w * v.dot;

                    const Scalar dgauss = dalpha * G.opacity;
                    const Scalar dq = Scalar(-0.5) * v.gauss * dgauss;
                    // q = a*dx^2 + 2b*dx*dy + c*dy^2 with d = p - mu
                    const Scalar adx = G.ca * v.dx + G.cb * v.dy;
                    const Scalar ady = G.cb * v.dx + G.cc * v.dy;
                    slot[0] += dq * Scalar(-2) * adx;        // d/dmu_x
                    slot[1] += dq * Scalar(-2) * ady;        // d/dmu_y
                    slot[2] += dq * v.dx * v.dx;             // d/dA00
                    slot[3] += dq * v.dx * v.dy;             // d/dA01 (full-matrix)
                    slot[4] += dq * v.dy * v.dy;             // d/dA11
                    slot[5] += dalpha * v.gauss;             // d/dopacity
                    slot[6] += v.w * sr;
                    slot[7] += v.w * sg;
                    slot[8] += v.w * sb;
                }
            }
        }
    });

    // Deterministic reduction: tiles in index order.
    std::vector<Scalar> screen(size_t(rs.gaussians.size()) * kSlots, Scalar(0));
    for (int tile = 0; tile < ntiles; ++tile) {
        const auto& list = rs.tile_lists[size_t(tile)];
        const auto& buf = tile_grads[size_t(tile)];
        if (buf.empty()) continue;
        for (std::size_t j = 0; j < list.size(); ++j)
            for (int s = 0; s < kSlots; ++s)
                screen[size_t(list[j]) * kSlots + s] += buf[j * kSlots + s];
    }

    // Map screen-space gradients back to the 3D parameters.
    auto grads = CloudGradients<Scalar>::zero(Eigen::Index(cloud.size()));
    const Mat3 rc = camera.rotation.toRotationMatrix();

    for (std::size_t k = 0; k < rs.gaussians.size(); ++k) {
        const Scalar* slot = screen.data() + k * kSlots;
        bool any = false;
        for (int s = 0; s < kSlots; ++s) any = any || slot[s] != Scalar(0);
        if (!any) continue;

        const int src = rs.gaussians[k].src;
        const auto& g = cloud[size_t(src)];

        // Recompute the forward projection chain.
        const Vec3 p = rc * g.position + camera.translation;
        const Scalar X = p.x(), Y = p.y(), Z = p.z();
        Mat23 jac;
        jac << camera.fx / Z, 0, -camera.fx * X / (Z * Z),
               0, camera.fy / Z, -camera.fy * Y / (Z * Z);
        const Mat23 w2 = jac * rc;
        const Mat3 rot = g.rotation.toRotationMatrix();
        const Mat3 m = rot * g.scale.asDiagonal();
        const Mat3 sigma = m * m.transpose();
        Mat2 v = w2 * sigma * w2.transpose();
        v(0, 0) += Scalar(kCovFloor);
        v(1, 1) += Scalar(kCovFloor);
        const Scalar det = v(0, 0) * v(1, 1) - v(0, 1) * v(1, 0);
        Mat2 conic;
        conic << v(1, 1) / det, -v(0, 1) / det, -v(1, 0) / det, v(0, 0) / det;

        const Vec2 gmu(slot[0], slot[1]);
        Mat2 ga;
        ga << slot[2], slot[3], slot[3], slot[4];

        // A = V^{-1}  =>  dL/dV = -A dL/dA A
        const Mat2 gv = -(conic * ga * conic);
        const Mat3 gsigma = w2.transpose() * gv * w2;
        const Mat23 gw2 = Scalar(2) * gv * w2 * sigma;
        const Mat23 gjac = gw2 * rc.transpose();

        Vec3 gp = jac.transpose() * gmu;
        const Scalar z2 = Z * Z, z3 = z2 * Z;
        gp.x() += gjac(0, 2) * (-camera.fx / z2);
        gp.y() += gjac(1, 2) * (-camera.fy / z2);
        gp.z() += gjac(0, 0) * (-camera.fx / z2) + gjac(1, 1) * (-camera.fy / z2) +
                  gjac(0, 2) * (Scalar(2) * camera.fx * X / z3) +
                  gjac(1, 2) * (Scalar(2) * camera.fy * Y / z3);
        grads.position.row(src) = (rc.transpose() * gp).transpose();

        // Sigma = M M^T, M = R diag(s)
        const Mat3 gm = Scalar(2) * gsigma * m;
        for (int a = 0; a < 3; ++a) {
            const Scalar gs = rot.col(a).dot(gm.col(a));
            grads.scale_raw(src, a) = gs * g.scale[a];  // d/d log(s)
        }
        const Mat3 grot = gm * g.scale.asDiagonal();

        // Quaternion: dR/dq for unit q = (w,x,y,z), then project through
        // normalization. Eigen coeffs order is (x,y,z,w).
        const Scalar qw = g.rotation.w(), qx = g.rotation.x(), qy = g.rotation.y(),
                     qz = g.rotation.z();
        Mat3 dw, dxm, dym, dzm;
        dw  <<  0, -qz,  qy,   qz,  0, -qx,  -qy,  qx,   0;
        dxm <<  0,  qy,  qz,   qy, Scalar(-2) * qx, -qw,   qz,  qw, Scalar(-2) * qx;
        dym << Scalar(-2) * qy,  qx,  qw,   qx,  0,  qz,  -qw,  qz, Scalar(-2) * qy;
        dzm << Scalar(-2) * qz, -qw,  qx,   qw, Scalar(-2) * qz,  qy,   qx,  qy,  0;
        Eigen::Matrix<Scalar, 4, 1> gq;  // (x,y,z,w)
        gq[0] = Scalar(2) * (grot.array() * dxm.array()).sum();
        gq[1] = Scalar(2) * (grot.array() * dym.array()).sum();
        gq[2] = Scalar(2) * (grot.array() * dzm.array()).sum();
        gq[3] = Scalar(2) * (grot.array() * dw.array()).sum();
        Eigen::Matrix<Scalar, 4, 1> qc;
        qc << qx, qy, qz, qw;
        grads.rotation_raw.row(src) = (gq - qc * qc.dot(gq)).transpose();

        const Scalar go = slot[5];
        grads.opacity_raw(src) = go * g.opacity * (Scalar(1) - g.opacity);

        grads.color(src, 0) = slot[6];
        grads.color(src, 1) = slot[7];
        grads.color(src, 2) = slot[8];
    }

    return grads;
}

}  // namespace csplat
