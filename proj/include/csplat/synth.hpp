#pragma once

#include "csplat/camera.hpp"
#include "csplat/cloud.hpp"
#include "csplat/image.hpp"
#include "csplat/rng.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace csplat {

/// Scene plane n . X = offset, the reference surface for homography warps.
template <typename Scalar>
struct PlaneSpec {
    Eigen::Matrix<Scalar, 3, 1> normal{Scalar(0), Scalar(0), Scalar(1)};
    Scalar offset = Scalar(0);
};

/// Procedural seafloor: a jittered grid of splats on z = 0 (optionally a
/// sinusoidal relief), colored by a deterministic multi-octave texture.
template <typename Scalar>
struct SceneSpec {
    int num_gaussians = 500;
    Scalar extent_x = Scalar(3.6);  // half-extent of the textured plane
    Scalar extent_y = Scalar(1.6);
    Scalar relief_amplitude = Scalar(0);  // 0 = flat
    Scalar relief_cycles = Scalar(1.5);   // relief periods across extent_x
    Scalar jitter = Scalar(0.35);         // position jitter, fraction of grid spacing
    Scalar thickness = Scalar(0.25);      // z-scale relative to in-plane scale
    std::uint64_t seed = 0;

    void validate() const {
        if (num_gaussians < 1) throw std::invalid_argument("SceneSpec: num_gaussians < 1");
        if (!(extent_x > Scalar(0)) || !(extent_y > Scalar(0)))
            throw std::invalid_argument("SceneSpec: extents must be positive");
        if (relief_amplitude < Scalar(0))
            throw std::invalid_argument("SceneSpec: negative relief amplitude");
    }
};

template <typename Scalar>
struct SceneResult {
    GaussianCloud<Scalar> cloud;
    PlaneSpec<Scalar> plane;
};

namespace detail {

/// Smooth deterministic texture in [0.3, 0.85] with content from broad
/// patches down to sub-splat detail. Phases derive from the seed.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> proceduralTexture(Scalar x, Scalar y, Scalar ex, Scalar ey,
                                              const Scalar* phases) {
    const Scalar u = x / ex, v = y / ey;  // roughly [-1, 1]
    auto wave = [&](Scalar fu, Scalar fv, Scalar ph) {
        return std::sin(Scalar(EIGEN_PI) * (fu * u + fv * v) + ph);
    };
    const Scalar base = Scalar(0.55) + Scalar(0.16) * wave(1, 1, phases[0]) +
                        Scalar(0.10) * wave(3, 2, phases[1]) +
                        Scalar(0.07) * wave(7, 5, phases[2]) +
                        Scalar(0.05) * wave(13, 9, phases[3]) +
                        Scalar(0.04) * wave(23, 17, phases[4]);
    Eigen::Matrix<Scalar, 3, 1> rgb;
    rgb[0] = base + Scalar(0.06) * wave(5, 3, phases[5]);
    rgb[1] = base + Scalar(0.06) * wave(4, 6, phases[6]);
    rgb[2] = base + Scalar(0.06) * wave(6, 4, phases[7]);
    for (int c = 0; c < 3; ++c) rgb[c] = std::min(Scalar(0.85), std::max(Scalar(0.3), rgb[c]));
    return rgb;
}

}  // namespace detail

template <typename Scalar>
SceneResult<Scalar> makeScene(const SceneSpec<Scalar>& spec) {
    using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
    using Quat = Eigen::Quaternion<Scalar>;
    spec.validate();
    Rng rng(spec.seed);

    Scalar phases[8];
    for (auto& p : phases) p = Scalar(rng.uniform(0, 2 * EIGEN_PI));

    // Grid layout proportional to the plane aspect.
    const Scalar aspect = spec.extent_x / spec.extent_y;
    int ny = std::max(1, int(std::floor(std::sqrt(double(spec.num_gaussians) / double(aspect)))));
    int nx = (spec.num_gaussians + ny - 1) / ny;
    while (nx * ny < spec.num_gaussians) ++nx;

    const Scalar sx = Scalar(2) * spec.extent_x / Scalar(nx);
    const Scalar sy = Scalar(2) * spec.extent_y / Scalar(ny);
    const Scalar spacing = Scalar(0.5) * (sx + sy);

    auto relief = [&](Scalar x, Scalar y) -> Scalar {
        if (spec.relief_amplitude <= Scalar(0)) return Scalar(0);
        const Scalar fx = Scalar(EIGEN_PI) * spec.relief_cycles / spec.extent_x;
        const Scalar fy = Scalar(EIGEN_PI) * spec.relief_cycles / spec.extent_y;
        return spec.relief_amplitude *
               (std::sin(fx * x + phases[0]) * std::cos(fy * y + phases[1]) +
                Scalar(0.5) * std::sin(Scalar(2.3) * fx * x + phases[2]));
    };

    SceneResult<Scalar> out;
    out.cloud.gaussians.reserve(size_t(spec.num_gaussians));

    int made = 0;
    for (int iy = 0; iy < ny && made < spec.num_gaussians; ++iy) {
        for (int ix = 0; ix < nx && made < spec.num_gaussians; ++ix, ++made) {
            Scalar x = -spec.extent_x + (Scalar(ix) + Scalar(0.5)) * sx;
            Scalar y = -spec.extent_y + (Scalar(iy) + Scalar(0.5)) * sy;
            x += spec.jitter * sx * Scalar(rng.uniform(-1, 1));
            y += spec.jitter * sy * Scalar(rng.uniform(-1, 1));
            if (spec.num_gaussians == 1) { x = 0; y = 0; }
            const Scalar z = relief(x, y);

            Vec3 scale;
            scale.x() = spacing * Scalar(0.45 + 0.25 * rng.uniform());
            scale.y() = spacing * Scalar(0.45 + 0.25 * rng.uniform());
            scale.z() = std::max(Scalar(kScaleFloor) * Scalar(2),
                                 spec.thickness * spacing * Scalar(0.5 + 0.5 * rng.uniform()));

            // Small random in-plane tilt.
            const Scalar ang = Scalar(rng.uniform(0, 2 * EIGEN_PI));
            Quat q(Eigen::AngleAxis<Scalar>(ang, Vec3::UnitZ()));

            const Scalar opacity = Scalar(0.75 + 0.2 * rng.uniform());
            const Vec3 color =
                detail::proceduralTexture<Scalar>(x, y, spec.extent_x, spec.extent_y, phases);
            out.cloud.gaussians.emplace_back(Vec3(x, y, z), scale, q, opacity, color);
        }
    }
    return out;
}

/// Top-down camera sweeps over the scene plane.
template <typename Scalar>
struct TrajectorySpec {
    enum class Pattern { Lawnmower, Arc, Static };

    Pattern pattern = Pattern::Lawnmower;
    int frames = 24;
    int rows = 2;                      // lawnmower rows
    Scalar altitude = Scalar(2);
    Scalar along_overlap = Scalar(0.8);   // consecutive-footprint overlap along track
    Scalar cross_overlap = Scalar(2.0 / 3.0);  // overlap between rows
    Scalar arc_radius = Scalar(0.5);
    int width = 256;
    int height = 192;
    Scalar focal_px = Scalar(256);

    void validate() const {
        if (frames < 1) throw std::invalid_argument("TrajectorySpec: frames < 1");
        if (rows < 1) throw std::invalid_argument("TrajectorySpec: rows < 1");
        if (!(altitude > Scalar(0)))
            throw std::invalid_argument("TrajectorySpec: altitude must be positive");
        if (!(along_overlap > Scalar(0)) || !(along_overlap < Scalar(1)) ||
            !(cross_overlap > Scalar(0)) || !(cross_overlap < Scalar(1)))
            throw std::invalid_argument("TrajectorySpec: overlaps must be inside (0,1)");
        if (width < 1 || height < 1 || !(focal_px > Scalar(0)))
            throw std::invalid_argument("TrajectorySpec: bad intrinsics");
    }

    Scalar footprintWidth() const { return altitude * Scalar(width) / focal_px; }
    Scalar footprintHeight() const { return altitude * Scalar(height) / focal_px; }
};

namespace detail {

/// Nadir pose: camera x aligned with world x, looking along -z.
template <typename Scalar>
Camera<Scalar> nadirCamera(int frame_id, const TrajectorySpec<Scalar>& spec,
                           Scalar x, Scalar y) {
    using Quat = Eigen::Quaternion<Scalar>;
    using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
    const Quat rot(Scalar(0), Scalar(1), Scalar(0), Scalar(0));  // 180 deg about x
    const Vec3 center(x, y, spec.altitude);
    const Vec3 t = -(rot * center);
    return Camera<Scalar>(frame_id, spec.focal_px, spec.focal_px,
                          Scalar(spec.width) / Scalar(2), Scalar(spec.height) / Scalar(2),
                          rot, t);
}

}  // namespace detail

template <typename Scalar>
std::vector<Camera<Scalar>> makeTrajectory(const TrajectorySpec<Scalar>& spec) {
    using Pattern = typename TrajectorySpec<Scalar>::Pattern;
    spec.validate();
    std::vector<Camera<Scalar>> cams;
    cams.reserve(size_t(spec.frames));

    if (spec.frames == 1 || spec.pattern == Pattern::Static) {
        for (int f = 0; f < spec.frames; ++f)
            cams.push_back(detail::nadirCamera(f, spec, Scalar(0), Scalar(0)));
        return cams;
    }

    if (spec.pattern == Pattern::Arc) {
        for (int f = 0; f < spec.frames; ++f) {
            const Scalar a = Scalar(2) * Scalar(EIGEN_PI) * Scalar(f) / Scalar(spec.frames);
            cams.push_back(detail::nadirCamera(f, spec, spec.arc_radius * std::cos(a),
                                               spec.arc_radius * std::sin(a)));
        }
        return cams;
    }

    // Serpentine lawnmower: consecutive frames step either along track or
    // across rows, each with its configured footprint overlap.
    const int rows = std::min(spec.rows, spec.frames);
    const int cols = (spec.frames + rows - 1) / rows;
    const Scalar dx = (Scalar(1) - spec.along_overlap) * spec.footprintWidth();
    const Scalar dy = (Scalar(1) - spec.cross_overlap) * spec.footprintHeight();
    const Scalar x0 = -Scalar(cols - 1) * dx / Scalar(2);
    const Scalar y0 = -Scalar(rows - 1) * dy / Scalar(2);
    int f = 0;
    for (int r = 0; r < rows && f < spec.frames; ++r) {
        for (int c = 0; c < cols && f < spec.frames; ++c, ++f) {
            const int col = (r % 2 == 0) ? c : cols - 1 - c;
            cams.push_back(detail::nadirCamera(f, spec, x0 + Scalar(col) * dx,
                                               y0 + Scalar(r) * dy));
        }
    }
    return cams;
}

/// Additive per-frame illumination field in image space.
template <typename Scalar>
struct CausticFieldSpec {
    enum class Mode { SinusoidMixture, Refraction };

    Mode mode = Mode::SinusoidMixture;
    int num_components = 4;
    Scalar freq_min = Scalar(0.5);   // cycles per image width
    Scalar freq_max = Scalar(1.6);
    Scalar speed_min = Scalar(0.3);  // phase advance per frame, radians
    Scalar speed_max = Scalar(0.9);
    Scalar amplitude = Scalar(0.25);  // peak |radiance|
    Scalar chroma_jitter = Scalar(0.15);
    bool rectify = false;  // clip negative lobes (non-negative field, adds harmonics)
    std::uint64_t seed = 0;

    void validate() const {
        if (num_components < 1)
            throw std::invalid_argument("CausticFieldSpec: num_components < 1");
        if (!(freq_min > Scalar(0)) || !(freq_max >= freq_min))
            throw std::invalid_argument("CausticFieldSpec: bad frequency range");
        if (!(speed_min >= Scalar(0)) || !(speed_max >= speed_min))
            throw std::invalid_argument("CausticFieldSpec: bad speed range");
        if (!(amplitude >= Scalar(0)))
            throw std::invalid_argument("CausticFieldSpec: negative amplitude");
        if (!(chroma_jitter >= Scalar(0)) || !(chroma_jitter < Scalar(1)))
            throw std::invalid_argument("CausticFieldSpec: chroma_jitter outside [0,1)");
    }
};

namespace detail {

template <typename Scalar>
struct CausticComponent {
    int bu, bv;          // integer DFT bins (exact band content)
    Scalar amp;
    Scalar phase0;
    Scalar speed;
    Scalar chroma[3];
};

/// Component parameters are a pure function of the spec seed; the frame
/// index only advances phases. Frequencies are quantized to DFT bins so
/// the field's band content is exact.
template <typename Scalar>
std::vector<CausticComponent<Scalar>> causticComponents(const CausticFieldSpec<Scalar>& spec,
                                                        int width, int height) {
    std::vector<CausticComponent<Scalar>> comps;
    comps.reserve(size_t(spec.num_components));
    Rng rng(spec.seed);
    for (int j = 0; j < spec.num_components; ++j) {
        CausticComponent<Scalar> c{};
        int bu = 0, bv = 0;
        for (int tries = 0; tries < 32; ++tries) {
            const double theta = rng.uniform(0, 2 * EIGEN_PI);
            const double f = rng.uniform(double(spec.freq_min), double(spec.freq_max));
            bu = int(std::lround(f * std::cos(theta)));
            bv = int(std::lround(f * std::sin(theta) * double(height) / double(width)));
            if (bu != 0 || bv != 0) break;
        }
        if (bu == 0 && bv == 0) bu = 1;
        c.bu = bu;
        c.bv = bv;
        c.amp = Scalar(0.5 + 0.5 * rng.uniform());
        c.phase0 = Scalar(rng.uniform(0, 2 * EIGEN_PI));
        c.speed = Scalar(rng.uniform(double(spec.speed_min), double(spec.speed_max)));
        if (rng.coin()) c.speed = -c.speed;
        for (auto& ch : c.chroma) ch = Scalar(1) + spec.chroma_jitter * Scalar(rng.uniform(-1, 1));
        comps.push_back(c);
    }
    return comps;
}

}  // namespace detail

template <typename Scalar>
Image<Scalar> makeCaustic(const CausticFieldSpec<Scalar>& spec, int frame_index, int width,
                          int height) {
    using Mode = typename CausticFieldSpec<Scalar>::Mode;
    spec.validate();
    if (width < 1 || height < 1)
        throw std::invalid_argument("makeCaustic: bad dimensions");
    Image<Scalar> out = Image<Scalar>::zeros(width, height);
    if (spec.amplitude <= Scalar(0)) return out;

    if (spec.mode == Mode::SinusoidMixture) {
        const auto comps = detail::causticComponents(spec, width, height);
        Scalar peak = 0;
        for (const auto& c : comps)
            peak += c.amp * std::max({c.chroma[0], c.chroma[1], c.chroma[2]});
        const Scalar scale = spec.amplitude / peak;

        for (const auto& c : comps) {
            const Scalar kx = Scalar(2) * Scalar(EIGEN_PI) * Scalar(c.bu) / Scalar(width);
            const Scalar ky = Scalar(2) * Scalar(EIGEN_PI) * Scalar(c.bv) / Scalar(height);
            const Scalar ph = c.phase0 + c.speed * Scalar(frame_index);
            for (int y = 0; y < height; ++y) {
                const Scalar row_phase = ky * Scalar(y) + ph;
                for (int x = 0; x < width; ++x) {
                    const Scalar s = std::sin(kx * Scalar(x) + row_phase);
                    for (int ch = 0; ch < 3; ++ch)
                        out.ch[size_t(ch)](y, x) += scale * c.amp * c.chroma[size_t(ch)] * s;
                }
            }
        }
        if (spec.rectify)
            for (auto& ch : out.ch) ch = ch.max(Scalar(0));
        return out;
    }

    // Refraction mode: traveling-wave surface, parallel rays bent by
    // Snell's law onto the plane, intensity from splatted ray density.
    Rng rng(spec.seed);
    struct Wave {
        Scalar kx, ky, amp, phase, speed;
    };
    std::vector<Wave> waves;
    for (int j = 0; j < spec.num_components; ++j) {
        const double theta = rng.uniform(0, 2 * EIGEN_PI);
        const double f = rng.uniform(double(spec.freq_min), double(spec.freq_max));
        Wave wv;
        wv.kx = Scalar(2 * EIGEN_PI * f * std::cos(theta)) / Scalar(width);
        wv.ky = Scalar(2 * EIGEN_PI * f * std::sin(theta)) / Scalar(height);
        wv.amp = Scalar(rng.uniform(0.5, 1.0));
        wv.phase = Scalar(rng.uniform(0, 2 * EIGEN_PI));
        wv.speed = Scalar(rng.uniform(double(spec.speed_min), double(spec.speed_max)));
        waves.push_back(wv);
    }
    const Scalar eta = Scalar(1.0 / 1.33);
    const Scalar depth = Scalar(0.35) * Scalar(std::min(width, height));
    const Scalar wave_height = Scalar(6);  // surface units, pixels
    const int oversample = 2;

    typename Image<Scalar>::Channel density =
        Image<Scalar>::Channel::Zero(height, width);
    for (int sy = 0; sy < height * oversample; ++sy) {
        for (int sx = 0; sx < width * oversample; ++sx) {
            const Scalar x = (Scalar(sx) + Scalar(0.5)) / Scalar(oversample);
            const Scalar y = (Scalar(sy) + Scalar(0.5)) / Scalar(oversample);
            Scalar gx = 0, gy = 0;
            for (const auto& wv : waves) {
                const Scalar a = wv.kx * x + wv.ky * y + wv.phase +
                                 wv.speed * Scalar(frame_index);
                const Scalar d = wave_height * wv.amp * std::cos(a);
                gx += d * wv.kx;
                gy += d * wv.ky;
            }
            // Surface normal ~ (-gx, -gy, 1); incident ray (0,0,-1).
            const Scalar inv = Scalar(1) / std::sqrt(gx * gx + gy * gy + Scalar(1));
            const Scalar nx = -gx * inv, ny = -gy * inv, nz = inv;
            const Scalar ci = nz;  // cos(theta_i) = -d.n with d=(0,0,-1)
            const Scalar st2 = (Scalar(1) - ci * ci) * eta * eta;
            const Scalar ct = std::sqrt(std::max(Scalar(0), Scalar(1) - st2));
            const Scalar rx = eta * Scalar(0) + (eta * ci - ct) * nx;
            const Scalar ry = eta * Scalar(0) + (eta * ci - ct) * ny;
            const Scalar rz = -eta + (eta * ci - ct) * nz;
            const Scalar tx = x + rx / std::abs(rz) * depth;
            const Scalar ty = y + ry / std::abs(rz) * depth;
            // Bilinear splat.
            const int ix = int(std::floor(tx - Scalar(0.5)));
            const int iy = int(std::floor(ty - Scalar(0.5)));
            const Scalar fx = tx - Scalar(0.5) - Scalar(ix);
            const Scalar fy = ty - Scalar(0.5) - Scalar(iy);
            for (int oy = 0; oy <= 1; ++oy) {
                for (int ox = 0; ox <= 1; ++ox) {
                    const int px = ix + ox, py = iy + oy;
                    if (px < 0 || px >= width || py < 0 || py >= height) continue;
                    const Scalar wgt = (ox ? fx : Scalar(1) - fx) * (oy ? fy : Scalar(1) - fy);
                    density(py, px) += wgt;
                }
            }
        }
    }
    const Scalar mean = density.mean();
    typename Image<Scalar>::Channel dev = density / mean - Scalar(1);
    const Scalar peak = dev.abs().maxCoeff();
    if (peak > Scalar(0)) dev *= spec.amplitude / peak;
    Scalar chroma[3];
    for (auto& c : chroma) c = Scalar(1) + spec.chroma_jitter * Scalar(rng.uniform(-1, 1));
    for (int c = 0; c < 3; ++c) out.ch[size_t(c)] = dev * chroma[size_t(c)];
    return out;
}

}  // namespace csplat
