#pragma once

// Independent reference implementations used as test oracles. Deliberately
// written as direct O(N^2) / per-window computations so they share no code
// path with the library implementations they check.

#include "csplat/camera.hpp"
#include "csplat/cloud.hpp"
#include "csplat/image.hpp"
#include "csplat/loss.hpp"
#include "csplat/rng.hpp"
#include "csplat/spectral.hpp"
#include "csplat/splat.hpp"

#include <cmath>
#include <complex>
#include <vector>

namespace oracles {

using csplat::Camerad;
using csplat::GaussianCloudd;
using csplat::Gaussiand;
using csplat::Imaged;
using csplat::Rng;

// ---------------------------------------------------------------------------
// Direct DFT low-pass (full O(N^2) transform, every bin touched).

struct DirectLowpassResult {
    Imaged image;
    double max_imag = 0;
};

inline DirectLowpassResult directLowpass(const Imaged& img, const csplat::FrequencyMask& mask) {
    const int W = img.width, H = img.height;
    DirectLowpassResult out;
    out.image = Imaged::zeros(W, H);
    const double tau = 6.283185307179586476925286766559;
    for (int c = 0; c < 3; ++c) {
        std::vector<std::complex<double>> spec(size_t(W) * size_t(H));
        for (int v = 0; v < H; ++v) {
            for (int u = 0; u < W; ++u) {
                if (!mask.contains(u, v)) continue;
                std::complex<double> acc = 0;
                for (int y = 0; y < H; ++y)
                    for (int x = 0; x < W; ++x) {
                        const double ang = -tau * (double(u) * x / W + double(v) * y / H);
                        acc += img.ch[size_t(c)](y, x) *
                               std::complex<double>(std::cos(ang), std::sin(ang));
                    }
                spec[size_t(v) * size_t(W) + size_t(u)] = acc;
            }
        }
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
                std::complex<double> acc = 0;
                for (int v = 0; v < H; ++v)
                    for (int u = 0; u < W; ++u) {
                        const auto s = spec[size_t(v) * size_t(W) + size_t(u)];
                        if (s == std::complex<double>(0, 0)) continue;
                        const double ang = tau * (double(u) * x / W + double(v) * y / H);
                        acc += s * std::complex<double>(std::cos(ang), std::sin(ang));
                    }
                acc /= double(W) * double(H);
                out.image.ch[size_t(c)](y, x) = acc.real();
                out.max_imag = std::max(out.max_imag, std::abs(acc.imag()));
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Direct windowed SSIM + L1 distance (per-window loops, 'valid' region).

inline double referenceDist(const Imaged& a, const Imaged& b, double lambda, int window,
                            double sigma, double c1 = 1e-4, double c2 = 9e-4) {
    double l1 = 0;
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < a.height; ++y)
            for (int x = 0; x < a.width; ++x)
                l1 += std::abs(a.ch[size_t(c)](y, x) - b.ch[size_t(c)](y, x));
    l1 /= double(a.size());
    if (lambda <= 0) return l1;

    std::vector<double> w2d(size_t(window) * size_t(window));
    {
        std::vector<double> g(static_cast<std::size_t>(window));
        double sum = 0;
        const double mid = (window - 1) / 2.0;
        for (int i = 0; i < window; ++i) {
            g[size_t(i)] = std::exp(-(i - mid) * (i - mid) / (2 * sigma * sigma));
            sum += g[size_t(i)];
        }
        for (auto& v : g) v /= sum;
        for (int i = 0; i < window; ++i)
            for (int j = 0; j < window; ++j)
                w2d[size_t(i) * size_t(window) + size_t(j)] = g[size_t(i)] * g[size_t(j)];
    }

    double ssim_sum = 0;
    long count = 0;
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y + window <= a.height; ++y) {
            for (int x = 0; x + window <= a.width; ++x) {
                double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
                for (int i = 0; i < window; ++i) {
                    for (int j = 0; j < window; ++j) {
                        const double wv = w2d[size_t(i) * size_t(window) + size_t(j)];
                        const double xv = a.ch[size_t(c)](y + i, x + j);
                        const double yv = b.ch[size_t(c)](y + i, x + j);
                        mx += wv * xv;
                        my += wv * yv;
                        mxx += wv * xv * xv;
                        myy += wv * yv * yv;
                        mxy += wv * xv * yv;
                    }
                }
                const double sx = mxx - mx * mx;
                const double sy = myy - my * my;
                const double sxy = mxy - mx * my;
                ssim_sum += ((2 * mx * my + c1) * (2 * sxy + c2)) /
                            ((mx * mx + my * my + c1) * (sx + sy + c2));
                ++count;
            }
        }
    }
    return (1 - lambda) * l1 + lambda * (1 - ssim_sum / double(count));
}

// ---------------------------------------------------------------------------
// Finite-difference check of the splat gradients in raw parameter space.

struct GradCheckTally {
    long checked = 0;
    long passed = 0;
    long excluded = 0;
};

inline GaussianCloudd randomGradCheckScene(Rng& rng, int num_gaussians) {
    GaussianCloudd cloud;
    for (int i = 0; i < num_gaussians; ++i) {
        Eigen::Vector3d pos(rng.uniform(-0.7, 0.7), rng.uniform(-0.5, 0.5),
                            rng.uniform(-0.3, 0.3));
        Eigen::Vector3d scale(rng.uniform(0.05, 0.25), rng.uniform(0.05, 0.25),
                              rng.uniform(0.05, 0.25));
        Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
        if (q.norm() < 1e-6) q = Eigen::Quaterniond::Identity();
        q.normalize();
        const double opacity = rng.uniform(0.2, 0.9);
        Eigen::Vector3d color(rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9),
                              rng.uniform(0.1, 0.9));
        cloud.gaussians.emplace_back(pos, scale, q, opacity, color);
    }
    return cloud;
}

inline Camerad gradCheckCamera(int width, int height) {
    return Camerad(0, double(width), double(width), width / 2.0, height / 2.0,
                   Eigen::Quaterniond(0, 1, 0, 0), Eigen::Vector3d(0, 0, 2.0));
}

// Raw layout per Gaussian: pos(3), log-scale(3), quat coeffs x,y,z,w (4),
// logit-opacity(1), color(3) -> 14 values.
inline constexpr int kRawPerGaussian = 14;

inline std::vector<double> rawFromCloud(const GaussianCloudd& cloud) {
    std::vector<double> raw;
    raw.reserve(cloud.size() * kRawPerGaussian);
    for (const auto& g : cloud.gaussians) {
        for (int a = 0; a < 3; ++a) raw.push_back(g.position[a]);
        for (int a = 0; a < 3; ++a) raw.push_back(std::log(g.scale[a]));
        for (int a = 0; a < 4; ++a) raw.push_back(g.rotation.coeffs()[a]);
        raw.push_back(csplat::logit(g.opacity));
        for (int a = 0; a < 3; ++a) raw.push_back(g.color[a]);
    }
    return raw;
}

inline GaussianCloudd cloudFromRaw(const std::vector<double>& raw) {
    GaussianCloudd cloud;
    const std::size_t n = raw.size() / kRawPerGaussian;
    for (std::size_t i = 0; i < n; ++i) {
        const double* p = raw.data() + i * kRawPerGaussian;
        Eigen::Quaterniond q(p[9], p[6], p[7], p[8]);  // (w, x, y, z) from coeffs order
        cloud.gaussians.emplace_back(
            Eigen::Vector3d(p[0], p[1], p[2]),
            Eigen::Vector3d(std::exp(p[3]), std::exp(p[4]), std::exp(p[5])), q,
            csplat::sigmoid(p[10]), Eigen::Vector3d(p[11], p[12], p[13]));
    }
    return cloud;
}

inline std::vector<double> flattenGradients(const csplat::CloudGradients<double>& g) {
    std::vector<double> out;
    const Eigen::Index n = g.position.rows();
    out.reserve(size_t(n) * kRawPerGaussian);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int a = 0; a < 3; ++a) out.push_back(g.position(i, a));
        for (int a = 0; a < 3; ++a) out.push_back(g.scale_raw(i, a));
        for (int a = 0; a < 4; ++a) out.push_back(g.rotation_raw(i, a));
        out.push_back(g.opacity_raw(i));
        for (int a = 0; a < 3; ++a) out.push_back(g.color(i, a));
    }
    return out;
}

/// Central finite differences against renderBackward over `scenes` seeded
/// scenes. Parameters whose +/-h evaluations change the discrete coverage
/// structure (3-sigma truncation or early termination flips) are excluded.
inline GradCheckTally gradCheck(int scenes, int gaussians, int width, int height, double h,
                                double rel_tol, std::uint64_t seed0 = 101) {
    GradCheckTally tally;
    for (int s = 0; s < scenes; ++s) {
        Rng rng(seed0 + std::uint64_t(s));
        const auto cloud = randomGradCheckScene(rng, gaussians);
        const auto cam = gradCheckCamera(width, height);
        Imaged grad_out(width, height);
        for (auto& c : grad_out.ch)
            for (Eigen::Index i = 0; i < c.size(); ++i)
                c.data()[i] = rng.uniform(-1.0, 1.0);

        const auto analytic = flattenGradients(csplat::renderBackward(cloud, cam, grad_out));
        const auto raw0 = rawFromCloud(cloud);

        auto objective = [&](const std::vector<double>& raw, csplat::RenderStats* stats) {
            const auto c2 = cloudFromRaw(raw);
            const auto rr = csplat::renderFull(c2, cam, width, height);
            if (stats) *stats = rr.stats;
            double v = 0;
            for (int c = 0; c < 3; ++c)
                v += (rr.image.ch[size_t(c)] * grad_out.ch[size_t(c)]).sum();
            return v;
        };

        for (std::size_t p = 0; p < raw0.size(); ++p) {
            auto raw = raw0;
            csplat::RenderStats st_plus, st_minus;
            raw[p] = raw0[p] + h;
            const double fp = objective(raw, &st_plus);
            raw[p] = raw0[p] - h;
            const double fm = objective(raw, &st_minus);
            if (!(st_plus == st_minus)) {
                ++tally.excluded;
                continue;
            }
            const double fd = (fp - fm) / (2 * h);
            const double an = analytic[p];
            const double denom = std::max({std::abs(an), std::abs(fd), 1e-6});
            ++tally.checked;
            if (std::abs(an - fd) / denom < rel_tol) ++tally.passed;
        }
    }
    return tally;
}

}  // namespace oracles
