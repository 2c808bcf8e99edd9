#pragma once

#include "csplat/image.hpp"
#include "csplat/parallel.hpp"

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace csplat {

/// Photometric distance configuration: (1-lambda)*L1 + lambda*(1-SSIM),
/// SSIM with a Gaussian window over the valid (unpadded) region.
template <typename Scalar>
struct LossConfig {
    Scalar lambda_dssim = Scalar(0.2);
    int ssim_window = 11;
    Scalar ssim_sigma = Scalar(1.5);
    Scalar c1 = Scalar(0.01) * Scalar(0.01);
    Scalar c2 = Scalar(0.03) * Scalar(0.03);

    void validate() const {
        if (!(lambda_dssim >= Scalar(0)) || !(lambda_dssim <= Scalar(1)))
            throw std::invalid_argument("LossConfig: lambda_dssim outside [0,1]");
        if (ssim_window < 1 || ssim_window % 2 == 0)
            throw std::invalid_argument("LossConfig: ssim_window must be odd and positive");
        if (!(ssim_sigma > Scalar(0)))
            throw std::invalid_argument("LossConfig: ssim_sigma must be positive");
    }
};

namespace detail {

template <typename Scalar>
std::vector<Scalar> gaussianTaps(int window, Scalar sigma) {
    std::vector<Scalar> g(static_cast<std::size_t>(window));
    const Scalar mid = Scalar(window - 1) / Scalar(2);
    Scalar sum = 0;
    for (int i = 0; i < window; ++i) {
        const Scalar d = Scalar(i) - mid;
        g[size_t(i)] = std::exp(-d * d / (Scalar(2) * sigma * sigma));
        sum += g[size_t(i)];
    }
    for (auto& v : g) v /= sum;
    return g;
}

/// Separable 'valid' correlation with a symmetric kernel. Works column by
/// column (column-major storage) so every tap pass stays in cache.
template <typename Scalar>
typename Image<Scalar>::Channel validConv(const typename Image<Scalar>::Channel& in,
                                          const std::vector<Scalar>& taps) {
    using Channel = typename Image<Scalar>::Channel;
    const int w = int(taps.size());
    const Eigen::Index H = in.rows(), W = in.cols();
    const Eigen::Index oh = H - w + 1, ow = W - w + 1;
    Channel tmp(oh, W);
    for (Eigen::Index x = 0; x < W; ++x) {
        auto col = tmp.col(x);
        col = taps[0] * in.col(x).segment(0, oh);
        for (int a = 1; a < w; ++a) col += taps[size_t(a)] * in.col(x).segment(a, oh);
    }
    Channel out(oh, ow);
    for (Eigen::Index x = 0; x < ow; ++x) {
        auto col = out.col(x);
        col = taps[0] * tmp.col(x);
        for (int b = 1; b < w; ++b) col += taps[size_t(b)] * tmp.col(x + b);
    }
    return out;
}

/// Exact adjoint of validConv: scatters a valid-region map back to full size.
template <typename Scalar>
typename Image<Scalar>::Channel adjointValidConv(const typename Image<Scalar>::Channel& map,
                                                 int full_h, int full_w,
                                                 const std::vector<Scalar>& taps) {
    using Channel = typename Image<Scalar>::Channel;
    const int w = int(taps.size());
    Channel tmp = Channel::Zero(map.rows(), full_w);
    for (Eigen::Index x = 0; x < map.cols(); ++x) {
        const auto col = map.col(x);
        for (int b = 0; b < w; ++b) tmp.col(x + b) += taps[size_t(b)] * col;
    }
    Channel out = Channel::Zero(full_h, full_w);
    for (Eigen::Index x = 0; x < full_w; ++x) {
        const auto col = tmp.col(x);
        auto ocol = out.col(x);
        for (int a = 0; a < w; ++a) ocol.segment(a, map.rows()) += taps[size_t(a)] * col;
    }
    return out;
}

}  // namespace detail

/// Precomputed window statistics of a reference image; lets the training
/// loop reuse the target side of SSIM across steps.
template <typename Scalar>
struct SsimReference {
    using Channel = typename Image<Scalar>::Channel;
    std::array<Channel, 3> mu;   // K(x)
    std::array<Channel, 3> nu;   // K(x^2)
    std::vector<Scalar> taps;
};

template <typename Scalar>
SsimReference<Scalar> precomputeSsimReference(const Image<Scalar>& a,
                                              const LossConfig<Scalar>& cfg) {
    cfg.validate();
    if (a.width < cfg.ssim_window || a.height < cfg.ssim_window)
        throw std::invalid_argument("SSIM: image smaller than window");
    SsimReference<Scalar> ref;
    ref.taps = detail::gaussianTaps(cfg.ssim_window, cfg.ssim_sigma);
    for (int c = 0; c < 3; ++c) {
        ref.mu[size_t(c)] = detail::validConv<Scalar>(a.ch[size_t(c)], ref.taps);
        ref.nu[size_t(c)] = detail::validConv<Scalar>(a.ch[size_t(c)].square(), ref.taps);
    }
    return ref;
}

/// Mean SSIM over channels and the valid window region.
template <typename Scalar>
Scalar ssim(const Image<Scalar>& a, const Image<Scalar>& b, const LossConfig<Scalar>& cfg) {
    a.requireSameShape(b, "ssim");
    const auto ref = precomputeSsimReference(a, cfg);
    std::array<Scalar, 3> per_channel{};
    parallelBlocks(3, [&](int c) {
        const auto& x = a.ch[size_t(c)];
        const auto& y = b.ch[size_t(c)];
        const auto muy = detail::validConv<Scalar>(y, ref.taps);
        const auto nuy = detail::validConv<Scalar>(y.square(), ref.taps);
        const auto xi = detail::validConv<Scalar>((x * y).eval(), ref.taps);
        const auto& mux = ref.mu[size_t(c)];
        const auto& nux = ref.nu[size_t(c)];
        const auto a1 = (Scalar(2) * mux * muy + cfg.c1).eval();
        const auto a2 = (Scalar(2) * (xi - mux * muy) + cfg.c2).eval();
        const auto b1 = (mux.square() + muy.square() + cfg.c1).eval();
        const auto b2 = ((nux - mux.square()) + (nuy - muy.square()) + cfg.c2).eval();
        per_channel[size_t(c)] = ((a1 * a2) / (b1 * b2)).mean();
    });
    return (per_channel[0] + per_channel[1] + per_channel[2]) / Scalar(3);
}

/// Distance dist(A, B) = (1-lambda)*mean|A-B| + lambda*(1-SSIM(A,B)).
template <typename Scalar>
Scalar dist(const Image<Scalar>& a, const Image<Scalar>& b, const LossConfig<Scalar>& cfg) {
    a.requireSameShape(b, "dist");
    cfg.validate();
    Scalar out = 0;
    Scalar l1 = 0;
    for (int c = 0; c < 3; ++c) l1 += (a.ch[size_t(c)] - b.ch[size_t(c)]).abs().sum();
    l1 /= Scalar(a.size());
    out += (Scalar(1) - cfg.lambda_dssim) * l1;
    if (cfg.lambda_dssim > Scalar(0))
        out += cfg.lambda_dssim * (Scalar(1) - ssim(a, b, cfg));
    return out;
}

template <typename Scalar>
struct DistGradients {
    Scalar value = 0;
    Image<Scalar> grad_b;
    Image<Scalar> grad_a;  // filled only on request
};

/// dist plus exact gradients with respect to B (and optionally A).
/// `a_ref` may carry precomputed window statistics of A.
template <typename Scalar>
DistGradients<Scalar> distWithGradient(
    const Image<Scalar>& a, const Image<Scalar>& b, const LossConfig<Scalar>& cfg,
    std::type_identity_t<const SsimReference<Scalar>*> a_ref = nullptr,
    bool need_grad_a = false) {
    using Channel = typename Image<Scalar>::Channel;
    a.requireSameShape(b, "distWithGradient");
    cfg.validate();

    DistGradients<Scalar> out;
    out.grad_b = Image<Scalar>::zeros(a.width, a.height);
    if (need_grad_a) out.grad_a = Image<Scalar>::zeros(a.width, a.height);

    SsimReference<Scalar> local_ref;
    const Scalar lam = cfg.lambda_dssim;
    if (lam > Scalar(0) && !a_ref) {
        local_ref = precomputeSsimReference(a, cfg);
        a_ref = &local_ref;
    }

    const Scalar n = Scalar(a.size());
    const Scalar wl1 = (Scalar(1) - lam) / n;
    std::array<Scalar, 3> l1_by_channel{};
    std::array<Scalar, 3> ssim_by_channel{};

    parallelBlocks(3, [&](int c) {
        const Channel diff = b.ch[size_t(c)] - a.ch[size_t(c)];
        l1_by_channel[size_t(c)] = diff.abs().sum();
        const Channel sgn = diff.sign();
        out.grad_b.ch[size_t(c)] = wl1 * sgn;
        if (need_grad_a) out.grad_a.ch[size_t(c)] = -wl1 * sgn;
        if (lam <= Scalar(0)) return;

        const auto& taps = a_ref->taps;
        const auto& x = a.ch[size_t(c)];
        const auto& y = b.ch[size_t(c)];
        const auto& mux = a_ref->mu[size_t(c)];
        const auto& nux = a_ref->nu[size_t(c)];
        const Channel muy = detail::validConv<Scalar>(y, taps);
        const Channel nuy = detail::validConv<Scalar>(y.square(), taps);
        const Channel xi = detail::validConv<Scalar>((x * y).eval(), taps);

        const Channel a1 = Scalar(2) * mux * muy + cfg.c1;
        const Channel a2 = Scalar(2) * (xi - mux * muy) + cfg.c2;
        const Channel b1 = mux.square() + muy.square() + cfg.c1;
        const Channel b2 = (nux - mux.square()) + (nuy - muy.square()) + cfg.c2;
        const Channel denom = b1 * b2;
        const Channel s = (a1 * a2) / denom;
        const Scalar p = Scalar(s.size());
        ssim_by_channel[size_t(c)] = s.mean();

        // Per-map derivatives of s (SSIM decomposed into mu_y,
        // nu_y = K(y^2), xi = K(x y)).
        const Channel ds_dmuy =
            Scalar(2) * mux * (a2 - a1) / denom -
            s * Scalar(2) * muy * (Scalar(1) / b1 - Scalar(1) / b2);
        const Channel ds_dnu = -s / b2;
        const Channel ds_dxi = Scalar(2) * a1 / denom;

        // dist carries lambda*(1 - mean s): scale maps by -lambda/(3p).
        const Scalar w = -lam / (Scalar(3) * p);
        const Channel adj_dnu =
            detail::adjointValidConv<Scalar>(ds_dnu, a.height, a.width, taps);
        const Channel adj_dxi =
            detail::adjointValidConv<Scalar>(ds_dxi, a.height, a.width, taps);
        out.grad_b.ch[size_t(c)] +=
            w * (detail::adjointValidConv<Scalar>(ds_dmuy, a.height, a.width, taps) +
                 Scalar(2) * y * adj_dnu + x * adj_dxi);

        if (need_grad_a) {
            const Channel ds_dmux =
                Scalar(2) * muy * (a2 - a1) / denom -
                s * Scalar(2) * mux * (Scalar(1) / b1 - Scalar(1) / b2);
            out.grad_a.ch[size_t(c)] +=
                w * (detail::adjointValidConv<Scalar>(ds_dmux, a.height, a.width, taps) +
                     Scalar(2) * x * adj_dnu + y * adj_dxi);
        }
    });

    out.value = (Scalar(1) - lam) * (l1_by_channel[0] + l1_by_channel[1] + l1_by_channel[2]) / n;
    if (lam > Scalar(0))
        out.value +=
            lam * (Scalar(1) -
                   (ssim_by_channel[0] + ssim_by_channel[1] + ssim_by_channel[2]) / Scalar(3));
    return out;
}

}  // namespace csplat
