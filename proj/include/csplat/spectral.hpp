#pragma once

#include "csplat/image.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace csplat {

/// DFT convention used throughout: unnormalized forward transform,
/// 1/(W*H) on the inverse. Bin (u,v) has u along the width axis and
/// v along the height axis.

/// Hard low-pass mask: the k lowest-radial-frequency bins, closed under
/// the conjugate pairing (u,v) <-> (-u mod W, -v mod H) so that the
/// reconstruction of a real image is real.
struct FrequencyMask {
    int width = 0;
    int height = 0;
    int k = 0;
    std::vector<std::pair<int, int>> kept;  // sorted ascending (u, v)

    // Pair structure over `kept`: partner[i] is the index of the conjugate
    // bin (i itself when self-conjugate). `rep` marks one canonical
    // representative per pair (self-conjugate bins are their own rep).
    std::vector<int> partner;
    std::vector<bool> rep;

    bool contains(int u, int v) const {
        return std::binary_search(kept.begin(), kept.end(), std::make_pair(u, v));
    }

    /// Number of independent real degrees of freedom per channel:
    /// 1 per self-conjugate bin, 2 per conjugate pair.
    int dof() const {
        int n = 0;
        for (std::size_t i = 0; i < kept.size(); ++i)
            if (rep[i]) n += (partner[i] == int(i)) ? 1 : 2;
        return n;
    }
};

namespace detail {

inline int signedFrequency(int u, int n) { return u <= n / 2 ? u : u - n; }

struct BinRank {
    std::int64_t r2;   // centered u^2 + v^2
    std::int64_t u2;   // centered u^2
    std::int64_t v2;   // centered v^2
    int u, v;

    bool operator<(const BinRank& o) const {
        if (r2 != o.r2) return r2 < o.r2;
        if (u2 != o.u2) return u2 < o.u2;
        if (v2 != o.v2) return v2 < o.v2;
        if (u != o.u) return u < o.u;
        return v < o.v;
    }
};

}  // namespace detail

/// Rank all bins by radial frequency (ties: centered u^2, centered v^2,
/// u, v), take the k lowest, then close under conjugation.
inline FrequencyMask buildMask(int width, int height, int k) {
    if (width <= 0 || height <= 0)
        throw std::invalid_argument("buildMask: non-positive dimensions");
    const std::int64_t nbins = std::int64_t(width) * height;
    if (k < 1 || std::int64_t(k) > nbins)
        throw std::invalid_argument("buildMask: k out of range [1, W*H]");

    std::vector<detail::BinRank> ranks;
    ranks.reserve(size_t(nbins));
    for (int v = 0; v < height; ++v) {
        for (int u = 0; u < width; ++u) {
            const std::int64_t su = detail::signedFrequency(u, width);
            const std::int64_t sv = detail::signedFrequency(v, height);
            ranks.push_back({su * su + sv * sv, su * su, sv * sv, u, v});
        }
    }
    std::sort(ranks.begin(), ranks.end());

    std::vector<std::pair<int, int>> kept;
    kept.reserve(size_t(2 * k));
    for (int i = 0; i < k; ++i) kept.emplace_back(ranks[size_t(i)].u, ranks[size_t(i)].v);
    const std::size_t base = kept.size();
    for (std::size_t i = 0; i < base; ++i) {
        const int cu = (width - kept[i].first) % width;
        const int cv = (height - kept[i].second) % height;
        kept.emplace_back(cu, cv);
    }
    std::sort(kept.begin(), kept.end());
    kept.erase(std::unique(kept.begin(), kept.end()), kept.end());

    FrequencyMask mask;
    mask.width = width;
    mask.height = height;
    mask.k = k;
    mask.kept = std::move(kept);

    mask.partner.resize(mask.kept.size());
    mask.rep.assign(mask.kept.size(), false);
    for (std::size_t i = 0; i < mask.kept.size(); ++i) {
        const auto [u, v] = mask.kept[i];
        const std::pair<int, int> conj{(width - u) % width, (height - v) % height};
        const auto it = std::lower_bound(mask.kept.begin(), mask.kept.end(), conj);
        mask.partner[i] = int(it - mask.kept.begin());
        if (std::size_t(mask.partner[i]) >= i) mask.rep[i] = true;
    }
    return mask;
}

namespace detail {

template <typename Scalar>
using CVec = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

template <typename Scalar>
CVec<Scalar> phaseVector(int freq, int n, Scalar sign) {
    CVec<Scalar> p(n);
    const Scalar step = sign * Scalar(2) * Scalar(EIGEN_PI) * Scalar(freq) / Scalar(n);
    for (int i = 0; i < n; ++i) {
        const Scalar a = step * Scalar(i);
        p[i] = {std::cos(a), std::sin(a)};
    }
    return p;
}

/// Forward DFT of one channel, evaluated only at the mask's kept bins.
/// Exactly fft-then-mask, without touching the discarded bins.
template <typename Scalar>
std::vector<std::complex<Scalar>> maskedForward(
    const typename Image<Scalar>::Channel& chan, const FrequencyMask& mask) {
    using CMat = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;
    const int W = mask.width, H = mask.height;
    std::vector<std::complex<Scalar>> coeffs(mask.kept.size());

    const CMat m = chan.matrix().template cast<std::complex<Scalar>>();
    int last_u = -1;
    CVec<Scalar> tu;  // tu(y) = sum_x M(y,x) e^{-2pi i u x / W}, reused per distinct u
    for (std::size_t i = 0; i < mask.kept.size(); ++i) {
        const auto [u, v] = mask.kept[i];
        if (u != last_u) {
            tu = m * phaseVector<Scalar>(u, W, Scalar(-1));
            last_u = u;
        }
        coeffs[i] = phaseVector<Scalar>(v, H, Scalar(-1)).transpose() * tu;
    }
    return coeffs;
}

/// Inverse DFT of a sparse bin set onto one channel (1/(W*H) convention).
/// Returns max |imaginary part| seen before the real part is taken.
template <typename Scalar>
Scalar sparseInverse(const std::vector<std::complex<Scalar>>& coeffs,
                     const FrequencyMask& mask,
                     typename Image<Scalar>::Channel& out) {
    using CMat = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;
    const int W = mask.width, H = mask.height;
    CMat acc = CMat::Zero(H, W);

    int last_u = -1;
    CVec<Scalar> su;  // accumulated column spectrum for the current u
    auto flush = [&](int u) {
        if (u < 0) return;
        acc.noalias() += su * phaseVector<Scalar>(u, W, Scalar(1)).transpose();
    };
    for (std::size_t i = 0; i < mask.kept.size(); ++i) {
        const auto [u, v] = mask.kept[i];
        if (u != last_u) {
            flush(last_u);
            su = CVec<Scalar>::Zero(H);
            last_u = u;
        }
        su.noalias() += coeffs[i] * phaseVector<Scalar>(v, H, Scalar(1));
    }
    flush(last_u);

    const Scalar scale = Scalar(1) / (Scalar(W) * Scalar(H));
    out = acc.real().array() * scale;
    return acc.imag().array().abs().maxCoeff() * scale;
}

}  // namespace detail

/// Low-rank reconstruction: inverse DFT of the forward DFT with every bin
/// outside the mask zeroed. Applied independently per color channel.
template <typename Scalar>
Image<Scalar> lowpassReconstruct(const Image<Scalar>& residual, const FrequencyMask& mask) {
    if (residual.width != mask.width || residual.height != mask.height)
        throw std::invalid_argument("lowpassReconstruct: image/mask dimension mismatch");
    Image<Scalar> out = Image<Scalar>::zeros(residual.width, residual.height);
    for (int c = 0; c < Image<Scalar>::kChannels; ++c) {
        const auto coeffs = detail::maskedForward<Scalar>(residual.ch[size_t(c)], mask);
        const Scalar max_imag = detail::sparseInverse<Scalar>(coeffs, mask, out.ch[size_t(c)]);
        if (!(max_imag < Scalar(1e-9)))
            throw std::logic_error("lowpassReconstruct: conjugate symmetry violated");
    }
    return out;
}

/// Retained low-frequency complex coefficients, one set per frame per
/// channel, stored as independent real degrees of freedom (self-conjugate
/// bins contribute one real value, conjugate pairs two).
template <typename Scalar>
struct SpectralCoefficients {
    using Dof = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    FrequencyMask mask;
    // frames[f][c] is the dof vector of frame f, channel c.
    std::vector<std::array<Dof, 3>> frames;

    static SpectralCoefficients zeros(const FrequencyMask& mask, int num_frames) {
        SpectralCoefficients sc;
        sc.mask = mask;
        sc.frames.resize(size_t(num_frames));
        const int n = mask.dof();
        for (auto& fc : sc.frames)
            for (auto& d : fc) d = Dof::Zero(n);
        return sc;
    }

    int numFrames() const { return int(frames.size()); }

    /// Expand the dof vector into per-bin complex values aligned with
    /// mask.kept (conjugate partners filled by symmetry).
    std::vector<std::complex<Scalar>> binValues(int frame, int channel) const {
        const auto& dof = frames.at(size_t(frame))[size_t(channel)];
        std::vector<std::complex<Scalar>> bins(mask.kept.size());
        int cursor = 0;
        for (std::size_t i = 0; i < mask.kept.size(); ++i) {
            if (!mask.rep[i]) continue;
            if (mask.partner[i] == int(i)) {
                bins[i] = {dof[cursor], Scalar(0)};
                cursor += 1;
            } else {
                bins[i] = {dof[cursor], dof[cursor + 1]};
                bins[size_t(mask.partner[i])] = std::conj(bins[i]);
                cursor += 2;
            }
        }
        return bins;
    }

    /// Inverse of binValues for conjugate-symmetric input.
    void setFromBins(int frame, int channel,
                     const std::vector<std::complex<Scalar>>& bins) {
        auto& dof = frames.at(size_t(frame))[size_t(channel)];
        dof.resize(mask.dof());
        int cursor = 0;
        for (std::size_t i = 0; i < mask.kept.size(); ++i) {
            if (!mask.rep[i]) continue;
            if (mask.partner[i] == int(i)) {
                dof[cursor++] = bins[i].real();
            } else {
                dof[cursor++] = bins[i].real();
                dof[cursor++] = bins[i].imag();
            }
        }
    }
};

/// Sample the retained spectrum of an image into coefficient storage.
template <typename Scalar>
void extractCoefficients(const Image<Scalar>& img, SpectralCoefficients<Scalar>& coeffs,
                         int frame) {
    if (img.width != coeffs.mask.width || img.height != coeffs.mask.height)
        throw std::invalid_argument("extractCoefficients: dimension mismatch");
    for (int c = 0; c < Image<Scalar>::kChannels; ++c)
        coeffs.setFromBins(frame, c,
                           detail::maskedForward<Scalar>(img.ch[size_t(c)], coeffs.mask));
}

/// Inverse DFT of the sparse coefficient set; exactly real by conjugate
/// symmetry of the stored degrees of freedom.
template <typename Scalar>
Image<Scalar> reconstructFromCoefficients(const SpectralCoefficients<Scalar>& coeffs,
                                          int frame, int width, int height) {
    if (frame < 0 || frame >= coeffs.numFrames())
        throw std::out_of_range("reconstructFromCoefficients: frame index out of range");
    if (width != coeffs.mask.width || height != coeffs.mask.height)
        throw std::invalid_argument("reconstructFromCoefficients: dimension mismatch");
    Image<Scalar> out = Image<Scalar>::zeros(width, height);
    for (int c = 0; c < Image<Scalar>::kChannels; ++c)
        detail::sparseInverse<Scalar>(coeffs.binValues(frame, c), coeffs.mask,
                                      out.ch[size_t(c)]);
    return out;
}

/// Gradient of <grad_image, reconstructFromCoefficients(...)> with respect
/// to the coefficient degrees of freedom: the forward DFT of grad_image
/// restricted to the kept bins, with pair doubling for shared dofs.
template <typename Scalar>
std::array<typename SpectralCoefficients<Scalar>::Dof, 3> coefficientGradient(
    const Image<Scalar>& grad_image, const FrequencyMask& mask) {
    if (grad_image.width != mask.width || grad_image.height != mask.height)
        throw std::invalid_argument("coefficientGradient: dimension mismatch");
    const Scalar scale = Scalar(1) / (Scalar(mask.width) * Scalar(mask.height));
    std::array<typename SpectralCoefficients<Scalar>::Dof, 3> out;
    for (int c = 0; c < 3; ++c) {
        const auto fwd = detail::maskedForward<Scalar>(grad_image.ch[size_t(c)], mask);
        auto& dof = out[size_t(c)];
        dof.resize(mask.dof());
        int cursor = 0;
        for (std::size_t i = 0; i < mask.kept.size(); ++i) {
            if (!mask.rep[i]) continue;
            if (mask.partner[i] == int(i)) {
                // C += (a / (WH)) * phi with real phi: dL/da = <grad, phi> / (WH)
                dof[cursor++] = fwd[i].real() * scale;
            } else {
                // Pair contributes (2/(WH)) (a cos(theta) - b sin(theta)) and
                // F = <grad, e^{-i theta}> gives <grad,cos> = Re(F),
                // <grad,sin> = -Im(F).
                dof[cursor++] = Scalar(2) * fwd[i].real() * scale;
                dof[cursor++] = Scalar(2) * fwd[i].imag() * scale;
            }
        }
    }
    return out;
}

}  // namespace csplat
