#pragma once

#include "csplat/image.hpp"

#include <cmath>
#include <limits>

namespace csplat {

template <typename Scalar>
Scalar mse(const Image<Scalar>& a, const Image<Scalar>& b) {
    a.requireSameShape(b, "mse");
    Scalar s = 0;
    for (int c = 0; c < 3; ++c) s += (a.ch[size_t(c)] - b.ch[size_t(c)]).square().sum();
    return s / Scalar(a.size());
}

/// Peak signal-to-noise ratio for range-1 images; +inf when identical.
template <typename Scalar>
Scalar psnr(const Image<Scalar>& a, const Image<Scalar>& b) {
    const Scalar m = mse(a, b);
    if (m <= Scalar(0)) return std::numeric_limits<Scalar>::infinity();
    return Scalar(-10) * std::log10(m);
}

template <typename Scalar>
Scalar psnrFromMse(Scalar m) {
    if (m <= Scalar(0)) return std::numeric_limits<Scalar>::infinity();
    return Scalar(-10) * std::log10(m);
}

/// Pearson correlation over all pixels and channels.
template <typename Scalar>
Scalar pearson(const Image<Scalar>& a, const Image<Scalar>& b) {
    a.requireSameShape(b, "pearson");
    const Scalar n = Scalar(a.size());
    const Scalar ma = a.mean(), mb = b.mean();
    Scalar sab = 0, saa = 0, sbb = 0;
    for (int c = 0; c < 3; ++c) {
        const auto da = (a.ch[size_t(c)] - ma).eval();
        const auto db = (b.ch[size_t(c)] - mb).eval();
        sab += (da * db).sum();
        saa += da.square().sum();
        sbb += db.square().sum();
    }
    (void)n;
    const Scalar denom = std::sqrt(saa * sbb);
    if (!(denom > Scalar(0))) return Scalar(0);
    return sab / denom;
}

/// ||est - ref||_2 / ||ref||_2.
template <typename Scalar>
Scalar relativeL2(const Image<Scalar>& est, const Image<Scalar>& ref) {
    est.requireSameShape(ref, "relativeL2");
    const Scalar rn = ref.norm();
    if (!(rn > Scalar(0))) return est.norm() > Scalar(0)
                                      ? std::numeric_limits<Scalar>::infinity()
                                      : Scalar(0);
    return (est - ref).norm() / rn;
}

}  // namespace csplat
