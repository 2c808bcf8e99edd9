#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace csplat {

/// Dense H x W x 3 radiance grid. Values are nominally in [0,1] but the
/// storage is signed: residuals and caustic estimates live here too.
template <typename Scalar>
struct Image {
    using Channel = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    static constexpr int kChannels = 3;

    int width = 0;
    int height = 0;
    std::array<Channel, kChannels> ch;

    Image() = default;

    Image(int w, int h, Scalar fill = Scalar(0)) : width(w), height(h) {
        if (w <= 0 || h <= 0)
            throw std::invalid_argument("Image: non-positive dimensions");
        for (auto& c : ch) c = Channel::Constant(h, w, fill);
    }

    static Image zeros(int w, int h) { return Image(w, h, Scalar(0)); }
    static Image constant(int w, int h, Scalar v) { return Image(w, h, v); }

    bool empty() const { return width == 0 || height == 0; }
    Eigen::Index pixels() const { return Eigen::Index(width) * height; }
    Eigen::Index size() const { return pixels() * kChannels; }

    Scalar& operator()(int y, int x, int c) { return ch[size_t(c)](y, x); }
    Scalar operator()(int y, int x, int c) const { return ch[size_t(c)](y, x); }

    bool sameShape(const Image& o) const {
        return width == o.width && height == o.height;
    }

    bool allFinite() const {
        for (const auto& c : ch)
            if (!c.isFinite().all()) return false;
        return true;
    }

    Scalar minCoeff() const {
        Scalar m = ch[0].minCoeff();
        for (int c = 1; c < kChannels; ++c) m = std::min(m, ch[size_t(c)].minCoeff());
        return m;
    }

    Scalar maxCoeff() const {
        Scalar m = ch[0].maxCoeff();
        for (int c = 1; c < kChannels; ++c) m = std::max(m, ch[size_t(c)].maxCoeff());
        return m;
    }

    Scalar mean() const {
        Scalar s = 0;
        for (const auto& c : ch) s += c.sum();
        return s / Scalar(size());
    }

    /// Mean of |v| over all pixels and channels.
    Scalar meanAbs() const {
        Scalar s = 0;
        for (const auto& c : ch) s += c.abs().sum();
        return s / Scalar(size());
    }

    Scalar squaredNorm() const {
        Scalar s = 0;
        for (const auto& c : ch) s += c.square().sum();
        return s;
    }

    Scalar norm() const { return std::sqrt(squaredNorm()); }

    /// Clamp every value into [lo, hi]; used at export, never inside the
    /// differentiable path.
    Image clamped(Scalar lo, Scalar hi) const {
        Image out = *this;
        for (auto& c : out.ch) c = c.min(hi).max(lo);
        return out;
    }

    Image& operator+=(const Image& o) {
        requireSameShape(o, "operator+=");
        for (int c = 0; c < kChannels; ++c) ch[size_t(c)] += o.ch[size_t(c)];
        return *this;
    }

    Image& operator-=(const Image& o) {
        requireSameShape(o, "operator-=");
        for (int c = 0; c < kChannels; ++c) ch[size_t(c)] -= o.ch[size_t(c)];
        return *this;
    }

    Image& operator*=(Scalar s) {
        for (auto& c : ch) c *= s;
        return *this;
    }

    void requireSameShape(const Image& o, const char* what) const {
        if (!sameShape(o))
            throw std::invalid_argument(std::string(what) + ": shape mismatch " +
                                        std::to_string(width) + "x" + std::to_string(height) +
                                        " vs " + std::to_string(o.width) + "x" +
                                        std::to_string(o.height));
    }
};

template <typename Scalar>
Image<Scalar> operator+(Image<Scalar> a, const Image<Scalar>& b) {
    a += b;
    return a;
}

template <typename Scalar>
Image<Scalar> operator-(Image<Scalar> a, const Image<Scalar>& b) {
    a -= b;
    return a;
}

template <typename Scalar>
Image<Scalar> operator*(Image<Scalar> a, Scalar s) {
    a *= s;
    return a;
}

template <typename Scalar>
Image<Scalar> operator*(Scalar s, Image<Scalar> a) {
    a *= s;
    return a;
}

/// max |a - b| over all pixels and channels.
template <typename Scalar>
Scalar maxAbsDiff(const Image<Scalar>& a, const Image<Scalar>& b) {
    a.requireSameShape(b, "maxAbsDiff");
    Scalar m = 0;
    for (int c = 0; c < Image<Scalar>::kChannels; ++c)
        m = std::max(m, (a.ch[size_t(c)] - b.ch[size_t(c)]).abs().maxCoeff());
    return m;
}

using Imaged = Image<double>;
using Imagef = Image<float>;

}  // namespace csplat
