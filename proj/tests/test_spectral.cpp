#include "csplat/spectral.hpp"
#include "csplat/rng.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>

using namespace csplat;

namespace {

Imaged randomImage(int w, int h, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Imaged img(w, h);
    for (auto& c : img.ch)
        for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = rng.uniform(lo, hi);
    return img;
}

}  // namespace

TEST_CASE("mask: k=1 keeps exactly the DC bin") {
    const auto mask = buildMask(12, 7, 1);
    REQUIRE(mask.kept.size() == 1);
    CHECK(mask.kept[0] == std::make_pair(0, 0));
    CHECK(mask.dof() == 1);
}

TEST_CASE("mask: k=9 on 256x192 is the conjugate-closed unit-radius disk") {
    const auto mask = buildMask(256, 192, 9);
    const std::vector<std::pair<int, int>> expected{
        {0, 0},   {0, 1},   {0, 191}, {1, 0},   {1, 1},
        {1, 191}, {255, 0}, {255, 1}, {255, 191}};
    CHECK(mask.kept == expected);
    CHECK(mask.contains(0, 0));
    CHECK(mask.contains(1, 0));
    CHECK(mask.contains(255, 0));
    CHECK(mask.contains(0, 1));
    CHECK(mask.contains(0, 191));
}

TEST_CASE("mask: deterministic, conjugate-closed, k range checked") {
    const auto a = buildMask(31, 14, 12);
    const auto b = buildMask(31, 14, 12);
    CHECK(a.kept == b.kept);
    for (const auto& [u, v] : a.kept) CHECK(a.contains((31 - u) % 31, (14 - v) % 14));
    CHECK_THROWS_AS(buildMask(8, 8, 0), std::invalid_argument);
    CHECK_THROWS_AS(buildMask(8, 8, 65), std::invalid_argument);
    CHECK_NOTHROW(buildMask(8, 8, 64));
}

TEST_CASE("lowpass agrees with the direct O(N^2) DFT oracle") {
    Rng rng(11);
    for (int trial = 0; trial < 12; ++trial) {
        const int w = 1 + int(rng.uniformInt(16));
        const int h = 1 + int(rng.uniformInt(16));
        const int k = 1 + int(rng.uniformInt(std::uint64_t(w) * std::uint64_t(h)));
        const auto mask = buildMask(w, h, k);
        const Imaged img = randomImage(w, h, rng);
        const auto ref = oracles::directLowpass(img, mask);
        const Imaged got = lowpassReconstruct(img, mask);
        CHECK(maxAbsDiff(got, ref.image) < 1e-8);
        CHECK(ref.max_imag < 1e-9);  // realness of the conjugate-closed reconstruction
    }
}

TEST_CASE("lowpass preserves constants for any k") {
    Rng rng(3);
    const Imaged img = Imaged::constant(10, 6, 0.37);
    for (int k : {1, 3, 9}) {
        const auto got = lowpassReconstruct(img, buildMask(10, 6, k));
        CHECK(maxAbsDiff(got, img) < 1e-12);
    }
}

TEST_CASE("nyquist checkerboard over a constant collapses to the constant at k=1") {
    const int w = 8, h = 8;
    Imaged img(w, h);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                img.ch[size_t(c)](y, x) = 0.5 + (((x + y) % 2) ? 0.3 : -0.3);
    const auto mask = buildMask(w, h, 1);
    const Imaged got = lowpassReconstruct(img, mask);
    const auto ref = oracles::directLowpass(img, mask);
    CHECK(maxAbsDiff(got, ref.image) < 1e-10);
    CHECK(maxAbsDiff(got, Imaged::constant(w, h, 0.5)) < 1e-10);
}

TEST_CASE("lowpass linearity, idempotence, energy contraction") {
    Rng rng(21);
    const int w = 14, h = 9;
    const auto mask = buildMask(w, h, 6);
    const Imaged r1 = randomImage(w, h, rng);
    const Imaged r2 = randomImage(w, h, rng);

    const Imaged lin_lhs = lowpassReconstruct(2.5 * r1 - 0.75 * r2 + r2, mask);
    Imaged lin_rhs = 2.5 * lowpassReconstruct(r1, mask);
    lin_rhs += 0.25 * lowpassReconstruct(r2, mask);
    CHECK(maxAbsDiff(lin_lhs, lin_rhs) < 1e-10);

    const Imaged once = lowpassReconstruct(r1, mask);
    CHECK(maxAbsDiff(lowpassReconstruct(once, mask), once) < 1e-10);

    CHECK(once.norm() <= r1.norm() + 1e-12);
}

TEST_CASE("lowpass rejects mismatched dimensions") {
    const auto mask = buildMask(8, 8, 3);
    CHECK_THROWS_AS(lowpassReconstruct(Imaged::zeros(9, 8), mask), std::invalid_argument);
}

TEST_CASE("coefficients: round trip through extract and reconstruct") {
    Rng rng(31);
    const int w = 12, h = 10;
    const auto mask = buildMask(w, h, 7);
    const Imaged r = randomImage(w, h, rng);
    const Imaged low = lowpassReconstruct(r, mask);

    auto coeffs = SpectralCoefficients<double>::zeros(mask, 2);
    extractCoefficients(low, coeffs, 1);
    const Imaged rebuilt = reconstructFromCoefficients(coeffs, 1, w, h);
    CHECK(maxAbsDiff(rebuilt, low) < 1e-10);

    // Extracting from the raw image keeps only the passband: same result.
    auto coeffs2 = SpectralCoefficients<double>::zeros(mask, 1);
    extractCoefficients(r, coeffs2, 0);
    CHECK(maxAbsDiff(reconstructFromCoefficients(coeffs2, 0, w, h), low) < 1e-10);
}

TEST_CASE("coefficients: zero set gives zero image, DC scaling identity") {
    const int w = 9, h = 5;
    const auto mask = buildMask(w, h, 1);
    auto coeffs = SpectralCoefficients<double>::zeros(mask, 1);
    CHECK(reconstructFromCoefficients(coeffs, 0, w, h).maxCoeff() == 0.0);

    // DC coefficient W*H*v reconstructs the constant v (unnormalized
    // forward / 1/(WH) inverse convention).
    for (int c = 0; c < 3; ++c)
        coeffs.frames[0][size_t(c)][0] = double(w) * double(h) * 0.42;
    const Imaged img = reconstructFromCoefficients(coeffs, 0, w, h);
    CHECK(maxAbsDiff(img, Imaged::constant(w, h, 0.42)) < 1e-12);

    CHECK_THROWS_AS(reconstructFromCoefficients(coeffs, 2, w, h), std::out_of_range);
}

TEST_CASE("coefficient gradient matches finite differences") {
    Rng rng(41);
    const int w = 7, h = 6;
    const auto mask = buildMask(w, h, 4);
    auto coeffs = SpectralCoefficients<double>::zeros(mask, 1);
    const int dof = mask.dof();
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < dof; ++i) coeffs.frames[0][size_t(c)][i] = rng.uniform(-2, 2);

    const Imaged g = randomImage(w, h, rng);
    auto objective = [&](const SpectralCoefficients<double>& sc) {
        const Imaged img = reconstructFromCoefficients(sc, 0, w, h);
        double v = 0;
        for (int c = 0; c < 3; ++c) v += (img.ch[size_t(c)] * g.ch[size_t(c)]).sum();
        return v;
    };

    const auto analytic = coefficientGradient(g, mask);
    const double h_fd = 1e-5;
    for (int c = 0; c < 3; ++c) {
        for (int i = 0; i < dof; ++i) {
            auto sc = coeffs;
            sc.frames[0][size_t(c)][i] += h_fd;
            const double fp = objective(sc);
            sc.frames[0][size_t(c)][i] -= 2 * h_fd;
            const double fm = objective(sc);
            const double fd = (fp - fm) / (2 * h_fd);
            CHECK(analytic[size_t(c)][i] == doctest::Approx(fd).epsilon(1e-6));
        }
    }
}
