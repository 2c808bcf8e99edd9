#include "csplat/loss.hpp"
#include "csplat/rng.hpp"

#include "oracles.hpp"

#include <doctest.h>

using namespace csplat;

namespace {

Imaged randomImage(int w, int h, Rng& rng, double lo = 0.0, double hi = 1.0) {
    Imaged img(w, h);
    for (auto& c : img.ch)
        for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = rng.uniform(lo, hi);
    return img;
}

}  // namespace

TEST_CASE("dist is zero exactly on identical images") {
    Rng rng(5);
    const Imaged a = randomImage(16, 16, rng);
    LossConfig<double> cfg;
    CHECK(dist(a, a, cfg) == 0.0);
}

TEST_CASE("pure L1 measures a constant offset exactly") {
    Rng rng(6);
    const Imaged a = randomImage(20, 14, rng, 0.0, 0.8);
    Imaged b = a;
    for (auto& c : b.ch) c += 0.1;
    LossConfig<double> cfg;
    cfg.lambda_dssim = 0;
    CHECK(dist(a, b, cfg) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("mixed loss matches an independently coded SSIM+L1 reference") {
    Rng rng(901);
    const Imaged a = randomImage(32, 32, rng);
    const Imaged b = randomImage(32, 32, rng);
    LossConfig<double> cfg;  // lambda 0.2, 11x11 window, sigma 1.5
    const double got = dist(a, b, cfg);
    const double ref = oracles::referenceDist(a, b, 0.2, 11, 1.5);
    CHECK(got == doctest::Approx(ref).epsilon(1e-6));
}

TEST_CASE("dist is symmetric and positive unless equal") {
    Rng rng(7);
    const Imaged a = randomImage(24, 18, rng);
    Imaged b = a;
    b.ch[1](4, 7) += 3e-3;
    LossConfig<double> cfg;
    CHECK(dist(a, b, cfg) == doctest::Approx(dist(b, a, cfg)).epsilon(1e-12));
    CHECK(dist(a, b, cfg) > 0.0);
}

TEST_CASE("dist rejects shape mismatch and undersized SSIM input") {
    LossConfig<double> cfg;
    CHECK_THROWS_AS(dist(Imaged::zeros(8, 8), Imaged::zeros(9, 8), cfg),
                    std::invalid_argument);
    CHECK_THROWS_AS(dist(Imaged::zeros(8, 8), Imaged::zeros(8, 8), cfg),
                    std::invalid_argument);  // smaller than the 11x11 window
    cfg.lambda_dssim = 0;
    CHECK_NOTHROW(dist(Imaged::zeros(8, 8), Imaged::zeros(8, 8), cfg));
}

TEST_CASE("loss gradients match finite differences") {
    Rng rng(8);
    const int w = 16, h = 14;
    const Imaged a = randomImage(w, h, rng, -0.2, 1.0);
    const Imaged b = randomImage(w, h, rng, -0.2, 1.0);
    LossConfig<double> cfg;
    cfg.lambda_dssim = 0.2;

    const auto dg = distWithGradient(a, b, cfg, nullptr, true);
    CHECK(dg.value == doctest::Approx(dist(a, b, cfg)).epsilon(1e-12));

    const double h_fd = 1e-6;
    for (int trial = 0; trial < 40; ++trial) {
        const int c = int(rng.uniformInt(3));
        const int y = int(rng.uniformInt(std::uint64_t(h)));
        const int x = int(rng.uniformInt(std::uint64_t(w)));

        Imaged bp = b, bm = b;
        bp.ch[size_t(c)](y, x) += h_fd;
        bm.ch[size_t(c)](y, x) -= h_fd;
        const double fd_b = (dist(a, bp, cfg) - dist(a, bm, cfg)) / (2 * h_fd);
        CHECK(dg.grad_b.ch[size_t(c)](y, x) == doctest::Approx(fd_b).epsilon(5e-4));

        Imaged ap = a, am = a;
        ap.ch[size_t(c)](y, x) += h_fd;
        am.ch[size_t(c)](y, x) -= h_fd;
        const double fd_a = (dist(ap, b, cfg) - dist(am, b, cfg)) / (2 * h_fd);
        CHECK(dg.grad_a.ch[size_t(c)](y, x) == doctest::Approx(fd_a).epsilon(5e-4));
    }
}

TEST_CASE("precomputed reference statistics give identical results") {
    Rng rng(9);
    const Imaged a = randomImage(18, 16, rng);
    const Imaged b = randomImage(18, 16, rng);
    LossConfig<double> cfg;
    const auto ref = precomputeSsimReference(a, cfg);
    const auto with_cache = distWithGradient(a, b, cfg, &ref, false);
    const auto without = distWithGradient(a, b, cfg, nullptr, false);
    CHECK(with_cache.value == without.value);
    CHECK(maxAbsDiff(with_cache.grad_b, without.grad_b) == 0.0);
}
