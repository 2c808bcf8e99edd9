#include "csplat/camera.hpp"
#include "csplat/cloud.hpp"
#include "csplat/image.hpp"
#include "csplat/rng.hpp"

#include <doctest.h>

using namespace csplat;

namespace {

Imaged randomImage(int w, int h, Rng& rng, double lo = -0.5, double hi = 1.2) {
    Imaged img(w, h);
    for (auto& c : img.ch)
        for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = rng.uniform(lo, hi);
    return img;
}

}  // namespace

TEST_CASE("image arithmetic is elementwise and shape-preserving") {
    Rng rng(7);
    const Imaged i = randomImage(23, 17, rng, 0.0, 1.0);
    const Imaged ihat = randomImage(23, 17, rng, 0.0, 1.0);
    const Imaged residual = i - ihat;
    CHECK(maxAbsDiff(residual + ihat, i) < 1e-12);

    const Imaged scaled = 2.0 * i;
    CHECK(scaled(3, 5, 1) == doctest::Approx(2.0 * i(3, 5, 1)).epsilon(1e-15));

    CHECK_THROWS_AS(i + randomImage(22, 17, rng), std::invalid_argument);
}

TEST_CASE("image constructors establish invariants or fail") {
    CHECK_THROWS_AS(Imaged(0, 4), std::invalid_argument);
    CHECK_THROWS_AS(Imaged(4, -1), std::invalid_argument);
    const Imaged z = Imaged::zeros(5, 4);
    CHECK(z.allFinite());
    CHECK(z.size() == 5 * 4 * 3);
}

TEST_CASE("gaussian constructor rejects invariant breaks") {
    const Eigen::Vector3d pos(0, 0, 0), scale(0.1, 0.1, 0.1), color(0.5, 0.5, 0.5);
    const Eigen::Quaterniond q = Eigen::Quaterniond::Identity();
    CHECK_NOTHROW(Gaussiand(pos, scale, q, 0.5, color));
    CHECK_THROWS_AS(Gaussiand(pos, {0.1, 0.0, 0.1}, q, 0.5, color), std::invalid_argument);
    CHECK_THROWS_AS(Gaussiand(pos, scale, q, 0.0, color), std::invalid_argument);
    CHECK_THROWS_AS(Gaussiand(pos, scale, q, 1.0, color), std::invalid_argument);
    CHECK_THROWS_AS(Gaussiand(pos, scale, q, 0.5, {1.2, 0.5, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(Gaussiand(pos, scale, Eigen::Quaterniond(2, 0, 0, 0), 0.5, color),
                    std::invalid_argument);
    // Near-unit quaternions are accepted and stored normalized.
    const Gaussiand g(pos, scale, Eigen::Quaterniond(1.0001, 0, 0, 0), 0.5, color);
    CHECK(std::abs(g.rotation.norm() - 1.0) < 1e-12);
}

TEST_CASE("camera constructor validates intrinsics and pose") {
    const Eigen::Quaterniond q(0, 1, 0, 0);
    CHECK_NOTHROW(Camerad(0, 100, 100, 32, 24, q, Eigen::Vector3d(0, 0, 2)));
    CHECK_THROWS_AS(Camerad(0, -1, 100, 32, 24, q, Eigen::Vector3d::Zero()),
                    std::invalid_argument);
    CHECK_THROWS_AS(Camerad(0, 100, 100, 32, 24, Eigen::Quaterniond(0.4, 0.4, 0, 0),
                            Eigen::Vector3d::Zero()),
                    std::invalid_argument);
    const Camerad cam(0, 100, 100, 32, 24, q, Eigen::Vector3d(0, 0, 2));
    CHECK((cam.forward() - Eigen::Vector3d(0, 0, -1)).norm() < 1e-12);
}

TEST_CASE("validate_scene reports violations without throwing") {
    GaussianCloudd cloud;
    cloud.gaussians.push_back(Gaussiand({0, 0, 0}, {0.1, 0.1, 0.1},
                                        Eigen::Quaterniond::Identity(), 0.8,
                                        {0.4, 0.4, 0.4}));
    std::vector<Camerad> cams{Camerad(0, 64, 64, 32, 24, Eigen::Quaterniond(0, 1, 0, 0),
                                      Eigen::Vector3d(0, 0, 2))};
    std::vector<Imaged> imgs{Imaged::zeros(64, 48)};

    SUBCASE("valid scene yields an empty report") {
        CHECK(validateScene(cloud, cams, imgs).empty());
    }

    SUBCASE("camera/image count mismatch is named with both counts") {
        imgs.push_back(Imaged::zeros(64, 48));
        const auto report = validateScene(cloud, cams, imgs);
        REQUIRE(report.size() == 1);
        CHECK(report[0].find("1") != std::string::npos);
        CHECK(report[0].find("2") != std::string::npos);
    }

    SUBCASE("zero scale component names the gaussian index") {
        cloud.gaussians.push_back(cloud.gaussians[0]);
        cloud.gaussians[1].scale.y() = 0.0;  // bypasses the constructor on purpose
        const auto report = validateScene(cloud, cams, imgs);
        REQUIRE(report.size() == 1);
        CHECK(report[0].find("gaussian 1") != std::string::npos);
        CHECK(report[0].find("scale") != std::string::npos);
    }

    SUBCASE("principal point outside the paired image is flagged") {
        cams[0].cx = 200;
        const auto report = validateScene(cloud, cams, imgs);
        REQUIRE(report.size() == 1);
        CHECK(report[0].find("cx") != std::string::npos);
    }
}

TEST_CASE("rng is deterministic per seed") {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 32; ++i) CHECK(a.uniform() == b.uniform());
    bool any_diff = false;
    Rng a2(42);
    for (int i = 0; i < 32; ++i) any_diff = any_diff || (a2.uniform() != c.uniform());
    CHECK(any_diff);

    Rng n(5);
    for (int i = 0; i < 100; ++i) {
        const double v = n.normal();
        CHECK(std::isfinite(v));
    }
}
