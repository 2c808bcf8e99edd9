#include "csplat/splat.hpp"
#include "csplat/parallel.hpp"
#include "csplat/rng.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>

using namespace csplat;

namespace {

Camerad nadir(double fx, double cx, double cy, double z = 2.0) {
    return Camerad(0, fx, fx, cx, cy, Eigen::Quaterniond(0, 1, 0, 0),
                   Eigen::Vector3d(0, 0, z));
}

Gaussiand simpleGaussian(const Eigen::Vector3d& pos, double scale, double opacity,
                         const Eigen::Vector3d& color) {
    return Gaussiand(pos, Eigen::Vector3d::Constant(scale),
                     Eigen::Quaterniond::Identity(), opacity, color);
}

}  // namespace

TEST_CASE("project: on-axis gaussian lands at the principal point") {
    const double f = 100, d = 2.0, s = 0.05;
    // Nadir camera at z=d looking down: a gaussian at the origin sits on axis.
    const Camerad cam = nadir(f, 32.0, 24.0, d);
    GaussianCloudd cloud;
    cloud.gaussians.push_back(simpleGaussian({0, 0, 0}, s, 0.5, {0.5, 0.5, 0.5}));

    const auto proj = project(cloud, cam);
    REQUIRE(proj.size() == 1);
    CHECK(proj[0].mean2d.x() == doctest::Approx(32.0).epsilon(1e-12));
    CHECK(proj[0].mean2d.y() == doctest::Approx(24.0).epsilon(1e-12));
    CHECK(proj[0].depth == doctest::Approx(d).epsilon(1e-12));

    const double expected = (s * f / d) * (s * f / d);
    CHECK(proj[0].cov2d(0, 0) == doctest::Approx(expected + kCovFloor).epsilon(1e-9));
    CHECK(proj[0].cov2d(1, 1) == doctest::Approx(expected + kCovFloor).epsilon(1e-9));
    CHECK(std::abs(proj[0].cov2d(0, 1)) < 1e-9);
}

TEST_CASE("project: near-plane culling and depth/tie ordering") {
    const Camerad cam = nadir(100, 32, 24, 2.0);
    GaussianCloudd cloud;
    // Depth in this camera is 2 - z_world.
    cloud.gaussians.push_back(simpleGaussian({0, 0, 1.995}, 0.05, 0.5, {1, 0, 0}));  // culled
    cloud.gaussians.push_back(simpleGaussian({0.2, 0, 0}, 0.05, 0.5, {0, 1, 0}));
    cloud.gaussians.push_back(simpleGaussian({0, 0, 1.0}, 0.05, 0.5, {0, 0, 1}));
    cloud.gaussians.push_back(simpleGaussian({-0.2, 0, 0}, 0.05, 0.5, {1, 1, 0}));

    const auto proj = project(cloud, cam);
    REQUIRE(proj.size() == 3);
    CHECK(proj[0].source_index == 2);  // depth 1.0 first
    CHECK(proj[1].source_index == 1);  // tie at depth 2.0: source order
    CHECK(proj[2].source_index == 3);

    CHECK_THROWS_AS(project(GaussianCloudd{}, cam), std::invalid_argument);
}

TEST_CASE("render: empty-after-culling scene gives a black image") {
    const Camerad cam = nadir(100, 32, 24, 2.0);
    GaussianCloudd cloud;
    cloud.gaussians.push_back(simpleGaussian({0, 0, 3.0}, 0.05, 0.5, {1, 0, 0}));
    const Imaged img = render(cloud, cam, 64, 48);
    CHECK(img.maxCoeff() == 0.0);
    CHECK(img.minCoeff() == 0.0);
    CHECK_THROWS_AS(render(cloud, cam, 0, 48), std::invalid_argument);
}

TEST_CASE("render: a saturated gaussian reproduces its color at the peak pixel") {
    // Principal point at a pixel center so the peak lands exactly there.
    const Camerad cam = nadir(64, 16.5, 12.5, 2.0);
    GaussianCloudd cloud;
    cloud.gaussians.push_back(simpleGaussian({0, 0, 0}, 0.4, 1.0 - 1e-9, {0.7, 0.2, 0.4}));
    const Imaged img = render(cloud, cam, 32, 24);
    CHECK(img(12, 16, 0) == doctest::Approx(0.7).epsilon(1e-6));
    CHECK(img(12, 16, 1) == doctest::Approx(0.2).epsilon(1e-6));
    CHECK(img(12, 16, 2) == doctest::Approx(0.4).epsilon(1e-6));
}

TEST_CASE("render: two-layer compositing at the shared peak") {
    const Camerad cam = nadir(64, 16.5, 12.5, 2.0);
    GaussianCloudd cloud;
    // Front (closer to the camera, higher world z) at alpha 0.5, red.
    cloud.gaussians.push_back(simpleGaussian({0, 0, 1.0}, 0.4, 0.5, {1, 0, 0}));
    // Back at alpha ~1, green.
    cloud.gaussians.push_back(simpleGaussian({0, 0, 0}, 0.4, 1.0 - 1e-12, {0, 1, 0}));
    const Imaged img = render(cloud, cam, 32, 24);
    CHECK(img(12, 16, 0) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(img(12, 16, 1) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(img(12, 16, 2) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("render: per-pixel alpha mass stays in [0,1]") {
    Rng rng(55);
    const auto cloud = oracles::randomGradCheckScene(rng, 40);
    const auto cam = oracles::gradCheckCamera(48, 36);
    const auto rr = renderFull(cloud, cam, 48, 36);
    CHECK(rr.weight.minCoeff() >= 0.0);
    CHECK(rr.weight.maxCoeff() <= 1.0 + 1e-12);
    CHECK(rr.image.allFinite());
}

TEST_CASE("render: invariant under permutation of the cloud") {
    Rng rng(56);
    auto cloud = oracles::randomGradCheckScene(rng, 25);
    const auto cam = oracles::gradCheckCamera(40, 32);
    const Imaged ref = render(cloud, cam, 40, 32);

    GaussianCloudd shuffled = cloud;
    std::reverse(shuffled.gaussians.begin(), shuffled.gaussians.end());
    std::swap(shuffled.gaussians[3], shuffled.gaussians[11]);
    const Imaged got = render(shuffled, cam, 40, 32);
    CHECK(maxAbsDiff(ref, got) < 1e-12);
}

TEST_CASE("render: raising a front opacity never brightens the back layer") {
    const Camerad cam = nadir(64, 16.5, 12.5, 2.0);
    auto makeScene = [&](double front_opacity) {
        GaussianCloudd cloud;
        cloud.gaussians.push_back(simpleGaussian({0.05, 0.02, 1.0}, 0.3, front_opacity,
                                                 {1, 0, 0}));
        cloud.gaussians.push_back(simpleGaussian({0, 0, 0}, 0.5, 0.9, {0, 1, 0}));
        return cloud;
    };
    // The back gaussian is the only green source: its contribution is the
    // green channel.
    const Imaged lo = render(makeScene(0.3), cam, 32, 24);
    const Imaged hi = render(makeScene(0.8), cam, 32, 24);
    CHECK((hi.ch[1] <= lo.ch[1] + 1e-15).all());
}

TEST_CASE("render: result is independent of the worker count") {
    Rng rng(57);
    const auto cloud = oracles::randomGradCheckScene(rng, 30);
    const auto cam = oracles::gradCheckCamera(64, 48);
    Imaged g(64, 48);
    for (auto& c : g.ch)
        for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = rng.uniform(-1, 1);

    setNumThreads(1);
    const auto img1 = render(cloud, cam, 64, 48);
    const auto grad1 = renderBackward(cloud, cam, g);
    setNumThreads(4);
    const auto img4 = render(cloud, cam, 64, 48);
    const auto grad4 = renderBackward(cloud, cam, g);
    setNumThreads(0);

    CHECK(maxAbsDiff(img1, img4) == 0.0);
    CHECK((grad1.position - grad4.position).cwiseAbs().maxCoeff() == 0.0);
    CHECK((grad1.scale_raw - grad4.scale_raw).cwiseAbs().maxCoeff() == 0.0);
    CHECK((grad1.rotation_raw - grad4.rotation_raw).cwiseAbs().maxCoeff() == 0.0);
    CHECK((grad1.opacity_raw - grad4.opacity_raw).cwiseAbs().maxCoeff() == 0.0);
    CHECK((grad1.color - grad4.color).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("backward: zero cotangent gives zero gradients") {
    Rng rng(58);
    const auto cloud = oracles::randomGradCheckScene(rng, 10);
    const auto cam = oracles::gradCheckCamera(32, 32);
    const auto grads = renderBackward(cloud, cam, Imaged::zeros(32, 32));
    CHECK(grads.position.cwiseAbs().maxCoeff() == 0.0);
    CHECK(grads.color.cwiseAbs().maxCoeff() == 0.0);
    CHECK(grads.opacity_raw.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("backward: color gradient at the peak equals the local alpha") {
    const Camerad cam = nadir(64, 16.5, 12.5, 2.0);
    const double opacity = 0.63;
    GaussianCloudd cloud;
    cloud.gaussians.push_back(simpleGaussian({0, 0, 0}, 0.4, opacity, {0.5, 0.5, 0.5}));
    Imaged g = Imaged::zeros(32, 24);
    g.ch[0](12, 16) = 1.0;  // unit cotangent at the peak pixel, red channel
    const auto grads = renderBackward(cloud, cam, g);
    // d pixel / d color_red = alpha at the pixel; gaussian peaks there (q=0).
    CHECK(grads.color(0, 0) == doctest::Approx(opacity).epsilon(1e-12));
    CHECK(grads.color(0, 1) == 0.0);
}

TEST_CASE("backward: analytic gradients match central finite differences") {
    const auto tally = oracles::gradCheck(/*scenes=*/4, /*gaussians=*/5, 32, 32,
                                          /*h=*/1e-4, /*rel_tol=*/1e-3);
    REQUIRE(tally.checked > 0);
    const double pass_rate = double(tally.passed) / double(tally.checked);
    INFO("checked " << tally.checked << " passed " << tally.passed << " excluded "
                    << tally.excluded);
    CHECK(pass_rate >= 0.99);
}
