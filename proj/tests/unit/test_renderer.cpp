// Copyright Contributors to the splatguard project
// SPDX-License-Identifier: Apache-2.0
//
#include "oracles.hpp"

#include "splatguard/error.hpp"
#include "splatguard/parallel.hpp"
#include "splatguard/renderer.hpp"

#include <doctest.h>

using namespace splatguard;

namespace {

Gaussian isotropic_at(const Vec3 &p, double scale, double opacity_logit, const Vec3 &dc) {
    Gaussian g;
    for (int k = 0; k < 3; ++k) {
        g.position()[k]  = p[k];
        g.log_scale()[k] = std::log(scale);
        g.color_dc()[k]  = dc[k];
    }
    g.rotation()[0]   = 1.0;
    g.opacity_logit() = opacity_logit;
    return g;
}

CameraView axis_camera(int size) {
    // Looking down +z from the origin.
    CameraView cam;
    cam.fx = cam.fy = 40.0;
    cam.cx = cam.cy = 0.5 * size;
    cam.width = cam.height = size;
    return cam;
}

} // namespace

TEST_CASE("project: on-axis Gaussian lands on the principal point") {
    const auto g   = isotropic_at({0, 0, 2}, 0.1, 0.0, {0, 0, 0});
    const auto cam = axis_camera(32);
    const Splat s  = project(g, cam);
    CHECK(s.visible);
    CHECK(s.mean2d[0] == doctest::Approx(cam.cx));
    CHECK(s.mean2d[1] == doctest::Approx(cam.cy));
    // Isotropic: (fx * s / z)^2 + dilation on both axes, no shear.
    const double expected = std::pow(40.0 * 0.1 / 2.0, 2) + kCovDilation;
    CHECK(s.cov2d[0] == doctest::Approx(expected));
    CHECK(s.cov2d[2] == doctest::Approx(expected));
    CHECK(std::abs(s.cov2d[1]) < 1e-12);
}

TEST_CASE("project: near-plane rule") {
    const auto cam = axis_camera(32);
    CHECK_FALSE(project(isotropic_at({0, 0, 0.01}, 0.1, 0, {0, 0, 0}), cam).visible);
    CHECK_FALSE(project(isotropic_at({0, 0, -1.0}, 0.1, 0, {0, 0, 0}), cam).visible);
    CHECK(project(isotropic_at({0, 0, 0.011}, 0.1, 0, {0, 0, 0}), cam).visible);
}

TEST_CASE("project: 2D covariance matches Monte-Carlo projection of samples") {
    Rng rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        Gaussian g;
        for (int k = 0; k < 3; ++k) {
            g.position()[k]  = rng.uniform(-0.3, 0.3);
            g.log_scale()[k] = std::log(rng.uniform(0.01, 0.05));
        }
        for (int k = 0; k < 4; ++k) g.rotation()[k] = rng.normal();
        g.normalize_rotation();
        const auto cam = oracle::test_camera(64, 3.0, rng.uniform(-1, 1));
        const Splat s  = project(g, cam);
        REQUIRE(s.visible);

        // Sample world points from N(mu, R S^2 R^T), project exactly, take the sample covariance.
        const double *q = g.rotation();
        const double w = q[0], x = q[1], y = q[2], z = q[3];
        const double R[3][3] = {{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
                                {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
                                {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}};
        const int samples = 200000;
        double mean[2] = {0, 0}, m2[3] = {0, 0, 0};
        std::vector<std::array<double, 2>> pts(samples);
        for (int i = 0; i < samples; ++i) {
            double local[3], world[3];
            for (int k = 0; k < 3; ++k) local[k] = std::exp(g.log_scale()[k]) * rng.normal();
            for (int r = 0; r < 3; ++r)
                world[r] = g.position()[r] + R[r][0] * local[0] + R[r][1] * local[1] + R[r][2] * local[2];
            double pc[3];
            for (int r = 0; r < 3; ++r)
                pc[r] = cam.rotation[r][0] * world[0] + cam.rotation[r][1] * world[1] + cam.rotation[r][2] * world[2] +
                        cam.translation[r];
            pts[i] = {cam.fx * pc[0] / pc[2] + cam.cx, cam.fy * pc[1] / pc[2] + cam.cy};
            mean[0] += pts[i][0];
            mean[1] += pts[i][1];
        }
        mean[0] /= samples;
        mean[1] /= samples;
        for (const auto &p : pts) {
            m2[0] += (p[0] - mean[0]) * (p[0] - mean[0]);
            m2[1] += (p[0] - mean[0]) * (p[1] - mean[1]);
            m2[2] += (p[1] - mean[1]) * (p[1] - mean[1]);
        }
        const double mc[3] = {m2[0] / samples + kCovDilation, m2[1] / samples, m2[2] / samples + kCovDilation};
        const double diff  = std::sqrt(std::pow(mc[0] - s.cov2d[0], 2) + 2 * std::pow(mc[1] - s.cov2d[1], 2) +
                                       std::pow(mc[2] - s.cov2d[2], 2));
        const double norm  = std::sqrt(mc[0] * mc[0] + 2 * mc[1] * mc[1] + mc[2] * mc[2]);
        CHECK(diff / norm < 0.10);
    }
}

TEST_CASE("render: scene entirely behind the camera shows the background") {
    GaussianScene scene;
    scene.background = {0.2, 0.4, 0.6};
    scene.gaussians.push_back(isotropic_at({0, 0, -2}, 0.5, 3.0, {1, 1, 1}));
    const auto result = render(scene, axis_camera(16));
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x)
            for (int c = 0; c < 3; ++c) CHECK(result.image.at(y, x, c) == scene.background[c]);
}

TEST_CASE("render: single opaque Gaussian on the axis shows its color") {
    GaussianScene scene;
    const Vec3 dc{0.3, -0.7, 1.2};
    scene.gaussians.push_back(isotropic_at({0, 0, 2}, 5.0, 25.0, dc));
    const auto result = render(scene, axis_camera(32));
    for (int c = 0; c < 3; ++c) CHECK(std::abs(result.image.at(16, 16, c) - 1.0 / (1.0 + std::exp(-dc[c]))) < 1e-3);
}

TEST_CASE("render: two overlapping Gaussians match hand-computed compositing at one pixel") {
    GaussianScene scene;
    scene.background = {0.1, 0.2, 0.3};
    scene.gaussians.push_back(isotropic_at({0.02, 0.0, 3.0}, 0.2, 0.5, {1.0, 0.0, -1.0}));  // back
    scene.gaussians.push_back(isotropic_at({-0.03, 0.01, 2.0}, 0.15, 0.2, {-0.5, 0.8, 0.1})); // front
    const auto cam    = axis_camera(32);
    const auto result = render(scene, cam);
    const int px = 17, py = 15;

    auto weight_of = [&](const Gaussian &g) {
        const Splat s    = project(g, cam);
        const double a = s.cov2d[0], b = s.cov2d[1], c = s.cov2d[2];
        const double dx = px + 0.5 - s.mean2d[0], dy = py + 0.5 - s.mean2d[1];
        const double q  = (c * dx * dx - 2 * b * dx * dy + a * dy * dy) / (a * c - b * b);
        return g.opacity() * std::exp(-0.5 * q);
    };
    const double a_front = weight_of(scene.gaussians[1]);
    const double a_back  = weight_of(scene.gaussians[0]);
    for (int c = 0; c < 3; ++c) {
        const double c_front = 1.0 / (1.0 + std::exp(-scene.gaussians[1].color_dc()[c]));
        const double c_back  = 1.0 / (1.0 + std::exp(-scene.gaussians[0].color_dc()[c]));
        const double expected = a_front * c_front + (1 - a_front) * a_back * c_back +
                                (1 - a_front) * (1 - a_back) * scene.background[c];
        CHECK(result.image.at(py, px, c) == doctest::Approx(expected).epsilon(1e-12));
    }
    CHECK(result.depth_order == std::vector<std::size_t>{1, 0});
}

TEST_CASE("render: compositing conservation without early termination") {
    for (std::uint64_t seed : {1, 2, 3}) {
        auto scene = make_toy_scene(ToySceneKind::Random, 30, seed);
        for (auto &g : scene.gaussians) {
            for (int c = 0; c < 3; ++c) g.color_dc()[c] = 40.0; // sigmoid == 1 in f64
            for (int k = 0; k < 9; ++k) g.color_rest()[k] = 0.0;
            g.opacity_logit() = std::min(g.opacity_logit(), 0.0);
        }
        const auto cam = oracle::test_camera(24);
        std::vector<double> trans;
        oracle::brute_force_weights(scene, cam, &trans);
        REQUIRE(*std::min_element(trans.begin(), trans.end()) >= 1e-4); // no termination fired

        scene.background  = {0, 0, 0};
        const auto sum_w  = render(scene, cam).image;
        scene.background  = {1, 1, 1};
        const auto sum_wt = render(scene, cam).image;
        for (int y = 0; y < 24; ++y)
            for (int x = 0; x < 24; ++x) {
                CHECK(std::abs(sum_wt.at(y, x, 0) - 1.0) <= 1e-9);
                CHECK(std::abs(sum_w.at(y, x, 0) + trans[y * 24 + x] - 1.0) <= 1e-9);
            }
    }
}

TEST_CASE("render: contribution accumulators equal brute-force weight sums") {
    for (std::uint64_t seed : {4, 5, 6}) {
        const auto scene = make_toy_scene(ToySceneKind::Random, 40, seed);
        const auto cam   = oracle::test_camera(32);
        const Image mask = oracle::random_image(32, 32, 1, seed + 100, 0.0, 1.0);
        const auto result = render(scene, cam, &mask);
        const auto weights = oracle::brute_force_weights(scene, cam);
        for (std::size_t i = 0; i < scene.size(); ++i) {
            double den = 0, num = 0;
            for (int p = 0; p < 32 * 32; ++p) {
                den += weights[i * 1024 + p];
                num += weights[i * 1024 + p] * mask.data()[p];
            }
            CHECK(std::abs(result.contrib_den[i] - den) <= 1e-9);
            CHECK(std::abs(result.contrib_mask_num[i] - num) <= 1e-9);
            CHECK(result.contrib_den[i] >= result.contrib_mask_num[i]);
        }
    }
}

TEST_CASE("render_vjp: zero cotangent gives a zero bundle") {
    const auto scene = make_toy_scene(ToySceneKind::Random, 10, 3);
    const auto cam   = oracle::test_camera(16);
    const auto grads = render_vjp(scene, cam, Image(16, 16, 3));
    for (std::size_t i = 0; i < scene.size(); ++i)
        for (double v : grads[i]) CHECK(v == 0.0);
}

TEST_CASE("render_vjp: matches central finite differences on random scenes") {
    for (std::uint64_t seed : {21, 22, 23}) {
        auto scene      = make_toy_scene(ToySceneKind::Random, 8, seed);
        const auto cam  = oracle::test_camera(32, 3.0, 0.1 * static_cast<double>(seed));
        const Image cot = oracle::random_image(32, 32, 3, seed);
        const auto grads = render_vjp(scene, cam, cot);

        oracle::GradCheck check;
        for (std::size_t i = 0; i < scene.size(); ++i) {
            for (int k = 0; k < 3; ++k) CHECK(grads[i][k] == 0.0);
            for (int k = 3; k < kParamCount; ++k) {
                const double fd = oracle::central_difference(scene.gaussians[i].params[k], 1e-5,
                                                             [&] { return oracle::dot(cot, render(scene, cam).image); });
                oracle::compare(check, grads[i][k], fd, 1e-4, 1e-8, "param " + std::to_string(k));
            }
        }
        INFO(check.first_failure);
        CHECK(check.failures == 0);
    }
}

TEST_CASE("render_vjp: fully occluded Gaussian gets no opacity gradient") {
    GaussianScene scene;
    scene.gaussians.push_back(isotropic_at({0, 0, 2}, 50.0, 25.0, {0.5, 0.5, 0.5}));   // opaque wall
    scene.gaussians.push_back(isotropic_at({0.1, 0, 4}, 0.2, 0.0, {0.1, 0.2, 0.3}));  // hidden
    const auto cam   = axis_camera(16);
    const auto grads = render_vjp(scene, cam, oracle::random_image(16, 16, 3, 9));
    CHECK(grads[1][kGroupOffset[3]] == 0.0);
    for (double v : grads[1]) CHECK(v == 0.0);
}

TEST_CASE("render_vjp: shape mismatch is an error") {
    const auto scene = make_toy_scene(ToySceneKind::Random, 4, 1);
    CHECK_THROWS_AS(render_vjp(scene, oracle::test_camera(16), Image(8, 16, 3)), Error);
}

TEST_CASE("render: bit-identical across worker counts") {
    const auto scene = make_toy_scene(ToySceneKind::ObjectOnPlane, 600, 2);
    const auto cam   = orbit_views(3, 48, 48)[1];
    const Image cot  = oracle::random_image(48, 48, 3, 77);
    set_worker_count(1);
    const auto a  = render(scene, cam).image;
    const auto ga = render_vjp(scene, cam, cot);
    set_worker_count(4);
    const auto b  = render(scene, cam).image;
    const auto gb = render_vjp(scene, cam, cot);
    set_worker_count(1);
    CHECK(a == b);
    CHECK(ga == gb);
}
