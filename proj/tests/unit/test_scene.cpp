// Copyright Contributors to the splatguard project
// SPDX-License-Identifier: Apache-2.0
//
#include "oracles.hpp"

#include "splatguard/error.hpp"
#include "splatguard/scene.hpp"

#include <doctest.h>

#include <filesystem>
#include <cstring>
#include <fstream>

using namespace splatguard;

namespace {

std::filesystem::path temp_path(const std::string &name) {
    return std::filesystem::temp_directory_path() / ("splatguard_test_" + name);
}

ErrorCode load_error(const std::vector<unsigned char> &bytes) {
    try {
        scene_deserialize(bytes);
    } catch (const Error &e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::InvalidArgument;
}

double psnr_of(const Image &a, const Image &b) {
    double mse = 0;
    for (std::size_t i = 0; i < a.size(); ++i) mse += std::pow(a.data()[i] - b.data()[i], 2);
    mse /= static_cast<double>(a.size());
    return 10 * std::log10(1.0 / mse);
}

} // namespace

TEST_CASE("scene file round trip is field-identical for generated scenes") {
    Rng rng(5);
    for (int trial = 0; trial < 12; ++trial) {
        const auto kind  = static_cast<ToySceneKind>(trial % 3);
        auto scene       = make_toy_scene(kind, 1 + rng.below(300), rng.below(1000));
        scene.scene_id   = "trial " + std::to_string(trial) + " \xc3\xa9t\xc3\xa9"; // UTF-8
        const auto path  = temp_path("roundtrip.gspl");
        scene_save(scene, path);
        const auto loaded = scene_load(path);
        CHECK(loaded == scene);
        CHECK(scene_hash(loaded) == scene_hash(scene));
    }
}

TEST_CASE("scene file header layout") {
    const auto scene = make_toy_scene(ToySceneKind::Plane, 3, 1);
    const auto bytes = scene_serialize(scene);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "GSPL");
    CHECK(bytes[4] == kSceneFormatVersion);
    CHECK(bytes[5] == 3);
    for (int i = 6; i < 13; ++i) CHECK(bytes[i] == 0);
    // First record, first field: position x as little-endian f64.
    double x;
    std::memcpy(&x, bytes.data() + 13, 8);
    CHECK(x == scene.gaussians[0].position()[0]);
}

TEST_CASE("scene load errors are distinct") {
    const auto scene = make_toy_scene(ToySceneKind::Random, 5, 2);
    auto bytes       = scene_serialize(scene);

    auto bad_magic = bytes;
    bad_magic[0]   = 'X';
    CHECK(load_error(bad_magic) == ErrorCode::Format);

    auto bad_version = bytes;
    bad_version[4]   = 99;
    CHECK(load_error(bad_version) == ErrorCode::VersionMismatch);

    auto truncated = std::vector<unsigned char>(bytes.begin(), bytes.begin() + 13 + 3 * 184);
    CHECK(load_error(truncated) == ErrorCode::Truncated);

    auto empty = std::vector<unsigned char>(bytes.begin(), bytes.begin() + 13);
    for (int i = 5; i < 13; ++i) empty[i] = 0;
    CHECK(load_error(empty) == ErrorCode::EmptyScene);

    auto zero_rot = scene;
    for (int k = 0; k < 4; ++k) zero_rot.gaussians[2].rotation()[k] = 0.0;
    CHECK(load_error(scene_serialize(zero_rot)) == ErrorCode::InvalidRotation);

    CHECK(load_error({'G', 'S'}) == ErrorCode::Format);
}

TEST_CASE("toy scenes") {
    SUBCASE("deterministic") {
        CHECK(make_toy_scene(ToySceneKind::Random, 100, 7) == make_toy_scene(ToySceneKind::Random, 100, 7));
        CHECK_FALSE(make_toy_scene(ToySceneKind::Random, 100, 7) == make_toy_scene(ToySceneKind::Random, 100, 8));
    }
    SUBCASE("object fraction") {
        const auto scene = make_toy_scene(ToySceneKind::ObjectOnPlane, 2000, 1);
        const auto objects = std::count(scene.labels.begin(), scene.labels.end(), "object");
        const double fraction = static_cast<double>(objects) / 2000.0;
        CHECK(fraction >= 0.1);
        CHECK(fraction <= 0.5);
    }
    SUBCASE("single plane Gaussian") {
        const auto scene = make_toy_scene(ToySceneKind::Plane, 1, 0);
        REQUIRE(scene.size() == 1);
        const double *q = scene.gaussians[0].rotation();
        CHECK(std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]) == doctest::Approx(1.0).epsilon(1e-15));
        validate_scene(scene);
    }
    SUBCASE("zero count") { CHECK_THROWS_AS(make_toy_scene(ToySceneKind::Plane, 0, 0), Error); }
}

TEST_CASE("model distortions") {
    const auto scene = make_toy_scene(ToySceneKind::ObjectOnPlane, 100, 3);
    const auto hash  = scene_hash(scene);

    SUBCASE("zero parameters are identities") {
        CHECK(distort_noise(scene, 0.0, 1) == scene);
        CHECK(distort_prune(scene, 0.0, 1) == scene);
        CHECK(distort_clone(scene, 0.0, 1) == scene);
    }
    SUBCASE("counts") {
        CHECK(distort_prune(scene, 0.5, 1).size() == 50);
        CHECK(distort_clone(scene, 0.1, 1).size() == 110);
        CHECK(distort_prune(scene, 0.5, 1).labels.size() == 50);
    }
    SUBCASE("deterministic, pure, invariant-preserving") {
        for (std::uint64_t seed : {1, 2}) {
            const auto a = distort_noise(scene, 0.05, seed);
            CHECK(a == distort_noise(scene, 0.05, seed));
            CHECK(distort_prune(scene, 0.3, seed) == distort_prune(scene, 0.3, seed));
            CHECK(distort_clone(scene, 0.3, seed) == distort_clone(scene, 0.3, seed));
            validate_scene(a);
            validate_scene(distort_prune(scene, 0.3, seed));
            validate_scene(distort_clone(scene, 0.3, seed));
            for (std::size_t i = 0; i < scene.size(); ++i)
                for (int k = 0; k < 3; ++k) CHECK(a.gaussians[i].position()[k] == scene.gaussians[i].position()[k]);
        }
        CHECK(scene_hash(scene) == hash);
    }
    SUBCASE("clone halves opacity of both copies") {
        const auto cloned = distort_clone(scene, 0.1, 4);
        int halved        = 0;
        for (std::size_t i = 0; i < scene.size(); ++i)
            if (std::abs(cloned.gaussians[i].opacity() - 0.5 * scene.gaussians[i].opacity()) < 1e-12) ++halved;
        CHECK(halved == 10);
        for (std::size_t i = 100; i < 110; ++i) CHECK(cloned.gaussians[i].opacity() < 0.5);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(distort_noise(scene, -0.1, 1), Error);
        CHECK_THROWS_AS(distort_prune(scene, 1.0, 1), Error);
    }
    SUBCASE("noise lowers render PSNR") {
        const auto cam   = orbit_views(4, 48, 48)[0];
        const auto clean = render(scene, cam).image;
        const auto noisy = render(distort_noise(scene, 0.05, 9), cam).image;
        const auto noisier = render(distort_noise(scene, 0.2, 9), cam).image;
        CHECK(psnr_of(clean, noisy) < 99.0);
        CHECK(psnr_of(clean, noisier) < psnr_of(clean, noisy));
    }
}
