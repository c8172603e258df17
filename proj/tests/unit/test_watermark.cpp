// Copyright Contributors to the splatguard project
// SPDX-License-Identifier: Apache-2.0
//
#include "oracles.hpp"

#include "splatguard/error.hpp"
#include "splatguard/watermark.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace splatguard;

namespace {

void check_gradient(Image &x, const Image &analytic, const std::function<double()> &f, std::uint64_t seed,
                    double rel) {
    oracle::GradCheck check;
    Rng rng(seed);
    for (int p = 0; p < 32; ++p) {
        const std::size_t idx = rng.below(x.size());
        const double num      = oracle::central_difference(x.data()[idx], 1e-5, f);
        oracle::compare(check, analytic.data()[idx], num, rel, 1e-10, "pixel " + std::to_string(idx));
    }
    INFO(check.first_failure);
    CHECK(check.failures == 0);
}

} // namespace

TEST_CASE("message string round trip and validation") {
    const Message m = Message::random(32, 4);
    CHECK(m.size() == 32);
    CHECK(Message::from_string(m.to_string()) == m);
    CHECK_THROWS_AS(Message::from_string("01x"), Error);
    CHECK(Message::random(32, 4) == m);
    CHECK_FALSE(Message::random(32, 5) == m);
}

TEST_CASE("haar LL band is the 2x2 block mean") {
    const Image x  = oracle::random_image(4, 6, 3, 1);
    const Image ll = haar_ll(x);
    REQUIRE(ll.height() == 2);
    REQUIRE(ll.width() == 3);
    for (int y = 0; y < 2; ++y)
        for (int xx = 0; xx < 3; ++xx)
            for (int c = 0; c < 3; ++c) {
                const double mean = 0.25 * (x.at(2 * y, 2 * xx, c) + x.at(2 * y + 1, 2 * xx, c) +
                                            x.at(2 * y, 2 * xx + 1, c) + x.at(2 * y + 1, 2 * xx + 1, c));
                CHECK(ll.at(y, xx, c) == doctest::Approx(mean).epsilon(1e-14));
            }
}

TEST_CASE("bit accuracy counts equal bits") {
    const Message a = Message::from_string("1100");
    CHECK(bit_accuracy(a, Message::from_string("1100")) == 1.0);
    CHECK(bit_accuracy(a, Message::from_string("1000")) == 0.75);
    CHECK(bit_accuracy(a, Message::from_string("0011")) == 0.0);
    CHECK_THROWS_AS(bit_accuracy(a, Message::from_string("110")), Error);
}

TEST_CASE("watermark key: regenerated on load, shape checked on decode") {
    const auto key  = make_watermark_key(9, 32, 16, 16);
    const auto path = std::filesystem::temp_directory_path() / "splatguard_test_key.txt";
    save_watermark_key(key, path);
    const auto loaded = load_watermark_key(path);
    CHECK(loaded.weight == key.weight);
    CHECK(loaded.bias == key.bias);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(decode_logits(Image(8, 8, 3), key), Error);
    {
        std::ofstream bad(path);
        bad << "not a key\n";
    }
    CHECK_THROWS_AS(load_watermark_key(path), Error);
    std::filesystem::remove(path);
}

TEST_CASE("message loss: value matches direct BCE and gradient matches finite differences") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto key   = make_watermark_key(seed, 16, 8, 8);
        const Message m  = Message::random(16, seed + 10);
        Image x          = oracle::random_image(8, 8, 3, seed + 20, 0.0, 1.0);
        const auto loss  = message_loss(x, key, m);
        const auto logit = decode_logits(x, key);
        double bce       = 0.0;
        for (std::size_t k = 0; k < logit.size(); ++k) {
            const double p = 1.0 / (1.0 + std::exp(-logit[k]));
            bce -= m.bits[k] ? std::log(p) : std::log(1.0 - p);
        }
        CHECK(loss.value == doctest::Approx(bce / 16.0).epsilon(1e-12));
        check_gradient(x, loss.cotangent, [&] { return message_loss(x, key, m).value; }, seed, 1e-6);
    }
}

TEST_CASE("quality loss gradient matches finite differences") {
    SurrogateEditor editor(EditorConfig{});
    for (std::uint64_t seed : {4u, 5u, 6u}) {
        Image x         = oracle::random_image(16, 16, 3, seed, 0.0, 1.0);
        const Image ref = oracle::random_image(16, 16, 3, seed + 1, 0.0, 1.0);
        const auto q    = quality_loss(x, ref, editor, 0.1);
        CHECK(q.value == doctest::Approx(q.l1 + 0.1 * q.feature));
        check_gradient(x, q.cotangent, [&] { return quality_loss(x, ref, editor, 0.1).value; }, seed, 1e-4);
    }
    const Image x = oracle::random_image(16, 16, 3, 1, 0.0, 1.0);
    CHECK(quality_loss(x, x, editor).value == 0.0);
}
