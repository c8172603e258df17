// Copyright Contributors to the splatguard project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "splatguard/editor.hpp"
#include "splatguard/image.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace splatguard {

struct Message {
    std::vector<std::uint8_t> bits; ///< 0 or 1

    std::size_t size() const noexcept { return bits.size(); }
    std::string to_string() const;
    static Message from_string(const std::string &text);
    static Message random(std::size_t k, std::uint64_t seed);

    friend bool operator==(const Message &, const Message &) = default;
};

/// Frozen linear decoder over the Haar LL band. Only (seed, k, height, width) are stored;
/// the weights are regenerated on load.
struct WatermarkKey {
    std::uint64_t seed = 0;
    int bits   = 32;
    int height = 0;
    int width  = 0;
    std::vector<double> weight; ///< bits x dim, row-major, dim = 3 * (height/2) * (width/2)
    std::vector<double> bias;   ///< bits

    int dim() const noexcept { return 3 * (height / 2) * (width / 2); }
};

WatermarkKey make_watermark_key(std::uint64_t seed, int bits, int height, int width);
void save_watermark_key(const WatermarkKey &key, const std::filesystem::path &path);
WatermarkKey load_watermark_key(const std::filesystem::path &path);

/// Single-level Haar LL band: mean of each 2x2 block, per channel.
Image haar_ll(const Image &image);

std::vector<double> decode_logits(const Image &image, const WatermarkKey &key);
Message decode_bits(const Image &image, const WatermarkKey &key);

/// Fraction of equal bits.
double bit_accuracy(const Message &decoded, const Message &target);

struct LossWithGrad {
    double value = 0.0;
    Image cotangent; ///< d value / d image
};

/// Mean binary cross-entropy between sigmoid(logits) and the message bits.
LossWithGrad message_loss(const Image &image, const WatermarkKey &key, const Message &message);

struct QualityLoss {
    double value   = 0.0;
    double l1      = 0.0;
    double feature = 0.0;
    Image cotangent;
};

/// Mean squared distance between editor-encoder features. Used as the LPIPS stand-in.
double feature_distance(const Image &a, const Image &b, const SurrogateEditor &editor);

/// mean |image - reference| + feature_weight * feature_distance(image, reference).
QualityLoss quality_loss(const Image &image, const Image &reference, const SurrogateEditor &editor,
                         double feature_weight = 0.1);

} // namespace splatguard
