// Copyright Contributors to the splatguard project
// SPDX-License-Identifier: Apache-2.0
//
#include "splatguard/watermark.hpp"

#include "splatguard/error.hpp"
#include "splatguard/random.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace splatguard {

std::string Message::to_string() const {
    std::string s;
    s.reserve(bits.size());
    for (auto b : bits) s.push_back(b ? '1' : '0');
    return s;
}

Message Message::from_string(const std::string &text) {
    require(!text.empty(), ErrorCode::InvalidArgument, "message must have at least one bit");
    Message m;
    for (char c : text) {
        require(c == '0' || c == '1', ErrorCode::InvalidArgument, "message must consist of 0 and 1 characters");
        m.bits.push_back(c == '1' ? 1 : 0);
    }
    return m;
}

Message Message::random(std::size_t k, std::uint64_t seed) {
    require(k >= 1, ErrorCode::InvalidArgument, "message must have at least one bit");
    Rng rng(derive_seed(seed, "message"));
    Message m;
    for (std::size_t i = 0; i < k; ++i) m.bits.push_back(static_cast<std::uint8_t>(rng.below(2)));
    return m;
}

WatermarkKey make_watermark_key(std::uint64_t seed, int bits, int height, int width) {
    require(bits >= 1, ErrorCode::InvalidArgument, "watermark key needs at least one bit");
    require(height > 0 && width > 0 && height % 2 == 0 && width % 2 == 0, ErrorCode::InvalidArgument,
            "watermark image size must be positive and even");
    WatermarkKey key;
    key.seed   = seed;
    key.bits   = bits;
    key.height = height;
    key.width  = width;
    const std::size_t dim = static_cast<std::size_t>(key.dim());
    const double scale    = 1.0 / std::sqrt(static_cast<double>(dim));
    Rng rng(derive_seed(seed, "watermark-decoder"));
    key.weight.resize(static_cast<std::size_t>(bits) * dim);
    for (double &w : key.weight) w = scale * rng.normal();
    key.bias.resize(static_cast<std::size_t>(bits));
    for (double &b : key.bias) b = scale * rng.normal();
    return key;
}

void save_watermark_key(const WatermarkKey &key, const std::filesystem::path &path) {
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot open for writing: " + path.string());
    out << "splatguard-watermark-key 1\n"
        << "seed " << key.seed << "\n"
        << "bits " << key.bits << "\n"
        << "height " << key.height << "\n"
        << "width " << key.width << "\n";
    require(static_cast<bool>(out), ErrorCode::Io, "write failed: " + path.string());
}

WatermarkKey load_watermark_key(const std::filesystem::path &path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open for reading: " + path.string());
    std::string header;
    int version = 0;
    in >> header >> version;
    require(header == "splatguard-watermark-key", ErrorCode::Format, path.string() + ": not a watermark key file");
    require(version == 1, ErrorCode::VersionMismatch, path.string() + ": unsupported key version");
    std::map<std::string, std::string> fields;
    std::string name, value;
    while (in >> name >> value) fields[name] = value;
    for (const char *required : {"seed", "bits", "height", "width"})
        require(fields.count(required) == 1, ErrorCode::Format, path.string() + ": missing field " + required);
    try {
        return make_watermark_key(std::stoull(fields["seed"]), std::stoi(fields["bits"]), std::stoi(fields["height"]),
                                  std::stoi(fields["width"]));
    } catch (const std::logic_error &) {
        fail(ErrorCode::Format, path.string() + ": malformed numeric field");
    }
}

Image haar_ll(const Image &image) {
    require(image.height() % 2 == 0 && image.width() % 2 == 0, ErrorCode::InvalidArgument,
            "haar_ll needs even image dimensions");
    Image band(image.height() / 2, image.width() / 2, image.channels());
    for (int y = 0; y < band.height(); ++y)
        for (int x = 0; x < band.width(); ++x)
            for (int c = 0; c < image.channels(); ++c)
                band.at(y, x, c) = 0.25 * (image.at(2 * y, 2 * x, c) + image.at(2 * y, 2 * x + 1, c) +
                                           image.at(2 * y + 1, 2 * x, c) + image.at(2 * y + 1, 2 * x + 1, c));
    return band;
}

namespace {

void check_key_image(const Image &image, const WatermarkKey &key) {
    require(image.height() == key.height && image.width() == key.width && image.channels() == 3,
            ErrorCode::ShapeMismatch,
            "image size does not match the watermark key (" + std::to_string(key.height) + "x" +
                std::to_string(key.width) + "x3)");
}

} // namespace

std::vector<double> decode_logits(const Image &image, const WatermarkKey &key) {
    check_key_image(image, key);
    const Image band      = haar_ll(image);
    const auto feat       = band.data();
    const std::size_t dim = feat.size();
    std::vector<double> logits(key.bias);
    for (int k = 0; k < key.bits; ++k) {
        const double *row = key.weight.data() + static_cast<std::size_t>(k) * dim;
        double acc        = 0.0;
        for (std::size_t j = 0; j < dim; ++j) acc += row[j] * feat[j];
        logits[k] += acc;
    }
    return logits;
}

Message decode_bits(const Image &image, const WatermarkKey &key) {
    Message m;
    for (double l : decode_logits(image, key)) m.bits.push_back(l > 0.0 ? 1 : 0);
    return m;
}

double bit_accuracy(const Message &decoded, const Message &target) {
    require(decoded.size() == target.size() && !target.bits.empty(), ErrorCode::ShapeMismatch,
            "bit_accuracy: message lengths differ");
    std::size_t same = 0;
    for (std::size_t i = 0; i < target.size(); ++i) same += decoded.bits[i] == target.bits[i];
    return static_cast<double>(same) / static_cast<double>(target.size());
}

LossWithGrad message_loss(const Image &image, const WatermarkKey &key, const Message &message) {
    require(message.size() == static_cast<std::size_t>(key.bits), ErrorCode::ShapeMismatch,
            "message length does not match the key");
    const auto logits     = decode_logits(image, key);
    const std::size_t dim = static_cast<std::size_t>(key.dim());
    LossWithGrad out;
    // BCE with logits, in the overflow-safe form max(l,0) - l*y + log(1 + exp(-|l|)).
    std::vector<double> dlogit(logits.size());
    for (std::size_t k = 0; k < logits.size(); ++k) {
        const double l = logits[k];
        const double y = message.bits[k];
        out.value += std::max(l, 0.0) - l * y + std::log1p(std::exp(-std::abs(l)));
        dlogit[k] = (1.0 / (1.0 + std::exp(-l)) - y) / static_cast<double>(logits.size());
    }
    out.value /= static_cast<double>(logits.size());

    // d/dband = W^T dlogit, then each band cell spreads 1/4 to its 2x2 block.
    Image dband(key.height / 2, key.width / 2, 3);
    auto db = dband.data();
    for (int k = 0; k < key.bits; ++k) {
        const double g    = dlogit[k];
        const double *row = key.weight.data() + static_cast<std::size_t>(k) * dim;
        for (std::size_t j = 0; j < dim; ++j) db[j] += g * row[j];
    }
    out.cotangent = Image(key.height, key.width, 3);
    for (int y = 0; y < key.height; ++y)
        for (int x = 0; x < key.width; ++x)
            for (int c = 0; c < 3; ++c) out.cotangent.at(y, x, c) = 0.25 * dband.at(y / 2, x / 2, c);
    return out;
}

double feature_distance(const Image &a, const Image &b, const SurrogateEditor &editor) {
    require_same_shape(a, b, "feature_distance");
    const Image fa = editor.encode(a);
    const Image fb = editor.encode(b);
    double acc     = 0.0;
    for (std::size_t i = 0; i < fa.size(); ++i) acc += (fa.data()[i] - fb.data()[i]) * (fa.data()[i] - fb.data()[i]);
    return acc / static_cast<double>(fa.size());
}

QualityLoss quality_loss(const Image &image, const Image &reference, const SurrogateEditor &editor,
                         double feature_weight) {
    require_same_shape(image, reference, "quality_loss");
    require(feature_weight >= 0.0, ErrorCode::InvalidArgument, "feature weight must be >= 0");
    QualityLoss out;
    out.cotangent     = Image(image.height(), image.width(), image.channels());
    const double inv  = 1.0 / static_cast<double>(image.size());
    for (std::size_t i = 0; i < image.size(); ++i) {
        const double d = image.data()[i] - reference.data()[i];
        out.l1 += std::abs(d);
        out.cotangent.data()[i] = d > 0.0 ? inv : (d < 0.0 ? -inv : 0.0);
    }
    out.l1 *= inv;

    if (feature_weight > 0.0) {
        const Image fa = editor.encode(image);
        const Image fb = editor.encode(reference);
        Image dfeat(fa.height(), fa.width(), fa.channels());
        const double finv = 1.0 / static_cast<double>(fa.size());
        for (std::size_t i = 0; i < fa.size(); ++i) {
            const double d = fa.data()[i] - fb.data()[i];
            out.feature += d * d * finv;
            dfeat.data()[i] = 2.0 * d * finv * feature_weight;
        }
        const Image dimg = editor.encode_vjp(image, dfeat);
        for (std::size_t i = 0; i < image.size(); ++i) out.cotangent.data()[i] += dimg.data()[i];
    }
    out.value = out.l1 + feature_weight * out.feature;
    return out;
}

} // namespace splatguard
