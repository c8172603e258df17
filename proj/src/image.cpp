// Copyright Contributors to the splatguard project
// SPDX-License-Identifier: Apache-2.0
//
#include "splatguard/image.hpp"

#include "splatguard/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

namespace splatguard {

Image::Image(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
    require(height > 0 && width > 0 && channels > 0, ErrorCode::InvalidArgument, "image dimensions must be positive");
    data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

void require_same_shape(const Image &a, const Image &b, const char *what) {
    if (!a.same_shape(b)) {
        fail(ErrorCode::ShapeMismatch,
             std::string(what) + ": image shapes differ (" + std::to_string(a.height()) + "x" + std::to_string(a.width()) +
                 "x" + std::to_string(a.channels()) + " vs " + std::to_string(b.height()) + "x" +
                 std::to_string(b.width()) + "x" + std::to_string(b.channels()) + ")");
    }
}

unsigned char encode_srgb8(double linear) {
    const double v = std::pow(std::clamp(linear, 0.0, 1.0), 1.0 / 2.2);
    return static_cast<unsigned char>(std::lround(v * 255.0));
}

double decode_srgb8(unsigned char value) { return std::pow(value / 255.0, 2.2); }

namespace {

void write_netpbm(const Image &img, const std::filesystem::path &path, const char *magic, bool gamma) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot open for writing: " + path.string());
    out << magic << "\n" << img.width() << " " << img.height() << "\n255\n";
    std::vector<unsigned char> bytes(img.size());
    const auto src = img.data();
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        bytes[i] = gamma ? encode_srgb8(src[i])
                         : static_cast<unsigned char>(std::lround(std::clamp(src[i], 0.0, 1.0) * 255.0));
    }
    out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    require(static_cast<bool>(out), ErrorCode::Io, "write failed: " + path.string());
}

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream &in) {
    std::string token;
    for (;;) {
        const int c = in.get();
        if (c == EOF) break;
        if (c == '#') {
            std::string ignored;
            std::getline(in, ignored);
            continue;
        }
        if (std::isspace(c)) {
            if (!token.empty()) break;
            continue;
        }
        token.push_back(static_cast<char>(c));
    }
    return token;
}

Image read_netpbm(const std::filesystem::path &path, const std::string &magic, int channels, bool gamma) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open for reading: " + path.string());
    require(next_token(in) == magic, ErrorCode::Format, path.string() + ": expected " + magic + " header");
    int width = 0, height = 0, maxval = 0;
    try {
        width  = std::stoi(next_token(in));
        height = std::stoi(next_token(in));
        maxval = std::stoi(next_token(in));
    } catch (const std::exception &) {
        fail(ErrorCode::Format, path.string() + ": malformed header");
    }
    require(width > 0 && height > 0, ErrorCode::Format, path.string() + ": bad dimensions");
    require(maxval == 255, ErrorCode::Format, path.string() + ": only 8-bit images are supported");

    Image img(height, width, channels);
    std::vector<unsigned char> bytes(img.size());
    in.read(reinterpret_cast<char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    require(in.gcount() == static_cast<std::streamsize>(bytes.size()), ErrorCode::Truncated,
            path.string() + ": truncated pixel data");
    auto dst = img.data();
    for (std::size_t i = 0; i < bytes.size(); ++i) dst[i] = gamma ? decode_srgb8(bytes[i]) : bytes[i] / 255.0;
    return img;
}

} // namespace

void write_ppm(const Image &rgb, const std::filesystem::path &path) {
    require(rgb.channels() == 3, ErrorCode::ShapeMismatch, "write_ppm expects 3 channels");
    write_netpbm(rgb, path, "P6", true);
}

Image read_ppm(const std::filesystem::path &path) { return read_netpbm(path, "P6", 3, true); }

void write_pgm(const Image &gray, const std::filesystem::path &path) {
    require(gray.channels() == 1, ErrorCode::ShapeMismatch, "write_pgm expects 1 channel");
    write_netpbm(gray, path, "P5", false);
}

Image read_pgm(const std::filesystem::path &path) { return read_netpbm(path, "P5", 1, false); }

} // namespace splatguard
