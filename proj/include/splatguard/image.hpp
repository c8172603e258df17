// Copyright Contributors to the splatguard project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace splatguard {

/// Dense row-major image with interleaved channels, stored as linear-light f64.
class Image {
public:
    Image() = default;
    Image(int height, int width, int channels, double fill = 0.0);

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    int channels() const noexcept { return channels_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double &at(int y, int x, int c = 0) noexcept { return data_[index(y, x, c)]; }
    double at(int y, int x, int c = 0) const noexcept { return data_[index(y, x, c)]; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    bool same_shape(const Image &other) const noexcept {
        return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
    }

    friend bool operator==(const Image &, const Image &) = default;

private:
    std::size_t index(int y, int x, int c) const noexcept {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    int height_   = 0;
    int width_    = 0;
    int channels_ = 0;
    std::vector<double> data_;
};

/// Throws ShapeMismatch when the images differ in any dimension.
void require_same_shape(const Image &a, const Image &b, const char *what);

/// Binary P6, 8-bit. Values are gamma-encoded (1/2.2) on write and decoded on read.
void write_ppm(const Image &rgb, const std::filesystem::path &path);
Image read_ppm(const std::filesystem::path &path);

/// Binary P5, 8-bit, stored linearly (value / 255). Used for masks.
void write_pgm(const Image &gray, const std::filesystem::path &path);
Image read_pgm(const std::filesystem::path &path);

/// 8-bit gamma encoding used by write_ppm, exposed for tests.
unsigned char encode_srgb8(double linear);
double decode_srgb8(unsigned char value);

} // namespace splatguard
