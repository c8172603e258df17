// Copyright Contributors to the splatguard project
// SPDX-License-Identifier: Apache-2.0
//
#include "splatguard/robustness.hpp"

#include "splatguard/error.hpp"
#include "splatguard/parallel.hpp"
#include "splatguard/random.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace splatguard {

namespace {

constexpr std::array<const char *, 6> kKindNames{"noise", "rotation", "scaling", "blur", "crop", "jpeg"};

// Zero outside the image.
double sample_bilinear(const Image &img, double x, double y, int c) {
    const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0, fy = y - y0;
    auto px         = [&](int yy, int xx) {
        if (xx < 0 || yy < 0 || xx >= img.width() || yy >= img.height()) return 0.0;
        return img.at(yy, xx, c);
    };
    return (1 - fy) * ((1 - fx) * px(y0, x0) + fx * px(y0, x0 + 1)) +
           fy * ((1 - fx) * px(y0 + 1, x0) + fx * px(y0 + 1, x0 + 1));
}

Image rotate(const Image &img, double angle) {
    Image out(img.height(), img.width(), img.channels());
    const double cx = 0.5 * img.width(), cy = 0.5 * img.height();
    const double c = std::cos(angle), s = std::sin(angle);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
            // inverse rotation maps the output pixel back into the source
            const double sx = c * dx + s * dy + cx - 0.5;
            const double sy = -s * dx + c * dy + cy - 0.5;
            for (int ch = 0; ch < img.channels(); ++ch) out.at(y, x, ch) = sample_bilinear(img, sx, sy, ch);
        }
    return out;
}

// Edge-clamped bilinear resampling of the window [y0, y0 + h) x [x0, x0 + w).
Image resample_window(const Image &img, double y0, double x0, double h, double w, int out_h, int out_w) {
    Image out(out_h, out_w, img.channels());
    for (int y = 0; y < out_h; ++y)
        for (int x = 0; x < out_w; ++x) {
            const double sy = std::clamp(y0 + (y + 0.5) * h / out_h - 0.5, 0.0, img.height() - 1.0);
            const double sx = std::clamp(x0 + (x + 0.5) * w / out_w - 0.5, 0.0, img.width() - 1.0);
            const int iy = static_cast<int>(sy), ix = static_cast<int>(sx);
            const int iy1 = std::min(iy + 1, img.height() - 1), ix1 = std::min(ix + 1, img.width() - 1);
            const double fy = sy - iy, fx = sx - ix;
            for (int c = 0; c < img.channels(); ++c)
                out.at(y, x, c) = (1 - fy) * ((1 - fx) * img.at(iy, ix, c) + fx * img.at(iy, ix1, c)) +
                                  fy * ((1 - fx) * img.at(iy1, ix, c) + fx * img.at(iy1, ix1, c));
        }
    return out;
}

// Standard luminance and chrominance quantization tables (ITU-T T.81 Annex K).
constexpr std::array<int, 64> kLumaTable{16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
                                         14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
                                         18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
                                         49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};
constexpr std::array<int, 64> kChromaTable{17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99,
                                           24, 26, 56, 99, 99, 99, 99, 99, 47, 66, 99, 99, 99, 99, 99, 99,
                                           99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
                                           99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};

std::array<int, 64> scaled_table(const std::array<int, 64> &base, int quality) {
    const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
    std::array<int, 64> out{};
    for (int i = 0; i < 64; ++i) out[i] = std::clamp((base[i] * scale + 50) / 100, 1, 255);
    return out;
}

struct Dct8 {
    double basis[8][8];
    Dct8() {
        for (int u = 0; u < 8; ++u)
            for (int x = 0; x < 8; ++x)
                basis[u][x] = (u == 0 ? std::sqrt(0.125) : 0.5) * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
    }
};

// Quantization round trip of one plane (dimensions multiples of 8), in place.
void quantize_plane(std::vector<double> &plane, int h, int w, const std::array<int, 64> &table) {
    static const Dct8 dct;
    double block[8][8], tmp[8][8];
    for (int by = 0; by < h; by += 8)
        for (int bx = 0; bx < w; bx += 8) {
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x) block[y][x] = plane[(by + y) * w + bx + x] - 128.0;
            for (int u = 0; u < 8; ++u)
                for (int x = 0; x < 8; ++x) {
                    double acc = 0.0;
                    for (int y = 0; y < 8; ++y) acc += dct.basis[u][y] * block[y][x];
                    tmp[u][x] = acc;
                }
            for (int u = 0; u < 8; ++u)
                for (int v = 0; v < 8; ++v) {
                    double acc = 0.0;
                    for (int x = 0; x < 8; ++x) acc += dct.basis[v][x] * tmp[u][x];
                    const int q = table[u * 8 + v];
                    block[u][v] = std::round(acc / q) * q;
                }
            for (int y = 0; y < 8; ++y)
                for (int v = 0; v < 8; ++v) {
                    double acc = 0.0;
                    for (int u = 0; u < 8; ++u) acc += dct.basis[u][y] * block[u][v];
                    tmp[y][v] = acc;
                }
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x) {
                    double acc = 0.0;
                    for (int v = 0; v < 8; ++v) acc += dct.basis[v][x] * tmp[y][v];
                    plane[(by + y) * w + bx + x] = acc + 128.0;
                }
        }
}

} // namespace

DistortionKind distortion_kind_from_name(const std::string &name) {
    for (std::size_t k = 0; k < kKindNames.size(); ++k)
        if (name == kKindNames[k]) return static_cast<DistortionKind>(k);
    fail(ErrorCode::Config, "unknown distortion '" + name + "'");
}

const char *distortion_kind_name(DistortionKind kind) { return kKindNames[static_cast<int>(kind)]; }

void validate_distortion(const DistortionSpec &spec) {
    const double p = spec.parameter;
    require(std::isfinite(p), ErrorCode::InvalidArgument, "distortion parameter must be finite");
    switch (spec.kind) {
    case DistortionKind::Noise:
    case DistortionKind::Blur:
        require(p >= 0.0 && p <= 10.0, ErrorCode::InvalidArgument, "noise and blur sigma must lie in [0, 10]");
        break;
    case DistortionKind::Rotation:
        require(p >= 0.0 && p <= std::numbers::pi, ErrorCode::InvalidArgument, "rotation angle must lie in [0, pi]");
        break;
    case DistortionKind::Scaling:
    case DistortionKind::Crop:
        require(p > 0.0 && p <= 1.0, ErrorCode::InvalidArgument, "scaling and crop fractions must lie in (0, 1]");
        break;
    case DistortionKind::JpegLike:
        require(p >= 1.0 && p <= 100.0 && p == std::floor(p), ErrorCode::InvalidArgument,
                "jpeg quality must be an integer in [1, 100]");
        break;
    }
}

std::vector<DistortionSpec> default_image_distortions(std::uint64_t seed) {
    return {{DistortionKind::Noise, 0.01, seed},    {DistortionKind::Rotation, std::numbers::pi / 6, seed},
            {DistortionKind::Scaling, 0.75, seed},  {DistortionKind::Blur, 0.1, seed},
            {DistortionKind::Crop, 0.4, seed},      {DistortionKind::JpegLike, 50.0, seed}};
}

Image resize_bilinear(const Image &image, int height, int width) {
    require(height > 0 && width > 0, ErrorCode::InvalidArgument, "resize target must be positive");
    return resample_window(image, 0.0, 0.0, image.height(), image.width(), height, width);
}

Image gaussian_blur(const Image &image, double sigma) {
    if (sigma == 0.0) return image;
    const int r = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(2 * r + 1);
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) sum += k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
    for (double &v : k) v /= sum;
    const int H = image.height(), W = image.width(), C = image.channels();
    Image tmp(H, W, C), out(H, W, C);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < C; ++c) {
                double acc = 0.0;
                for (int i = -r; i <= r; ++i) acc += k[i + r] * image.at(y, std::clamp(x + i, 0, W - 1), c);
                tmp.at(y, x, c) = acc;
            }
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < C; ++c) {
                double acc = 0.0;
                for (int i = -r; i <= r; ++i) acc += k[i + r] * tmp.at(std::clamp(y + i, 0, H - 1), x, c);
                out.at(y, x, c) = acc;
            }
    return out;
}

Image jpeg_like(const Image &image, int quality) {
    require(quality >= 1 && quality <= 100, ErrorCode::InvalidArgument, "jpeg quality must lie in [1, 100]");
    require(image.channels() == 3, ErrorCode::ShapeMismatch, "jpeg_like expects an RGB image");
    const int H = image.height(), W = image.width();
    // Pad to whole 16x16 macroblocks by edge replication.
    const int PH = (H + 15) / 16 * 16, PW = (W + 15) / 16 * 16;
    std::vector<double> Y(PH * PW), Cb(PH * PW), Cr(PH * PW);
    for (int y = 0; y < PH; ++y)
        for (int x = 0; x < PW; ++x) {
            const int sy = std::min(y, H - 1), sx = std::min(x, W - 1);
            auto q8      = [&](int c) { return std::round(255.0 * std::clamp(image.at(sy, sx, c), 0.0, 1.0)); };
            const double r = q8(0), g = q8(1), b = q8(2);
            Y[y * PW + x]  = 0.299 * r + 0.587 * g + 0.114 * b;
            Cb[y * PW + x] = -0.168736 * r - 0.331264 * g + 0.5 * b + 128.0;
            Cr[y * PW + x] = 0.5 * r - 0.418688 * g - 0.081312 * b + 128.0;
        }
    const int CH = PH / 2, CW = PW / 2;
    auto subsample = [&](const std::vector<double> &full) {
        std::vector<double> half(CH * CW);
        for (int y = 0; y < CH; ++y)
            for (int x = 0; x < CW; ++x)
                half[y * CW + x] = 0.25 * (full[2 * y * PW + 2 * x] + full[2 * y * PW + 2 * x + 1] +
                                           full[(2 * y + 1) * PW + 2 * x] + full[(2 * y + 1) * PW + 2 * x + 1]);
        return half;
    };
    std::vector<double> cb = subsample(Cb), cr = subsample(Cr);
    quantize_plane(Y, PH, PW, scaled_table(kLumaTable, quality));
    const auto chroma = scaled_table(kChromaTable, quality);
    quantize_plane(cb, CH, CW, chroma);
    quantize_plane(cr, CH, CW, chroma);

    Image out(H, W, 3);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const double yy = Y[y * PW + x];
            const double b  = cb[(y / 2) * CW + x / 2] - 128.0;
            const double r  = cr[(y / 2) * CW + x / 2] - 128.0;
            const double rgb[3] = {yy + 1.402 * r, yy - 0.344136 * b - 0.714136 * r, yy + 1.772 * b};
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = std::clamp(std::round(rgb[c]), 0.0, 255.0) / 255.0;
        }
    return out;
}

Image distort_image(const Image &image, const DistortionSpec &spec, std::uint64_t stream) {
    validate_distortion(spec);
    Rng rng(derive_seed(spec.seed, distortion_kind_name(spec.kind), stream));
    const double p = spec.parameter;
    switch (spec.kind) {
    case DistortionKind::Noise: {
        Image out = image;
        if (p == 0.0) return out;
        for (double &v : out.data()) v = std::clamp(v + p * rng.normal(), 0.0, 1.0);
        return out;
    }
    case DistortionKind::Rotation: {
        const double angle = rng.uniform(-p, p);
        return p == 0.0 ? image : rotate(image, angle);
    }
    case DistortionKind::Scaling: {
        if (p == 1.0) return image;
        const int h = std::max(1, static_cast<int>(std::lround(p * image.height())));
        const int w = std::max(1, static_cast<int>(std::lround(p * image.width())));
        return resize_bilinear(resize_bilinear(image, h, w), image.height(), image.width());
    }
    case DistortionKind::Blur: return gaussian_blur(image, p);
    case DistortionKind::Crop: {
        if (p == 1.0) return image;
        const double side = std::sqrt(p);
        const int h       = std::max(1, static_cast<int>(std::lround(side * image.height())));
        const int w       = std::max(1, static_cast<int>(std::lround(side * image.width())));
        const int y0      = static_cast<int>(rng.below(image.height() - h + 1));
        const int x0      = static_cast<int>(rng.below(image.width() - w + 1));
        return resample_window(image, y0, x0, h, w, image.height(), image.width());
    }
    case DistortionKind::JpegLike: return jpeg_like(image, static_cast<int>(p));
    }
    fail(ErrorCode::InvalidArgument, "unknown distortion kind");
}

std::vector<std::pair<std::string, GaussianScene>> apply_model_distortions(const GaussianScene &scene,
                                                                           const ModelDistortions &model) {
    return {{"none", scene},
            {"noise", distort_noise(scene, model.noise, model.seed)},
            {"prune", distort_prune(scene, model.prune, model.seed)},
            {"clone", distort_clone(scene, model.clone, model.seed)}};
}

double mean_bit_accuracy(const GaussianScene &scene, const std::vector<CameraView> &views, const WatermarkKey &key,
                         const Message &message) {
    require(!views.empty(), ErrorCode::InvalidArgument, "bit accuracy needs at least one view");
    double acc = 0.0;
    for (const auto &v : views) acc += bit_accuracy(decode_bits(render(scene, v).image, key), message);
    return acc / static_cast<double>(views.size());
}

CsvTable wm_robustness_harness(const std::vector<std::pair<std::string, GaussianScene>> &scenes,
                               const WatermarkKey &key, const Message &message, const std::vector<CameraView> &views,
                               const std::vector<DistortionSpec> &specs, const ModelDistortions &model) {
    require(!views.empty(), ErrorCode::InvalidArgument, "robustness harness needs at least one view");
    for (const auto &s : specs) validate_distortion(s);
    CsvTable t;
    t.header = {"scene", "none", "model_noise", "model_prune", "model_clone"};
    for (const auto &s : specs) t.header.push_back(distortion_kind_name(s.kind));

    for (const auto &[name, scene] : scenes) {
        const auto variants = apply_model_distortions(scene, model);
        std::vector<Image> clean(views.size());
        parallel_for(views.size(), [&](std::size_t v) { clean[v] = render(scene, views[v]).image; });
        // cells: model variants 1..3, then image distortions; "none" decodes the clean renders
        const std::size_t cells = 3 + specs.size();
        std::vector<double> acc(cells * views.size());
        parallel_for(acc.size(), [&](std::size_t idx) {
            const std::size_t cell = idx / views.size(), v = idx % views.size();
            const Image img = cell < 3 ? render(variants[cell + 1].second, views[v]).image
                                       : distort_image(clean[v], specs[cell - 3], v);
            acc[idx] = bit_accuracy(decode_bits(img, key), message);
        });
        std::vector<std::string> row{name};
        double none = 0.0;
        for (const auto &img : clean) none += bit_accuracy(decode_bits(img, key), message);
        row.push_back(format_double(none / static_cast<double>(views.size())));
        for (std::size_t cell = 0; cell < cells; ++cell) {
            double sum = 0.0;
            for (std::size_t v = 0; v < views.size(); ++v) sum += acc[cell * views.size() + v];
            row.push_back(format_double(sum / static_cast<double>(views.size())));
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

CsvTable adv_robustness_harness(const GaussianScene &original,
                                const std::vector<std::pair<std::string, GaussianScene>> &scenes,
                                const std::vector<CameraView> &views, const AttackSetup &attack,
                                const ModelDistortions &model) {
    std::vector<Image> src_orig;
    for (const auto &v : views) src_orig.push_back(render(original, v).image);
    const auto edited_orig = run_edit(original, views, attack.edit, attack.editor).renders;

    CsvTable t;
    t.header = {"scene", "distortion", "d_clip", "d_clipT", "d_clipD", "clip", "clipT", "clipD"};
    for (const auto &[name, scene] : scenes)
        for (const auto &[dname, distorted] : apply_model_distortions(scene, model)) {
            std::vector<Image> src_method;
            for (const auto &v : views) src_method.push_back(render(distorted, v).image);
            const auto edited = run_edit(distorted, views, attack.edit, attack.editor).renders;
            const auto m      = clip_metrics(edited_orig, edited, src_orig, src_method, attack.prompt_src,
                                             attack.edit.prompt, attack.embedders);
            t.rows.push_back({name, dname, format_double(m.clip.diff), format_double(m.clip_t.diff),
                              format_double(m.clip_d.diff), format_double(m.clip.method),
                              format_double(m.clip_t.method), format_double(m.clip_d.method)});
        }
    return t;
}

CsvTable wm_after_edit_harness(const std::vector<std::pair<std::string, GaussianScene>> &scenes,
                               const WatermarkKey &key, const Message &message, const std::vector<CameraView> &views,
                               const EditConfig &edit, const EditorConfig &editor) {
    CsvTable t;
    t.header = {"scene", "before", "after", "drop"};
    for (const auto &[name, scene] : scenes) {
        const double before = 100.0 * mean_bit_accuracy(scene, views, key, message);
        const auto edited   = run_edit(scene, views, edit, editor);
        double after        = 0.0;
        for (const auto &img : edited.renders) after += bit_accuracy(decode_bits(img, key), message);
        after = 100.0 * after / static_cast<double>(views.size());
        t.rows.push_back({name, format_double(before), format_double(after), format_double(before - after)});
    }
    return t;
}

} // namespace splatguard
