// Copyright Contributors to the splatguard project
// SPDX-License-Identifier: Apache-2.0
//
#include "splatguard/selection.hpp"

#include "splatguard/error.hpp"

#include <algorithm>
#include <cmath>

namespace splatguard {

std::vector<double> gaussian_scores(const GaussianScene &scene, const std::vector<CameraView> &views,
                                    const std::vector<Image> &masks) {
    require(views.size() == masks.size(), ErrorCode::ShapeMismatch, "gaussian_scores: view and mask counts differ");
    require(!views.empty(), ErrorCode::InvalidArgument, "gaussian_scores needs at least one view");
    std::vector<double> num(scene.size(), 0.0), den(scene.size(), 0.0);
    for (std::size_t v = 0; v < views.size(); ++v) {
        const Image &mask = masks[v];
        require(mask.height() == views[v].height && mask.width() == views[v].width && mask.channels() == 1,
                ErrorCode::ShapeMismatch, "mask for view '" + views[v].view_id + "' does not match the view size");
        for (double x : mask.data())
            require(x >= 0.0 && x <= 1.0, ErrorCode::InvalidArgument, "mask values must lie in [0, 1]");
        const auto result = render(scene, views[v], &mask);
        for (std::size_t i = 0; i < scene.size(); ++i) {
            num[i] += result.contrib_mask_num[i];
            den[i] += result.contrib_den[i];
        }
    }
    std::vector<double> s(scene.size());
    for (std::size_t i = 0; i < scene.size(); ++i) s[i] = std::clamp(num[i] / (den[i] + kSelectionEps), 0.0, 1.0);
    return s;
}

std::vector<double> soft_coefficients(const std::vector<double> &scores, double tau, double gamma) {
    require(tau > 0.0 && gamma > 0.0, ErrorCode::InvalidArgument, "tau and gamma must be positive");
    std::vector<double> m(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
        m[i] = std::min(1.0, std::pow(std::max(scores[i], 0.0) / (tau + kSelectionEps), gamma));
    return m;
}

std::vector<double> hard_coefficients(const std::vector<double> &scores, double threshold) {
    require(threshold > 0.0 && threshold <= 1.0, ErrorCode::InvalidArgument, "hard threshold must lie in (0, 1]");
    std::vector<double> m(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) m[i] = scores[i] >= threshold ? 1.0 : 0.0;
    return m;
}

MaskMode mask_mode_from_name(const std::string &name) {
    if (name == "soft") return MaskMode::Soft;
    if (name == "hard") return MaskMode::Hard;
    fail(ErrorCode::Config, "unknown mask mode '" + name + "' (expected soft or hard)");
}

const char *mask_mode_name(MaskMode mode) { return mode == MaskMode::Soft ? "soft" : "hard"; }

SoftMask build_soft_mask(const GaussianScene &scene, const std::vector<CameraView> &views,
                         const std::vector<Image> &masks, const MaskConfig &config) {
    SoftMask mask;
    mask.s         = gaussian_scores(scene, views, masks);
    mask.tau       = config.tau;
    mask.gamma     = config.gamma;
    mask.threshold = config.threshold;
    mask.mode      = config.mode;
    mask.m = config.mode == MaskMode::Soft ? soft_coefficients(mask.s, config.tau, config.gamma)
                                           : hard_coefficients(mask.s, config.threshold);
    for (const auto &v : views) mask.views_used.push_back(v.view_id);
    return mask;
}

SoftMask uniform_mask(std::size_t n) {
    SoftMask mask;
    mask.m.assign(n, 1.0);
    mask.s.assign(n, 1.0);
    return mask;
}

CsvTable soft_mask_to_csv(const SoftMask &mask) {
    CsvTable t;
    t.header = {"index", "s", "m"};
    for (std::size_t i = 0; i < mask.size(); ++i)
        t.rows.push_back({std::to_string(i), format_double(mask.s[i]), format_double(mask.m[i])});
    return t;
}

SoftMask soft_mask_from_csv(const CsvTable &table) {
    const std::size_t ii = table.column("index"), is = table.column("s"), im = table.column("m");
    SoftMask mask;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        require(table.rows[r][ii] == std::to_string(r), ErrorCode::Format, "mask CSV indices must be 0..N-1 in order");
        mask.s.push_back(parse_double(table.rows[r][is]));
        const double m = parse_double(table.rows[r][im]);
        require(m >= 0.0 && m <= 1.0, ErrorCode::Format, "mask coefficients must lie in [0, 1]");
        mask.m.push_back(m);
    }
    return mask;
}

Image procedural_mask(const GaussianScene &scene, const CameraView &camera, const std::string &label) {
    std::vector<bool> subset(scene.size(), false);
    bool any = false;
    for (std::size_t i = 0; i < scene.size(); ++i)
        if (scene.label(i) == label) subset[i] = any = true;
    require(any, ErrorCode::InvalidArgument, "no Gaussian carries the label '" + label + "'");
    return render_weight_map(scene, camera, subset);
}

std::vector<Image> load_view_masks(const std::filesystem::path &dir, const std::vector<CameraView> &views) {
    std::vector<Image> masks;
    for (const auto &v : views) masks.push_back(read_pgm(dir / (v.view_id + ".pgm")));
    return masks;
}

std::vector<double> saliency(const GradientBundle &bundle) {
    std::vector<double> out(bundle.size());
    for (std::size_t i = 0; i < bundle.size(); ++i) {
        double acc = 0.0;
        for (double g : bundle[i]) acc += g * g;
        out[i] = std::sqrt(acc);
    }
    return out;
}

CsvTable saliency_csv(const GradientBundle &bundle, const GaussianScene &scene) {
    require(bundle.size() == scene.size(), ErrorCode::ShapeMismatch, "saliency: bundle and scene sizes differ");
    const auto sal = saliency(bundle);
    CsvTable t;
    t.header = {"index", "x", "y", "z", "saliency"};
    for (std::size_t i = 0; i < scene.size(); ++i) {
        const double *p = scene.gaussians[i].position();
        t.rows.push_back({std::to_string(i), format_double(p[0]), format_double(p[1]), format_double(p[2]),
                          format_double(sal[i])});
    }
    return t;
}

} // namespace splatguard
