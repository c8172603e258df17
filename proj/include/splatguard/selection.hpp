// Copyright Contributors to the splatguard project
// SPDX-License-Identifier: Apache-2.0
//
// Per-Gaussian adversarial update coefficients derived from 2D masks.
#pragma once

#include "splatguard/csv.hpp"
#include "splatguard/renderer.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace splatguard {

inline constexpr double kSelectionEps = 1e-8;

/// s_i = sum_v sum_p w_i(p) M_v(p) / (sum_v sum_p w_i(p) + eps).
std::vector<double> gaussian_scores(const GaussianScene &scene, const std::vector<CameraView> &views,
                                    const std::vector<Image> &masks);

/// m_i = min(1, (s_i / (tau + eps))^gamma).
std::vector<double> soft_coefficients(const std::vector<double> &scores, double tau, double gamma);

/// m_i = 1 iff s_i >= threshold.
std::vector<double> hard_coefficients(const std::vector<double> &scores, double threshold);

enum class MaskMode { Soft, Hard };

MaskMode mask_mode_from_name(const std::string &name);
const char *mask_mode_name(MaskMode mode);

struct SoftMask {
    std::vector<double> m;
    std::vector<double> s;
    double tau       = 0.6;
    double gamma     = 2.0;
    double threshold = 0.5; ///< used in hard mode
    MaskMode mode    = MaskMode::Soft;
    std::vector<std::string> views_used;

    std::size_t size() const noexcept { return m.size(); }
};

struct MaskConfig {
    MaskMode mode    = MaskMode::Soft;
    double tau       = 0.6;
    double gamma     = 2.0;
    double threshold = 0.5;
};

SoftMask build_soft_mask(const GaussianScene &scene, const std::vector<CameraView> &views,
                         const std::vector<Image> &masks, const MaskConfig &config);

/// Mask of ones for every Gaussian (no selection).
SoftMask uniform_mask(std::size_t n);

/// CSV with columns index,s,m.
CsvTable soft_mask_to_csv(const SoftMask &mask);
SoftMask soft_mask_from_csv(const CsvTable &table);

/// Accumulated compositing weight of the Gaussians carrying `label`, clamped to [0, 1].
/// Throws InvalidArgument when no Gaussian carries the label.
Image procedural_mask(const GaussianScene &scene, const CameraView &camera, const std::string &label);

/// Reads `<dir>/<view_id>.pgm` for every view.
std::vector<Image> load_view_masks(const std::filesystem::path &dir, const std::vector<CameraView> &views);

/// Per-Gaussian L2 norm of the gradient over all parameter groups.
std::vector<double> saliency(const GradientBundle &bundle);

/// CSV with columns index,x,y,z,saliency.
CsvTable saliency_csv(const GradientBundle &bundle, const GaussianScene &scene);

} // namespace splatguard
