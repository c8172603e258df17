// Copyright Contributors to the splatguard project
// SPDX-License-Identifier: Apache-2.0
//
// Joint watermark + edit-deterrence optimization of a Gaussian scene.
#pragma once

#include "splatguard/csv.hpp"
#include "splatguard/editor.hpp"
#include "splatguard/renderer.hpp"
#include "splatguard/selection.hpp"
#include "splatguard/watermark.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace splatguard {

struct ProtectConfig {
    bool adversarial      = true; ///< false runs the watermark branch alone
    double lambda_adv     = 1.0;
    double lambda_msg     = 0.1;
    double lambda_quality = 1.0;
    double lambda_lat     = 1e-4;
    double lambda_traj    = 1e-4;
    double lambda_xattn   = 1e-4;
    double feature_weight = 0.1; ///< weight of the feature term inside the quality loss
    /// Role coefficients applied to adversarial gradients, indexed by ParamGroup.
    GroupValues rho{0.0, 1.0, 1.0, 0.1, 0.1, 1.0};
    GroupValues learning_rate{0.0, 2e-3, 2e-3, 5e-3, 5e-3, 5e-3};
    std::array<bool, kParamGroupCount> enabled{false, true, true, true, true, true};
    int epochs          = 8;
    int views_per_iter  = 4;
    double beta1        = 0.9;
    double beta2        = 0.999;
    double adam_eps     = 1e-8;
    std::uint64_t seed  = 1;
};

void validate_protect_config(const ProtectConfig &config);

struct LossBundle {
    double value = 0.0;
    GradientBundle grad;
};

/// Watermark loss averaged over views: lambda_msg * BCE + lambda_quality * quality.
/// Gradients are scene-wide (no mask).
LossBundle wm_loss(const GaussianScene &scene, const std::vector<Image> &reference_renders, const WatermarkKey &key,
                   const Message &message, const std::vector<CameraView> &views, const ProtectConfig &config,
                   const SurrogateEditor &editor);

/// Adversarial loss averaged over views: l1(render, reference) minus the weighted
/// diversion terms, all evaluated under the per-view condition conds[v].
/// The gradient is the raw, unmodulated bundle.
LossBundle adv_loss(const GaussianScene &scene, const std::vector<Image> &reference_renders,
                    const std::vector<EditCondition> &conds, const std::vector<CameraView> &views,
                    const ProtectConfig &config, const SurrogateEditor &editor);

/// out[i][k] = wm[i][k] + lambda_adv * m_i * rho_k * adv[i][k].
GradientBundle modulate(const GradientBundle &adv, const SoftMask &mask, const GroupValues &rho, double lambda_adv,
                        const GradientBundle &wm);

struct IterationTrace {
    double wm_loss = 0.0, msg_loss = 0.0, quality_loss = 0.0;
    double adv_loss = 0.0, render_l1 = 0.0, s_lat = 0.0, s_traj = 0.0, s_xattn = 0.0;
    int prompt_index = -1; ///< index into the prompt library, -1 without the adversarial branch
};

struct ProtectReport {
    std::vector<IterationTrace> trace;
    double final_bit_accuracy = 0.0; ///< mean over evaluation views
    double final_psnr         = 0.0; ///< mean over evaluation views, vs reference renders
    double wall_seconds       = 0.0;
    std::uint64_t reference_hash_before = 0;
    std::uint64_t reference_hash_after  = 0;
    std::uint64_t editor_hash_before    = 0;
    std::uint64_t editor_hash_after     = 0;

    CsvTable trace_csv() const;
};

struct ProtectResult {
    GaussianScene scene;
    ProtectReport report;
};

/// Runs epochs * ceil(|train_views| / views_per_iter) iterations of the joint update.
/// `eval_views` are only used for the final report.
ProtectResult protect(const GaussianScene &scene, const ProtectConfig &config, const WatermarkKey &key,
                      const Message &message, const SoftMask &mask, const SurrogateEditor &editor,
                      const std::vector<std::string> &prompts, const std::vector<CameraView> &train_views,
                      const std::vector<CameraView> &eval_views);

/// Exponential moving average with smoothing 2 / (window + 1).
std::vector<double> moving_average(const std::vector<double> &values, int window);

} // namespace splatguard
