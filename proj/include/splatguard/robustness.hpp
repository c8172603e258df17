// Copyright Contributors to the splatguard project
// SPDX-License-Identifier: Apache-2.0
//
// Image distortions and the watermark / deterrence robustness harnesses.
#pragma once

#include "splatguard/csv.hpp"
#include "splatguard/editloop.hpp"
#include "splatguard/metrics.hpp"
#include "splatguard/watermark.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace splatguard {

enum class DistortionKind { Noise, Rotation, Scaling, Blur, Crop, JpegLike };

DistortionKind distortion_kind_from_name(const std::string &name);
const char *distortion_kind_name(DistortionKind kind);

/// parameter: noise sigma, max rotation angle (radians), scale factor, blur sigma,
/// kept area fraction, JPEG quality.
struct DistortionSpec {
    DistortionKind kind = DistortionKind::Noise;
    double parameter    = 0.01;
    std::uint64_t seed  = 1;
};

void validate_distortion(const DistortionSpec &spec);

/// noise 0.01, rotation pi/6, scaling 0.75, blur 0.1, crop 0.4, jpeg 50.
std::vector<DistortionSpec> default_image_distortions(std::uint64_t seed = 1);

/// Pure and deterministic in (spec.seed, stream). `stream` separates the random draws
/// of different views.
Image distort_image(const Image &image, const DistortionSpec &spec, std::uint64_t stream = 0);

/// Bilinear resize with pixel-center alignment.
Image resize_bilinear(const Image &image, int height, int width);
Image gaussian_blur(const Image &image, double sigma);
/// Baseline-JPEG-equivalent round trip: YCbCr, 4:2:0, 8x8 DCT, scaled standard tables.
Image jpeg_like(const Image &image, int quality);

struct ModelDistortions {
    double noise       = 0.05; ///< std of the additive parameter noise
    double prune       = 0.2;  ///< fraction of Gaussians removed
    double clone       = 0.2;  ///< fraction of Gaussians duplicated
    std::uint64_t seed = 1;
};

/// (name, scene) for none, noise, prune and clone.
std::vector<std::pair<std::string, GaussianScene>> apply_model_distortions(const GaussianScene &scene,
                                                                           const ModelDistortions &model);

/// Mean bit accuracy over views of decoded renders.
double mean_bit_accuracy(const GaussianScene &scene, const std::vector<CameraView> &views, const WatermarkKey &key,
                         const Message &message);

/// One row per scene. Columns: scene,none,model_noise,model_prune,model_clone, then one
/// column per image distortion named by its kind.
CsvTable wm_robustness_harness(const std::vector<std::pair<std::string, GaussianScene>> &scenes,
                               const WatermarkKey &key, const Message &message, const std::vector<CameraView> &views,
                               const std::vector<DistortionSpec> &specs, const ModelDistortions &model);

struct AttackSetup {
    EditConfig edit;
    EditorConfig editor;
    std::string prompt_src = "a photo of the scene";
    EmbedderPair embedders;
};

/// One row per (scene, model distortion). Columns:
/// scene,distortion,d_clip,d_clipT,d_clipD,clip,clipT,clipD (method values in the last three).
/// `original` is edited once and serves as the comparison branch for every row.
CsvTable adv_robustness_harness(const GaussianScene &original,
                                const std::vector<std::pair<std::string, GaussianScene>> &scenes,
                                const std::vector<CameraView> &views, const AttackSetup &attack,
                                const ModelDistortions &model);

/// One row per scene. Columns: scene,before,after,drop, accuracies in percent and
/// drop = before - after.
CsvTable wm_after_edit_harness(const std::vector<std::pair<std::string, GaussianScene>> &scenes,
                               const WatermarkKey &key, const Message &message, const std::vector<CameraView> &views,
                               const EditConfig &edit, const EditorConfig &editor);

} // namespace splatguard
