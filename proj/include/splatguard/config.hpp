// Copyright Contributors to the splatguard project
// SPDX-License-Identifier: Apache-2.0
//
// Run configuration: one JSON document with a namespace per module. Unknown keys are errors.
#pragma once

#include "splatguard/editloop.hpp"
#include "splatguard/metrics.hpp"
#include "splatguard/protect.hpp"
#include "splatguard/robustness.hpp"
#include "splatguard/selection.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace splatguard {

struct SceneSettings {
    std::string kind   = "object_on_plane";
    std::size_t count  = 2000;
    std::uint64_t seed = 1;
};

struct ViewSettings {
    int width         = 64;
    int height        = 64;
    int train         = 32;
    int eval          = 8;
    double eval_phase = 0.3; ///< azimuth offset of the held-out ring, in eval steps (off the training ring)
};

struct MaskSettings {
    MaskConfig config;
    std::string label = "object"; ///< procedural mask label when no mask directory is given
    int views         = 8;
};

struct WatermarkSettings {
    int bits                   = 32;
    std::uint64_t key_seed     = 1;
    std::uint64_t message_seed = 1;
    std::string message; ///< explicit bit string; empty draws one from message_seed
};

struct PromptSettings {
    std::vector<std::string> library{"turn it into a bronze statue", "make it look like winter",
                                     "give it a van gogh style", "make it glow in neon colors"};
    std::string source = "a photo of the scene";
};

struct EmbedderSettings {
    std::uint64_t seed = 7;
    double bandwidth   = 1.0;
};

struct RobustnessSettings {
    std::vector<DistortionSpec> distortions = default_image_distortions();
    ModelDistortions model;
};

struct RunConfig {
    int workers = 1;
    SceneSettings scene;
    ViewSettings views;
    MaskSettings mask;
    WatermarkSettings watermark;
    EditorConfig editor;
    ProtectConfig protect;
    EditConfig edit;
    PromptSettings prompts;
    EmbedderSettings metrics;
    RobustnessSettings robustness;
};

/// Missing keys keep their defaults. Throws Config on unknown keys, wrong types or invalid values.
RunConfig parse_run_config(const std::string &json_text);
RunConfig load_run_config(const std::filesystem::path &path);
/// Full document with every key, pretty-printed.
std::string run_config_to_json(const RunConfig &config);
void validate_run_config(const RunConfig &config);

/// Derived objects.
std::vector<CameraView> train_views(const RunConfig &config);
std::vector<CameraView> eval_views(const RunConfig &config);
Message run_message(const RunConfig &config);
WatermarkKey run_key(const RunConfig &config);

} // namespace splatguard
