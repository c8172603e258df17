// Copyright Contributors to the splatguard project
// SPDX-License-Identifier: Apache-2.0
//
// Render-edit-update attack: repeatedly edit rendered views with the surrogate editor
// and fit the scene to the edited images.
#pragma once

#include "splatguard/editor.hpp"
#include "splatguard/renderer.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace splatguard {

enum class EditVariant {
    DgeLike, ///< every view is edited each round
    GeLike,  ///< a random half of the views each round, with a second editor
};

EditVariant edit_variant_from_name(const std::string &name);
const char *edit_variant_name(EditVariant variant);

struct EditConfig {
    int rounds       = 3;
    double strength  = 1.0;
    int fit_steps    = 200; ///< per round, one view per step
    GroupValues learning_rate{0.0, 2e-3, 2e-3, 1e-2, 1e-2, 1e-2};
    std::array<bool, kParamGroupCount> enabled{false, true, true, true, true, true};
    std::uint64_t editor_seed = 1;
    std::uint64_t seed        = 1; ///< timestep, noise and view-subset draws
    std::string prompt        = "turn it into a bronze statue";
    EditVariant variant       = EditVariant::DgeLike;
};

void validate_edit_config(const EditConfig &config);

/// Editor used by the attack: `base` with the weight seed taken from the config.
/// ge_like derives a distinct seed so the two variants never share weights.
EditorConfig attack_editor_config(const EditorConfig &base, const EditConfig &config);

struct EditResult {
    GaussianScene scene;                     ///< fitted to the last round's edited views
    std::vector<Image> renders;              ///< final renders of the edited scene, one per view
    std::vector<std::vector<Image>> targets; ///< edited images per round (selected views only)
    std::vector<std::vector<int>> edited;    ///< view indices edited in each round
    std::vector<double> fit_l1;              ///< last fit loss of each round
};

/// The input scene is never modified.
EditResult run_edit(const GaussianScene &scene, const std::vector<CameraView> &views, const EditConfig &config,
                    const EditorConfig &base_editor);

} // namespace splatguard
