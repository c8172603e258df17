// Copyright Contributors to the splatguard project
// SPDX-License-Identifier: Apache-2.0
//
#include "splatguard/editloop.hpp"

#include "adam.hpp"
#include "splatguard/error.hpp"
#include "splatguard/parallel.hpp"
#include "splatguard/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace splatguard {

EditVariant edit_variant_from_name(const std::string &name) {
    if (name == "dge_like") return EditVariant::DgeLike;
    if (name == "ge_like") return EditVariant::GeLike;
    fail(ErrorCode::Config, "unknown edit variant '" + name + "' (expected dge_like or ge_like)");
}

const char *edit_variant_name(EditVariant variant) {
    return variant == EditVariant::DgeLike ? "dge_like" : "ge_like";
}

void validate_edit_config(const EditConfig &c) {
    require(c.rounds >= 1, ErrorCode::Config, "edit.rounds must be at least 1");
    require(c.fit_steps >= 1, ErrorCode::Config, "edit.fit_steps must be at least 1");
    require(c.strength >= 0.0 && std::isfinite(c.strength), ErrorCode::Config, "edit.strength must be >= 0");
    require(!c.enabled[static_cast<int>(ParamGroup::Position)], ErrorCode::Config, "positions cannot be optimized");
    for (double lr : c.learning_rate)
        require(lr >= 0.0 && std::isfinite(lr), ErrorCode::Config, "edit learning rates must be >= 0");
}

EditorConfig attack_editor_config(const EditorConfig &base, const EditConfig &config) {
    EditorConfig out = base;
    out.seed = config.variant == EditVariant::DgeLike ? config.editor_seed
                                                      : derive_seed(config.editor_seed, "second-editor");
    return out;
}

EditResult run_edit(const GaussianScene &scene, const std::vector<CameraView> &views, const EditConfig &config,
                    const EditorConfig &base_editor) {
    validate_edit_config(config);
    validate_scene(scene);
    require(!views.empty(), ErrorCode::InvalidArgument, "run_edit needs at least one view");
    const SurrogateEditor editor(attack_editor_config(base_editor, config));
    const PromptEmbedding prompt = editor.embed_prompt(config.prompt);
    const auto &ecfg             = editor.config();

    EditResult result;
    result.scene = scene;
    Rng subset_rng(derive_seed(config.seed, "edit-views"));
    for (int round = 0; round < config.rounds; ++round) {
        std::vector<int> selected(views.size());
        std::iota(selected.begin(), selected.end(), 0);
        if (config.variant == EditVariant::GeLike && views.size() > 1) {
            for (std::size_t i = selected.size(); i > 1; --i)
                std::swap(selected[i - 1], selected[subset_rng.below(i)]);
            selected.resize(views.size() / 2);
            std::sort(selected.begin(), selected.end());
        }

        // Each view's timestep and noise come from its own stream, so the schedule of
        // parallel work cannot change them.
        std::vector<Image> targets(selected.size());
        parallel_for(selected.size(), [&](std::size_t s) {
            const int v = selected[s];
            Rng rng(derive_seed(config.seed, "edit-noise", static_cast<std::uint64_t>(round) * 1000003u + v));
            const Image img = render(result.scene, views[v]).image;
            EditCondition cond;
            cond.prompt = prompt;
            cond.t      = ecfg.t_min + static_cast<int>(rng.below(ecfg.t_max - ecfg.t_min + 1));
            cond.eps    = editor.sample_noise(img.height(), img.width(), rng);
            targets[s]  = editor.edit_image(img, cond, config.strength);
        });

        Adam adam(result.scene.size(), AdamSettings{config.learning_rate, config.enabled});
        double last = 0.0;
        for (int step = 0; step < config.fit_steps; ++step) {
            const std::size_t s   = static_cast<std::size_t>(step) % selected.size();
            const CameraView &cam = views[selected[s]];
            const Image img       = render(result.scene, cam).image;
            const Image &target   = targets[s];
            Image cot(img.height(), img.width(), 3);
            const double inv = 1.0 / static_cast<double>(img.size());
            double l1        = 0.0;
            for (std::size_t i = 0; i < img.size(); ++i) {
                const double d = img.data()[i] - target.data()[i];
                l1 += std::abs(d);
                cot.data()[i] = d > 0.0 ? inv : (d < 0.0 ? -inv : 0.0);
            }
            last = l1 * inv;
            require(std::isfinite(last), ErrorCode::Numeric,
                    "non-finite fit loss in edit round " + std::to_string(round) + " step " + std::to_string(step));
            adam.step(result.scene, render_vjp(result.scene, cam, cot));
        }
        result.fit_l1.push_back(last);
        result.targets.push_back(std::move(targets));
        result.edited.push_back(std::move(selected));
    }
    for (const auto &v : views) result.renders.push_back(render(result.scene, v).image);
    return result;
}

} // namespace splatguard
