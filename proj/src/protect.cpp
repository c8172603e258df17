// Copyright Contributors to the splatguard project
// SPDX-License-Identifier: Apache-2.0
//
#include "splatguard/protect.hpp"

#include "adam.hpp"

#include "splatguard/error.hpp"
#include "splatguard/metrics.hpp"
#include "splatguard/random.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

namespace splatguard {

void validate_protect_config(const ProtectConfig &c) {
    for (double v : {c.lambda_adv, c.lambda_msg, c.lambda_quality, c.lambda_lat, c.lambda_traj, c.lambda_xattn,
                     c.feature_weight})
        require(v >= 0.0 && std::isfinite(v), ErrorCode::Config, "protect weights must be finite and >= 0");
    require(group_value(c.rho, ParamGroup::Position) == 0.0, ErrorCode::Config,
            "the role coefficient of positions must be 0");
    require(!c.enabled[static_cast<int>(ParamGroup::Position)], ErrorCode::Config, "positions cannot be optimized");
    for (int k = 0; k < kParamGroupCount; ++k) {
        require(c.rho[k] >= 0.0, ErrorCode::Config, "role coefficients must be >= 0");
        require(c.learning_rate[k] >= 0.0, ErrorCode::Config, "learning rates must be >= 0");
    }
    require(c.epochs >= 1, ErrorCode::Config, "protect.epochs must be at least 1");
    require(c.views_per_iter >= 1, ErrorCode::Config, "protect.views_per_iter must be at least 1");
    require(c.beta1 >= 0.0 && c.beta1 < 1.0 && c.beta2 >= 0.0 && c.beta2 < 1.0, ErrorCode::Config,
            "Adam betas must lie in [0, 1)");
    require(c.adam_eps > 0.0, ErrorCode::Config, "protect.adam_eps must be positive");
}

namespace {

struct WmTerms {
    double msg = 0.0, quality = 0.0, value = 0.0;
    Image cotangent;
};

WmTerms wm_terms(const Image &img, const Image &ref, const WatermarkKey &key, const Message &message,
                 const ProtectConfig &cfg, const SurrogateEditor &editor) {
    WmTerms t;
    const auto msg = message_loss(img, key, message);
    const auto q   = quality_loss(img, ref, editor, cfg.feature_weight);
    t.msg          = msg.value;
    t.quality      = q.value;
    t.value        = cfg.lambda_msg * msg.value + cfg.lambda_quality * q.value;
    t.cotangent    = Image(img.height(), img.width(), 3);
    for (std::size_t i = 0; i < img.size(); ++i)
        t.cotangent.data()[i] = cfg.lambda_msg * msg.cotangent.data()[i] + cfg.lambda_quality * q.cotangent.data()[i];
    return t;
}

struct AdvTerms {
    double l1 = 0.0, lat = 0.0, traj = 0.0, xattn = 0.0, value = 0.0;
    Image cotangent;
};

AdvTerms adv_terms(const Image &img, const Image &ref, const EditCondition &cond, const ProtectConfig &cfg,
                   const SurrogateEditor &editor) {
    require_same_shape(img, ref, "adv_loss");
    AdvTerms t;
    t.cotangent      = Image(img.height(), img.width(), 3);
    const double inv = 1.0 / static_cast<double>(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) {
        const double d = img.data()[i] - ref.data()[i];
        t.l1 += std::abs(d);
        t.cotangent.data()[i] = d > 0.0 ? inv : (d < 0.0 ? -inv : 0.0);
    }
    t.l1 *= inv;
    t.value = t.l1;
    auto subtract = [&](double weight, const Diversion &d, double &slot) {
        slot = d.value;
        t.value -= weight * d.value;
        for (std::size_t i = 0; i < img.size(); ++i) t.cotangent.data()[i] -= weight * d.cotangent.data()[i];
    };
    if (cfg.lambda_lat > 0.0) subtract(cfg.lambda_lat, latent_separation(img, ref, editor), t.lat);
    if (cfg.lambda_traj > 0.0) subtract(cfg.lambda_traj, trajectory_diversion(img, ref, cond, editor), t.traj);
    if (cfg.lambda_xattn > 0.0) subtract(cfg.lambda_xattn, attention_diversion(img, ref, cond, editor), t.xattn);
    return t;
}

void check_references(const std::vector<Image> &refs, const std::vector<CameraView> &views) {
    require(refs.size() == views.size(), ErrorCode::InvalidArgument,
            "missing reference render: " + std::to_string(views.size()) + " views but " +
                std::to_string(refs.size()) + " references");
    for (std::size_t v = 0; v < views.size(); ++v)
        require(refs[v].height() == views[v].height && refs[v].width() == views[v].width && refs[v].channels() == 3,
                ErrorCode::ShapeMismatch, "reference render for view '" + views[v].view_id + "' has the wrong size");
}

} // namespace

LossBundle wm_loss(const GaussianScene &scene, const std::vector<Image> &reference_renders, const WatermarkKey &key,
                   const Message &message, const std::vector<CameraView> &views, const ProtectConfig &config,
                   const SurrogateEditor &editor) {
    require(!views.empty(), ErrorCode::InvalidArgument, "wm_loss needs at least one view");
    check_references(reference_renders, views);
    LossBundle out{0.0, GradientBundle(scene.size())};
    const double inv = 1.0 / static_cast<double>(views.size());
    for (std::size_t v = 0; v < views.size(); ++v) {
        const Image img = render(scene, views[v]).image;
        const auto t    = wm_terms(img, reference_renders[v], key, message, config, editor);
        out.value += inv * t.value;
        out.grad.add_scaled(render_vjp(scene, views[v], t.cotangent), inv);
    }
    return out;
}

LossBundle adv_loss(const GaussianScene &scene, const std::vector<Image> &reference_renders,
                    const std::vector<EditCondition> &conds, const std::vector<CameraView> &views,
                    const ProtectConfig &config, const SurrogateEditor &editor) {
    require(!views.empty(), ErrorCode::InvalidArgument, "adv_loss needs at least one view");
    require(conds.size() == views.size(), ErrorCode::InvalidArgument, "adv_loss needs one condition per view");
    check_references(reference_renders, views);
    LossBundle out{0.0, GradientBundle(scene.size())};
    const double inv = 1.0 / static_cast<double>(views.size());
    for (std::size_t v = 0; v < views.size(); ++v) {
        const Image img = render(scene, views[v]).image;
        const auto t    = adv_terms(img, reference_renders[v], conds[v], config, editor);
        out.value += inv * t.value;
        out.grad.add_scaled(render_vjp(scene, views[v], t.cotangent), inv);
    }
    return out;
}

GradientBundle modulate(const GradientBundle &adv, const SoftMask &mask, const GroupValues &rho, double lambda_adv,
                        const GradientBundle &wm) {
    require(adv.size() == wm.size() && mask.size() == wm.size(), ErrorCode::ShapeMismatch,
            "modulate: bundle and mask sizes differ");
    GradientBundle out = wm;
    for (std::size_t i = 0; i < wm.size(); ++i)
        for (int k = 0; k < kParamGroupCount; ++k) {
            const double scale = lambda_adv * mask.m[i] * rho[k];
            for (int j = kGroupOffset[k]; j < kGroupOffset[k] + kGroupSize[k]; ++j) out[i][j] += scale * adv[i][j];
        }
    return out;
}

CsvTable ProtectReport::trace_csv() const {
    CsvTable t;
    t.header = {"iteration", "prompt_index", "wm_loss", "msg_loss", "quality_loss", "adv_loss",
                "render_l1", "s_lat",        "s_traj",  "s_xattn"};
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto &r = trace[i];
        t.rows.push_back({std::to_string(i), std::to_string(r.prompt_index), format_double(r.wm_loss),
                          format_double(r.msg_loss), format_double(r.quality_loss), format_double(r.adv_loss),
                          format_double(r.render_l1), format_double(r.s_lat), format_double(r.s_traj),
                          format_double(r.s_xattn)});
    }
    return t;
}

ProtectResult protect(const GaussianScene &scene, const ProtectConfig &config, const WatermarkKey &key,
                      const Message &message, const SoftMask &mask, const SurrogateEditor &editor,
                      const std::vector<std::string> &prompts, const std::vector<CameraView> &train_views,
                      const std::vector<CameraView> &eval_views) {
    const auto started = std::chrono::steady_clock::now();
    validate_protect_config(config);
    validate_scene(scene);
    require(!train_views.empty(), ErrorCode::InvalidArgument, "protect needs at least one training view");
    require(mask.size() == scene.size(), ErrorCode::ShapeMismatch, "mask size does not match the scene");
    require(!config.adversarial || !prompts.empty(), ErrorCode::InvalidArgument, "prompt library is empty");

    const GaussianScene reference = scene;
    ProtectResult result;
    result.scene                        = scene;
    ProtectReport &report               = result.report;
    report.reference_hash_before        = scene_hash(reference);
    report.editor_hash_before           = editor.weight_hash();

    std::vector<Image> refs;
    for (const auto &v : train_views) refs.push_back(render(reference, v).image);

    std::vector<PromptEmbedding> embeddings;
    if (config.adversarial)
        for (const auto &p : prompts) embeddings.push_back(editor.embed_prompt(p));

    // Independent streams so that switching the adversarial branch on or off never
    // changes which views are visited.
    Rng view_rng(derive_seed(config.seed, "protect-views"));
    Rng prompt_rng(derive_seed(config.seed, "protect-prompts"));
    Rng noise_rng(derive_seed(config.seed, "protect-noise"));

    const std::size_t n = scene.size();
    Adam adam(n, AdamSettings{config.learning_rate, config.enabled, config.beta1, config.beta2, config.adam_eps});
    const auto &ecfg = editor.config();

    std::vector<std::size_t> order(train_views.size());
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[view_rng.below(i)]);

        for (std::size_t start = 0; start < order.size(); start += config.views_per_iter) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.views_per_iter));
            const double inv      = 1.0 / static_cast<double>(end - start);
            IterationTrace tr;
            const PromptEmbedding *prompt = nullptr;
            if (config.adversarial) {
                tr.prompt_index = static_cast<int>(prompt_rng.below(embeddings.size()));
                prompt          = &embeddings[tr.prompt_index];
            }
            GradientBundle g_wm(n), g_adv(n);
            for (std::size_t b = start; b < end; ++b) {
                const CameraView &cam = train_views[order[b]];
                const Image &ref      = refs[order[b]];
                const Image img       = render(result.scene, cam).image;
                const auto wm         = wm_terms(img, ref, key, message, config, editor);
                tr.wm_loss += inv * wm.value;
                tr.msg_loss += inv * wm.msg;
                tr.quality_loss += inv * wm.quality;
                if (!config.adversarial) {
                    g_wm.add_scaled(render_vjp(result.scene, cam, wm.cotangent), inv);
                    continue;
                }
                EditCondition cond;
                cond.prompt = *prompt;
                cond.t      = ecfg.t_min + static_cast<int>(noise_rng.below(ecfg.t_max - ecfg.t_min + 1));
                cond.eps    = editor.sample_noise(img.height(), img.width(), noise_rng);
                const auto adv = adv_terms(img, ref, cond, config, editor);
                tr.adv_loss += inv * adv.value;
                tr.render_l1 += inv * adv.l1;
                tr.s_lat += inv * adv.lat;
                tr.s_traj += inv * adv.traj;
                tr.s_xattn += inv * adv.xattn;
                const Image *cots[] = {&wm.cotangent, &adv.cotangent};
                const auto bundles  = render_vjp_multi(result.scene, cam, cots);
                g_wm.add_scaled(bundles[0], inv);
                g_adv.add_scaled(bundles[1], inv);
            }
            require(std::isfinite(tr.wm_loss) && std::isfinite(tr.adv_loss), ErrorCode::Numeric,
                    "non-finite loss at iteration " + std::to_string(report.trace.size()));
            const GradientBundle g =
                config.adversarial ? modulate(g_adv, mask, config.rho, config.lambda_adv, g_wm) : g_wm;
            require(g.all_finite(), ErrorCode::Numeric,
                    "non-finite gradient at iteration " + std::to_string(report.trace.size()));

            adam.step(result.scene, g);
            report.trace.push_back(tr);
        }
    }

    if (!eval_views.empty()) {
        for (const auto &v : eval_views) {
            const Image img = render(result.scene, v).image;
            report.final_bit_accuracy += bit_accuracy(decode_bits(img, key), message);
            report.final_psnr += psnr(img, render(reference, v).image);
        }
        report.final_bit_accuracy /= static_cast<double>(eval_views.size());
        report.final_psnr /= static_cast<double>(eval_views.size());
    }
    report.reference_hash_after = scene_hash(reference);
    report.editor_hash_after    = editor.weight_hash();
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

std::vector<double> moving_average(const std::vector<double> &values, int window) {
    require(window >= 1, ErrorCode::InvalidArgument, "moving average window must be >= 1");
    std::vector<double> out(values.size());
    const double a = 2.0 / (window + 1.0);
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = i == 0 ? values[0] : a * values[i] + (1 - a) * out[i - 1];
    return out;
}

} // namespace splatguard
