// Copyright Contributors to the splatguard project
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Talks to the library only through splatguard.h.
#include "splatguard.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kExitUsage    = 64;
constexpr int kExitInternal = 70;

struct Failure {
    sg_status status;
};

void check(sg_status s) {
    if (s != SG_OK) throw Failure{s};
}

struct ConfigDeleter {
    void operator()(sg_config *c) const { sg_config_free(c); }
};
struct SceneDeleter {
    void operator()(sg_scene *s) const { sg_scene_free(s); }
};
using ConfigPtr = std::unique_ptr<sg_config, ConfigDeleter>;
using ScenePtr  = std::unique_ptr<sg_scene, SceneDeleter>;

std::string config_json(const sg_config *c) {
    size_t needed = 0;
    check(sg_config_to_json(c, nullptr, 0, &needed));
    std::string text(needed, '\0');
    check(sg_config_to_json(c, text.data(), text.size(), &needed));
    text.resize(needed - 1);
    return text;
}

void flatten(const nlohmann::json &j, const std::string &prefix, std::string &out) {
    for (const auto &item : j.items()) {
        const std::string key = prefix.empty() ? item.key() : prefix + "." + item.key();
        const bool groups     = key.ends_with("learning_rate") || key.ends_with("enabled") || key.ends_with(".rho");
        if (item.value().is_object() && !groups) {
            flatten(item.value(), key, out);
        } else {
            out += "  " + key + " = " + item.value().dump() + "\n";
        }
    }
}

std::string help_footer() {
    std::string text = "\nConfig keys (JSON, dotted path = default; unknown keys are errors):\n";
    sg_config *raw   = nullptr;
    if (sg_config_default(&raw) == SG_OK) {
        ConfigPtr c(raw);
        flatten(nlohmann::json::parse(config_json(c.get())), "", text);
    }
    text += "\nExit codes:\n"
            "  0 success\n"
            "  1 invalid argument     2 shape mismatch     3 I/O or missing input\n"
            "  4 file format          5 config error       6 non-finite value\n"
            "  7 empty scene          8 invalid rotation   9 version mismatch\n"
            "  10 truncated file      64 usage error       70 internal error\n"
            "Errors print one line on stderr: error code=<name> message=<text>\n";
    return text;
}

ScenePtr load_scene(const std::string &path) {
    sg_scene *raw = nullptr;
    check(sg_scene_load(path.c_str(), &raw));
    return ScenePtr(raw);
}

const char *opt(const std::optional<std::string> &s) { return s ? s->c_str() : nullptr; }

std::vector<const char *> c_strings(const std::vector<std::string> &v) {
    std::vector<const char *> out;
    for (const auto &s : v) out.push_back(s.c_str());
    return out;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"splatguard: watermarking and edit deterrence for Gaussian splat scenes"};
    app.require_subcommand(1);
    app.footer(help_footer());

    std::optional<std::string> config_path, prompts_path;
    std::optional<int> workers;
    app.add_option("--config", config_path, "run config (JSON)");
    app.add_option("--workers", workers, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
    app.add_option("--prompts", prompts_path, "line-delimited edit prompt library");

    std::string scene_in, out, key_path, set = "eval", original, method, name, kind;
    std::optional<std::string> mask, mask_dir, key_opt, trace, summary, renders, image, scene_opt, reference,
        saliency;
    std::vector<std::string> inputs;
    double parameter   = 0.0;
    std::uint64_t seed = 1, stream = 0;
    bool append        = false;

    auto *c_config = app.add_subcommand("config", "print the effective config");

    auto *c_gen = app.add_subcommand("scene-gen", "generate the toy scene of scene.*");
    c_gen->add_option("--out", out, "scene file")->required();

    auto *c_mask = app.add_subcommand("mask-build", "soft selection mask CSV");
    c_mask->add_option("--scene", scene_in)->required();
    c_mask->add_option("--masks", mask_dir, "directory of <view_id>.pgm masks (default: procedural)");
    c_mask->add_option("--out", out, "mask CSV")->required();
    c_mask->add_option("--saliency", saliency, "also write per-Gaussian update saliency CSV");

    auto *c_protect = app.add_subcommand("protect", "embed the watermark and deterrence signal");
    c_protect->add_option("--scene", scene_in)->required();
    c_protect->add_option("--mask", mask, "mask CSV (default: all Gaussians)");
    c_protect->add_option("--out", out, "protected scene file")->required();
    c_protect->add_option("--key", key_opt, "watermark key output");
    c_protect->add_option("--trace", trace, "per-iteration trace CSV");
    c_protect->add_option("--summary", summary, "JSON summary");

    auto *c_render = app.add_subcommand("render", "render a view set to PPM");
    c_render->add_option("--scene", scene_in)->required();
    c_render->add_option("--set", set, "train or eval")->check(CLI::IsMember({"train", "eval"}));
    c_render->add_option("--out", out, "output directory")->required();

    auto *c_decode = app.add_subcommand("decode", "decode the message and report bit accuracy");
    c_decode->add_option("--scene", scene_opt, "decode the evaluation renders of a scene");
    c_decode->add_option("--images", inputs, "decode PPM files instead");
    c_decode->add_option("--key", key_opt, "watermark key (default: derived from the config)");
    c_decode->add_option("--out", trace, "per-view CSV");

    auto *c_edit = app.add_subcommand("edit", "run the render-edit-update attack");
    c_edit->add_option("--scene", scene_in)->required();
    c_edit->add_option("--out", out, "edited scene file")->required();
    c_edit->add_option("--renders", renders, "directory for per-round PPMs");

    auto *c_distort = app.add_subcommand("distort", "distort a PPM image or a scene");
    c_distort->add_option("--image", image, "input PPM");
    c_distort->add_option("--scene", scene_opt, "input scene");
    c_distort->add_option("--kind", kind, "noise|rotation|scaling|blur|crop|jpeg, or noise|prune|clone for scenes")
        ->required();
    c_distort->add_option("--param", parameter, "distortion parameter")->required();
    c_distort->add_option("--seed", seed);
    c_distort->add_option("--stream", stream, "per-view stream index (images)");
    c_distort->add_option("--out", out)->required();

    auto *c_metrics = app.add_subcommand("metrics", "one metric row for a method scene");
    c_metrics->add_option("--original", original)->required();
    c_metrics->add_option("--method", method)->required();
    c_metrics->add_option("--name", name, "method name")->required();
    c_metrics->add_option("--key", key_opt, "watermark key (omit for NA bit accuracy)");
    c_metrics->add_option("--out", out, "metrics CSV")->required();
    c_metrics->add_flag("--append", append, "add a row to an existing CSV");

    auto *c_sucps = app.add_subcommand("sucps", "score a metrics CSV");
    c_sucps->add_option("--in", scene_in, "metrics CSV")->required();
    c_sucps->add_option("--reference", reference, "score each row against this baseline pool");
    c_sucps->add_option("--out", out, "scores CSV")->required();

    auto *c_report = app.add_subcommand("report", "join metric CSVs and add sUCPS");
    c_report->add_option("--in", inputs, "metrics CSVs")->required();
    c_report->add_option("--out", out)->required();

    auto *c_robust = app.add_subcommand("robustness", "watermark and deterrence robustness tables");
    c_robust->add_option("--original", original)->required();
    c_robust->add_option("--protected", method)->required();
    c_robust->add_option("--key", key_opt);
    c_robust->add_option("--out", out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::fprintf(stderr, "error code=usage message=%s\n", e.what());
        return kExitUsage;
    }

    try {
        sg_config *raw = nullptr;
        check(config_path ? sg_config_load(config_path->c_str(), &raw) : sg_config_default(&raw));
        ConfigPtr cfg(raw);
        if (prompts_path) check(sg_config_load_prompts(cfg.get(), prompts_path->c_str()));
        int n = 1;
        check(sg_config_workers(cfg.get(), &n));
        check(sg_set_workers(workers.value_or(n)));
        const sg_config *c = cfg.get();

        if (*c_config) {
            std::fputs(config_json(c).c_str(), stdout);
        } else if (*c_gen) {
            sg_scene *s = nullptr;
            check(sg_scene_generate(c, &s));
            ScenePtr scene(s);
            check(sg_scene_save(scene.get(), out.c_str()));
        } else if (*c_mask) {
            auto scene = load_scene(scene_in);
            check(sg_mask_build(c, scene.get(), opt(mask_dir), out.c_str()));
            if (saliency) check(sg_saliency(c, scene.get(), saliency->c_str()));
        } else if (*c_protect) {
            auto scene    = load_scene(scene_in);
            sg_scene *p   = nullptr;
            sg_protect_summary sum{};
            check(sg_protect(c, scene.get(), opt(mask), opt(key_opt), opt(trace), opt(summary), &p, &sum));
            ScenePtr prot(p);
            check(sg_scene_save(prot.get(), out.c_str()));
            std::printf("bit_acc %.6f psnr %.4f iterations %d\n", sum.bit_accuracy, sum.psnr, sum.iterations);
            std::fprintf(stderr, "protect took %.1f s\n", sum.wall_seconds);
        } else if (*c_render) {
            auto scene = load_scene(scene_in);
            check(sg_render(c, scene.get(), set.c_str(), out.c_str()));
        } else if (*c_decode) {
            if (static_cast<bool>(scene_opt) == !inputs.empty()) {
                std::fprintf(stderr, "error code=usage message=decode needs exactly one of --scene or --images\n");
                return kExitUsage;
            }
            ScenePtr scene;
            if (scene_opt) scene = load_scene(*scene_opt);
            const auto paths = c_strings(inputs);
            double acc       = 0.0;
            check(sg_decode(c, scene.get(), paths.data(), paths.size(), opt(key_opt), opt(trace), &acc));
            std::printf("bit_acc %.6f\n", acc);
        } else if (*c_edit) {
            auto scene  = load_scene(scene_in);
            sg_scene *e = nullptr;
            check(sg_edit(c, scene.get(), opt(renders), &e));
            ScenePtr edited(e);
            check(sg_scene_save(edited.get(), out.c_str()));
        } else if (*c_distort) {
            if (static_cast<bool>(image) == static_cast<bool>(scene_opt)) {
                std::fprintf(stderr, "error code=usage message=distort needs exactly one of --image or --scene\n");
                return kExitUsage;
            }
            if (image) {
                check(sg_distort_image(image->c_str(), kind.c_str(), parameter, seed, stream, out.c_str()));
            } else {
                auto scene  = load_scene(*scene_opt);
                sg_scene *d = nullptr;
                check(sg_scene_distort(scene.get(), kind.c_str(), parameter, seed, &d));
                ScenePtr distorted(d);
                check(sg_scene_save(distorted.get(), out.c_str()));
            }
        } else if (*c_metrics) {
            auto a = load_scene(original);
            auto b = load_scene(method);
            check(sg_metrics(c, a.get(), b.get(), name.c_str(), opt(key_opt), out.c_str(), append ? 1 : 0));
        } else if (*c_sucps) {
            check(sg_sucps(scene_in.c_str(), opt(reference), out.c_str()));
        } else if (*c_report) {
            const auto paths = c_strings(inputs);
            check(sg_report(paths.data(), paths.size(), out.c_str()));
        } else if (*c_robust) {
            auto a = load_scene(original);
            auto b = load_scene(method);
            check(sg_robustness(c, a.get(), b.get(), opt(key_opt), out.c_str()));
        }
    } catch (const Failure &f) {
        std::string msg = sg_last_error();
        for (char &ch : msg)
            if (ch == '\n' || ch == '\r') ch = ' ';
        std::fprintf(stderr, "error code=%s message=%s\n", sg_status_name(f.status), msg.c_str());
        return f.status == SG_ERR_INTERNAL ? kExitInternal : static_cast<int>(f.status);
    }
    return 0;
}
