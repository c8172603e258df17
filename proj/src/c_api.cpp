// Copyright Contributors to the splatguard project
// SPDX-License-Identifier: Apache-2.0
//
#include "splatguard.h"

#include "splatguard/config.hpp"
#include "splatguard/error.hpp"
#include "splatguard/parallel.hpp"

#include <json.hpp>

#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <new>

struct sg_config {
    splatguard::RunConfig value;
};

struct sg_scene {
    splatguard::GaussianScene value;
};

namespace {

using namespace splatguard;
namespace fs = std::filesystem;

thread_local std::string t_last_error;

template <class F> sg_status guarded(F &&fn) {
    try {
        fn();
        t_last_error.clear();
        return SG_OK;
    } catch (const Error &e) {
        t_last_error = e.what();
        return static_cast<sg_status>(static_cast<int>(e.code()));
    } catch (const fs::filesystem_error &e) {
        t_last_error = e.what();
        return SG_ERR_IO;
    } catch (const std::bad_alloc &) {
        t_last_error = "out of memory";
        return SG_ERR_INTERNAL;
    } catch (const std::exception &e) {
        t_last_error = e.what();
        return SG_ERR_INTERNAL;
    }
}

template <class T> void need(const T *p, const char *what) {
    require(p != nullptr, ErrorCode::InvalidArgument, std::string(what) + " must not be NULL");
}

void need_file(const char *path, const char *what) {
    need(path, what);
    require(fs::is_regular_file(path), ErrorCode::Io, std::string(what) + " '" + path + "' does not exist");
}

void ensure_parent(const fs::path &path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

void write_text(const fs::path &path, const std::string &text) {
    ensure_parent(path);
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorCode::Io, "cannot write '" + path.string() + "'");
    out << text;
    require(out.good(), ErrorCode::Io, "write failed for '" + path.string() + "'");
}

std::vector<Image> renders_of(const GaussianScene &scene, const std::vector<CameraView> &views) {
    std::vector<Image> out(views.size());
    parallel_for(views.size(), [&](std::size_t v) { out[v] = render(scene, views[v]).image; });
    return out;
}

WatermarkKey key_for(const RunConfig &c, const char *key_path) {
    if (key_path == nullptr) return run_key(c);
    need_file(key_path, "key file");
    return load_watermark_key(key_path);
}

std::vector<CameraView> mask_views(const RunConfig &c) {
    auto views = train_views(c);
    if (static_cast<int>(views.size()) > c.mask.views) views.resize(static_cast<std::size_t>(c.mask.views));
    return views;
}

GaussianScene scene_distortion(const GaussianScene &scene, const std::string &kind, double p, std::uint64_t seed) {
    if (kind == "noise") return distort_noise(scene, p, seed);
    if (kind == "prune") return distort_prune(scene, p, seed);
    if (kind == "clone") return distort_clone(scene, p, seed);
    fail(ErrorCode::InvalidArgument, "unknown scene distortion '" + kind + "' (noise, prune, clone)");
}

} // namespace

extern "C" {

const char *sg_last_error(void) { return t_last_error.c_str(); }

const char *sg_status_name(sg_status status) {
    switch (status) {
    case SG_OK: return "ok";
    case SG_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case SG_ERR_SHAPE_MISMATCH: return "shape_mismatch";
    case SG_ERR_IO: return "io";
    case SG_ERR_FORMAT: return "format";
    case SG_ERR_CONFIG: return "config";
    case SG_ERR_NUMERIC: return "numeric";
    case SG_ERR_EMPTY_SCENE: return "empty_scene";
    case SG_ERR_INVALID_ROTATION: return "invalid_rotation";
    case SG_ERR_VERSION_MISMATCH: return "version_mismatch";
    case SG_ERR_TRUNCATED: return "truncated";
    case SG_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

const char *sg_version(void) { return "0.1.0"; }

sg_status sg_set_workers(int workers) {
    return guarded([&] {
        require(workers >= 1, ErrorCode::InvalidArgument, "workers must be at least 1");
        set_worker_count(workers);
    });
}

sg_status sg_config_default(sg_config **out) {
    return guarded([&] {
        need(out, "out");
        *out = new sg_config{};
    });
}

sg_status sg_config_parse(const char *json_text, sg_config **out) {
    return guarded([&] {
        need(json_text, "json_text");
        need(out, "out");
        *out = new sg_config{parse_run_config(json_text)};
    });
}

sg_status sg_config_load(const char *path, sg_config **out) {
    return guarded([&] {
        need_file(path, "config file");
        need(out, "out");
        *out = new sg_config{load_run_config(path)};
    });
}

sg_status sg_config_to_json(const sg_config *config, char *buffer, size_t capacity, size_t *needed) {
    return guarded([&] {
        need(config, "config");
        const std::string text = run_config_to_json(config->value);
        if (needed) *needed = text.size() + 1;
        if (buffer == nullptr || capacity == 0) return;
        require(capacity > text.size(), ErrorCode::InvalidArgument, "buffer too small for the config document");
        std::memcpy(buffer, text.c_str(), text.size() + 1);
    });
}

sg_status sg_config_workers(const sg_config *config, int *workers) {
    return guarded([&] {
        need(config, "config");
        need(workers, "workers");
        *workers = config->value.workers;
    });
}

sg_status sg_config_load_prompts(sg_config *config, const char *path) {
    return guarded([&] {
        need(config, "config");
        need_file(path, "prompt file");
        std::ifstream in(path);
        std::vector<std::string> prompts;
        for (std::string line; std::getline(in, line);) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.find_first_not_of(" \t") != std::string::npos) prompts.push_back(line);
        }
        require(!prompts.empty(), ErrorCode::Config, std::string("prompt file '") + path + "' has no prompts");
        config->value.prompts.library = std::move(prompts);
    });
}

void sg_config_free(sg_config *config) { delete config; }

sg_status sg_scene_generate(const sg_config *config, sg_scene **out) {
    return guarded([&] {
        need(config, "config");
        need(out, "out");
        const auto &s = config->value.scene;
        *out          = new sg_scene{make_toy_scene(toy_kind_from_name(s.kind), s.count, s.seed)};
    });
}

sg_status sg_scene_load(const char *path, sg_scene **out) {
    return guarded([&] {
        need_file(path, "scene file");
        need(out, "out");
        *out = new sg_scene{scene_load(path)};
    });
}

sg_status sg_scene_save(const sg_scene *scene, const char *path) {
    return guarded([&] {
        need(scene, "scene");
        need(path, "path");
        ensure_parent(path);
        scene_save(scene->value, path);
    });
}

sg_status sg_scene_size(const sg_scene *scene, size_t *count) {
    return guarded([&] {
        need(scene, "scene");
        need(count, "count");
        *count = scene->value.size();
    });
}

sg_status sg_scene_hash(const sg_scene *scene, uint64_t *hash) {
    return guarded([&] {
        need(scene, "scene");
        need(hash, "hash");
        *hash = scene_hash(scene->value);
    });
}

sg_status sg_scene_distort(const sg_scene *scene, const char *kind, double parameter, uint64_t seed, sg_scene **out) {
    return guarded([&] {
        need(scene, "scene");
        need(kind, "kind");
        need(out, "out");
        *out = new sg_scene{scene_distortion(scene->value, kind, parameter, seed)};
    });
}

void sg_scene_free(sg_scene *scene) { delete scene; }

sg_status sg_mask_build(const sg_config *config, const sg_scene *scene, const char *mask_dir, const char *out_csv) {
    return guarded([&] {
        need(config, "config");
        need(scene, "scene");
        need(out_csv, "out_csv");
        const auto &c    = config->value;
        const auto views = mask_views(c);
        std::vector<Image> masks;
        if (mask_dir != nullptr) {
            require(fs::is_directory(mask_dir), ErrorCode::Io, std::string("mask directory '") + mask_dir + "' does not exist");
            masks = load_view_masks(mask_dir, views);
        } else {
            masks.resize(views.size());
            parallel_for(views.size(), [&](std::size_t v) { masks[v] = procedural_mask(scene->value, views[v], c.mask.label); });
        }
        const SoftMask mask = build_soft_mask(scene->value, views, masks, c.mask.config);
        ensure_parent(out_csv);
        write_csv(soft_mask_to_csv(mask), out_csv);
    });
}

sg_status sg_saliency(const sg_config *config, const sg_scene *scene, const char *out_csv) {
    return guarded([&] {
        need(config, "config");
        need(scene, "scene");
        need(out_csv, "out_csv");
        const auto &c    = config->value;
        const auto views = mask_views(c);
        const SurrogateEditor editor(attack_editor_config(c.editor, c.edit));
        const auto prompt = editor.embed_prompt(c.edit.prompt);
        const int t       = (c.editor.t_min + c.editor.t_max) / 2;
        std::vector<GradientBundle> per_view(views.size());
        parallel_for(views.size(), [&](std::size_t v) {
            Rng rng(derive_seed(c.edit.seed, "saliency-noise", v));
            const Image img = render(scene->value, views[v]).image;
            const Image target =
                editor.edit_image(img, EditCondition{prompt, t, editor.sample_noise(img.height(), img.width(), rng)},
                                  c.edit.strength);
            Image cot(img.height(), img.width(), 3);
            const double inv = 1.0 / static_cast<double>(img.size());
            for (std::size_t i = 0; i < img.size(); ++i) {
                const double d = img.data()[i] - target.data()[i];
                cot.data()[i]  = d > 0.0 ? inv : (d < 0.0 ? -inv : 0.0);
            }
            per_view[v] = render_vjp(scene->value, views[v], cot);
        });
        GradientBundle total(scene->value.size());
        for (const auto &g : per_view)
            for (std::size_t i = 0; i < total.size(); ++i)
                for (int j = 0; j < kParamCount; ++j) total[i][j] += g[i][j];
        ensure_parent(out_csv);
        write_csv(saliency_csv(total, scene->value), out_csv);
    });
}

sg_status sg_protect(const sg_config *config, const sg_scene *scene, const char *mask_csv, const char *key_out,
                     const char *trace_csv_out, const char *summary_json_out, sg_scene **out,
                     sg_protect_summary *summary) {
    return guarded([&] {
        need(config, "config");
        need(scene, "scene");
        need(out, "out");
        const auto &c = config->value;
        SoftMask mask = uniform_mask(scene->value.size());
        if (mask_csv != nullptr) {
            need_file(mask_csv, "mask CSV");
            mask = soft_mask_from_csv(read_csv(mask_csv));
            require(mask.size() == scene->value.size(), ErrorCode::ShapeMismatch,
                    "mask has " + std::to_string(mask.size()) + " entries but the scene has " +
                        std::to_string(scene->value.size()) + " Gaussians");
        }
        const SurrogateEditor editor(c.editor);
        const WatermarkKey key = run_key(c);
        const Message message  = run_message(c);
        auto result = protect(scene->value, c.protect, key, message, mask, editor, c.prompts.library, train_views(c),
                              eval_views(c));
        const auto &r = result.report;
        if (key_out) {
            ensure_parent(key_out);
            save_watermark_key(key, key_out);
        }
        if (trace_csv_out) {
            ensure_parent(trace_csv_out);
            write_csv(r.trace_csv(), trace_csv_out);
        }
        if (summary_json_out) {
            // wall time is left out so the file is reproducible
            nlohmann::ordered_json j;
            j["iterations"]            = r.trace.size();
            j["bit_accuracy"]          = r.final_bit_accuracy;
            j["psnr"]                  = r.final_psnr;
            j["message"]               = message.to_string();
            j["scene_hash"]            = scene_hash(result.scene);
            j["reference_hash_before"] = r.reference_hash_before;
            j["reference_hash_after"]  = r.reference_hash_after;
            j["editor_hash_before"]    = r.editor_hash_before;
            j["editor_hash_after"]     = r.editor_hash_after;
            write_text(summary_json_out, j.dump(2) + "\n");
        }
        if (summary) {
            summary->bit_accuracy = r.final_bit_accuracy;
            summary->psnr         = r.final_psnr;
            summary->iterations   = static_cast<int>(r.trace.size());
            summary->wall_seconds = r.wall_seconds;
        }
        *out = new sg_scene{std::move(result.scene)};
    });
}

sg_status sg_render(const sg_config *config, const sg_scene *scene, const char *set, const char *out_dir) {
    return guarded([&] {
        need(config, "config");
        need(scene, "scene");
        need(set, "set");
        need(out_dir, "out_dir");
        const std::string which = set;
        require(which == "train" || which == "eval", ErrorCode::InvalidArgument, "view set must be 'train' or 'eval'");
        const auto views = which == "train" ? train_views(config->value) : eval_views(config->value);
        fs::create_directories(out_dir);
        const auto images = renders_of(scene->value, views);
        for (std::size_t v = 0; v < views.size(); ++v)
            write_ppm(images[v], fs::path(out_dir) / (views[v].view_id + ".ppm"));
    });
}

sg_status sg_decode(const sg_config *config, const sg_scene *scene, const char *const *ppm_paths, size_t ppm_count,
                    const char *key_path, const char *out_csv, double *mean_accuracy) {
    return guarded([&] {
        need(config, "config");
        const auto &c = config->value;
        std::vector<std::string> names;
        std::vector<Image> images;
        if (scene != nullptr) {
            const auto views = eval_views(c);
            images           = renders_of(scene->value, views);
            for (const auto &v : views) names.push_back(v.view_id);
        } else {
            require(ppm_paths != nullptr && ppm_count > 0, ErrorCode::InvalidArgument,
                    "decode needs a scene or at least one PPM image");
            for (size_t i = 0; i < ppm_count; ++i) {
                need_file(ppm_paths[i], "image");
                images.push_back(read_ppm(ppm_paths[i]));
                names.push_back(fs::path(ppm_paths[i]).stem().string());
            }
        }
        const WatermarkKey key = key_for(c, key_path);
        const Message message  = run_message(c);
        require(static_cast<int>(message.size()) == key.bits, ErrorCode::ShapeMismatch,
                "key carries " + std::to_string(key.bits) + " bits but the configured message has " +
                    std::to_string(message.size()));
        CsvTable t;
        t.header    = {"view", "decoded", "bit_acc"};
        double mean = 0.0;
        for (std::size_t i = 0; i < images.size(); ++i) {
            const Message decoded = decode_bits(images[i], key);
            const double acc      = bit_accuracy(decoded, message);
            mean += acc;
            t.rows.push_back({names[i], decoded.to_string(), format_double(acc)});
        }
        mean /= static_cast<double>(images.size());
        if (out_csv) {
            ensure_parent(out_csv);
            write_csv(t, out_csv);
        }
        if (mean_accuracy) *mean_accuracy = mean;
    });
}

sg_status sg_edit(const sg_config *config, const sg_scene *scene, const char *render_dir, sg_scene **out) {
    return guarded([&] {
        need(config, "config");
        need(scene, "scene");
        need(out, "out");
        const auto &c    = config->value;
        const auto views = eval_views(c);
        auto result      = run_edit(scene->value, views, c.edit, c.editor);
        if (render_dir) {
            const fs::path dir(render_dir);
            fs::create_directories(dir);
            for (std::size_t r = 0; r < result.targets.size(); ++r)
                for (std::size_t s = 0; s < result.targets[r].size(); ++s)
                    write_ppm(result.targets[r][s],
                              dir / ("round" + std::to_string(r) + "_" + views[result.edited[r][s]].view_id + ".ppm"));
            for (std::size_t v = 0; v < views.size(); ++v)
                write_ppm(result.renders[v], dir / ("final_" + views[v].view_id + ".ppm"));
        }
        *out = new sg_scene{std::move(result.scene)};
    });
}

sg_status sg_distort_image(const char *in_ppm, const char *kind, double parameter, uint64_t seed, uint64_t stream,
                           const char *out_ppm) {
    return guarded([&] {
        need_file(in_ppm, "input image");
        need(kind, "kind");
        need(out_ppm, "out_ppm");
        const DistortionSpec spec{distortion_kind_from_name(kind), parameter, seed};
        const Image out = distort_image(read_ppm(in_ppm), spec, stream);
        ensure_parent(out_ppm);
        write_ppm(out, out_ppm);
    });
}

sg_status sg_metrics(const sg_config *config, const sg_scene *original, const sg_scene *method,
                     const char *method_name, const char *key_path, const char *out_csv, int append) {
    return guarded([&] {
        need(config, "config");
        need(original, "original");
        need(method, "method");
        need(method_name, "method_name");
        need(out_csv, "out_csv");
        const auto &c = config->value;
        const auto views = eval_views(c);
        const SurrogateEditor editor(c.editor);

        SucpsRow row;
        row.method       = method_name;
        const auto src_o = renders_of(original->value, views);
        const auto src_m = renders_of(method->value, views);
        std::vector<double> p(views.size()), s(views.size()), l(views.size());
        parallel_for(views.size(), [&](std::size_t v) {
            p[v] = psnr(src_m[v], src_o[v]);
            s[v] = ssim(src_m[v], src_o[v]);
            l[v] = feat_lpips(src_m[v], src_o[v], editor);
        });
        const double inv = 1.0 / static_cast<double>(views.size());
        for (std::size_t v = 0; v < views.size(); ++v) {
            row.psnr += p[v] * inv;
            row.ssim += s[v] * inv;
            row.lpips += l[v] * inv;
        }
        if (key_path) {
            const WatermarkKey key = key_for(c, key_path);
            const Message message  = run_message(c);
            double acc             = 0.0;
            for (const auto &img : src_m) acc += bit_accuracy(decode_bits(img, key), message) * inv;
            row.bit_acc = acc;
        }
        const auto edited_o = run_edit(original->value, views, c.edit, c.editor).renders;
        const auto edited_m = run_edit(method->value, views, c.edit, c.editor).renders;
        const auto m = clip_metrics(edited_o, edited_m, src_o, src_m, c.prompts.source, c.edit.prompt,
                                    EmbedderPair(c.metrics.seed, c.metrics.bandwidth));
        row.d_clip   = m.clip.diff;
        row.d_clip_t = m.clip_t.diff;
        row.d_clip_d = m.clip_d.diff;

        std::vector<SucpsRow> rows;
        if (append != 0 && fs::is_regular_file(out_csv)) rows = sucps_rows_from_csv(read_csv(out_csv));
        rows.push_back(row);
        ensure_parent(out_csv);
        write_csv(sucps_rows_to_csv(rows), out_csv);
    });
}

sg_status sg_sucps(const char *metrics_csv, const char *reference_csv, const char *out_csv) {
    return guarded([&] {
        need_file(metrics_csv, "metrics CSV");
        need(out_csv, "out_csv");
        const auto rows = sucps_rows_from_csv(read_csv(metrics_csv));
        std::vector<SucpsScore> scores;
        if (reference_csv) {
            need_file(reference_csv, "reference CSV");
            scores = sucps_against(sucps_rows_from_csv(read_csv(reference_csv)), rows);
        } else {
            scores = sucps(rows);
        }
        ensure_parent(out_csv);
        write_csv(sucps_scores_to_csv(scores), out_csv);
    });
}

sg_status sg_report(const char *const *metric_csvs, size_t count, const char *out_csv) {
    return guarded([&] {
        require(metric_csvs != nullptr && count > 0, ErrorCode::InvalidArgument, "report needs at least one metric CSV");
        need(out_csv, "out_csv");
        std::vector<SucpsRow> rows;
        for (size_t i = 0; i < count; ++i) {
            need_file(metric_csvs[i], "metrics CSV");
            for (auto &r : sucps_rows_from_csv(read_csv(metric_csvs[i]))) rows.push_back(std::move(r));
        }
        const auto scores = sucps(rows);
        CsvTable t        = sucps_rows_to_csv(rows);
        t.header.push_back("sUCPS");
        for (std::size_t i = 0; i < rows.size(); ++i) t.rows[i].push_back(format_double(scores[i].sucps));
        ensure_parent(out_csv);
        write_csv(t, out_csv);
    });
}

sg_status sg_robustness(const sg_config *config, const sg_scene *original, const sg_scene *protected_scene,
                        const char *key_path, const char *out_dir) {
    return guarded([&] {
        need(config, "config");
        need(original, "original");
        need(protected_scene, "protected_scene");
        need(out_dir, "out_dir");
        const auto &c          = config->value;
        const auto views       = eval_views(c);
        const WatermarkKey key = key_for(c, key_path);
        const Message message  = run_message(c);
        const std::vector<std::pair<std::string, GaussianScene>> scenes{{"protected", protected_scene->value}};
        const fs::path dir(out_dir);
        fs::create_directories(dir);
        write_csv(wm_robustness_harness(scenes, key, message, views, c.robustness.distortions, c.robustness.model),
                  dir / "wm_robustness.csv");
        AttackSetup attack{c.edit, c.editor, c.prompts.source, EmbedderPair(c.metrics.seed, c.metrics.bandwidth)};
        write_csv(adv_robustness_harness(original->value, scenes, views, attack, c.robustness.model),
                  dir / "adv_robustness.csv");
        write_csv(wm_after_edit_harness(scenes, key, message, views, c.edit, c.editor), dir / "wm_after_edit.csv");
    });
}

} // extern "C"
