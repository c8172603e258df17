// Copyright Contributors to the splatguard project
// SPDX-License-Identifier: Apache-2.0
//
#include "splatguard/config.hpp"

#include "splatguard/error.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace splatguard {

using nlohmann::json;

namespace {

// Reading and writing share one field list (visit_config below), so the two directions
// cannot drift apart.
class Reader {
public:
    Reader(const json &obj, std::string path) : obj_(obj), path_(std::move(path)) {
        require(obj.is_object(), ErrorCode::Config, "config section '" + label() + "' must be an object");
    }

    template <class T> void field(const char *key, T &out) {
        seen_.insert(key);
        if (!obj_.contains(key)) return;
        try {
            read(obj_.at(key), out);
        } catch (const json::exception &e) {
            fail(ErrorCode::Config, "config key '" + join(key) + "': " + e.what());
        } catch (const Error &e) {
            fail(ErrorCode::Config, "config key '" + join(key) + "': " + e.what());
        }
    }

    template <class F> void section(const char *key, F &&fn) {
        seen_.insert(key);
        if (!obj_.contains(key)) return;
        Reader sub(obj_.at(key), join(key));
        fn(sub);
        sub.finish();
    }

    void finish() const {
        for (const auto &item : obj_.items())
            require(seen_.count(item.key()) > 0, ErrorCode::Config, "unknown config key '" + join(item.key()) + "'");
    }

private:
    std::string label() const { return path_.empty() ? "<root>" : path_; }
    std::string join(const std::string &key) const { return path_.empty() ? key : path_ + "." + key; }

    template <class T> static void read(const json &j, T &out) { out = j.get<T>(); }
    static void read(const json &j, MaskMode &out) { out = mask_mode_from_name(j.get<std::string>()); }
    static void read(const json &j, EditVariant &out) { out = edit_variant_from_name(j.get<std::string>()); }
    static void read(const json &j, GroupValues &out) {
        require(j.is_object(), ErrorCode::Config, "per-group values must be an object keyed by group name");
        for (const auto &item : j.items()) out[static_cast<int>(group_from_name(item.key()))] = item.value().get<double>();
    }
    static void read(const json &j, std::array<bool, kParamGroupCount> &out) {
        require(j.is_object(), ErrorCode::Config, "per-group flags must be an object keyed by group name");
        for (const auto &item : j.items()) out[static_cast<int>(group_from_name(item.key()))] = item.value().get<bool>();
    }
    static void read(const json &j, std::vector<DistortionSpec> &out) {
        out.clear();
        for (const auto &d : j) {
            require(d.is_object(), ErrorCode::Config, "distortion entries must be objects");
            DistortionSpec spec;
            for (const auto &item : d.items()) {
                if (item.key() == "kind") spec.kind = distortion_kind_from_name(item.value().get<std::string>());
                else if (item.key() == "parameter") spec.parameter = item.value().get<double>();
                else if (item.key() == "seed") spec.seed = item.value().get<std::uint64_t>();
                else fail(ErrorCode::Config, "unknown distortion key '" + item.key() + "'");
            }
            out.push_back(spec);
        }
    }

    const json &obj_;
    std::string path_;
    std::set<std::string> seen_;
};

class Writer {
public:
    json doc = json::object();

    template <class T> void field(const char *key, const T &value) { doc[key] = write(value); }

    template <class F> void section(const char *key, F &&fn) {
        Writer sub;
        fn(sub);
        doc[key] = std::move(sub.doc);
    }

private:
    template <class T> static json write(const T &v) { return v; }
    static json write(MaskMode m) { return mask_mode_name(m); }
    static json write(EditVariant v) { return edit_variant_name(v); }
    static json write(const GroupValues &g) {
        json j = json::object();
        for (auto grp : kAllGroups) j[group_name(grp)] = group_value(g, grp);
        return j;
    }
    static json write(const std::array<bool, kParamGroupCount> &g) {
        json j = json::object();
        for (auto grp : kAllGroups) j[group_name(grp)] = g[static_cast<int>(grp)];
        return j;
    }
    static json write(const std::vector<DistortionSpec> &specs) {
        json j = json::array();
        for (const auto &s : specs)
            j.push_back({{"kind", distortion_kind_name(s.kind)}, {"parameter", s.parameter}, {"seed", s.seed}});
        return j;
    }
};

template <class V, class C> void visit_config(V &v, C &c) {
    v.field("workers", c.workers);
    v.section("scene", [&](auto &s) {
        s.field("kind", c.scene.kind);
        s.field("count", c.scene.count);
        s.field("seed", c.scene.seed);
    });
    v.section("views", [&](auto &s) {
        s.field("width", c.views.width);
        s.field("height", c.views.height);
        s.field("train", c.views.train);
        s.field("eval", c.views.eval);
        s.field("eval_phase", c.views.eval_phase);
    });
    v.section("mask", [&](auto &s) {
        s.field("mode", c.mask.config.mode);
        s.field("tau", c.mask.config.tau);
        s.field("gamma", c.mask.config.gamma);
        s.field("threshold", c.mask.config.threshold);
        s.field("label", c.mask.label);
        s.field("views", c.mask.views);
    });
    v.section("watermark", [&](auto &s) {
        s.field("bits", c.watermark.bits);
        s.field("key_seed", c.watermark.key_seed);
        s.field("message_seed", c.watermark.message_seed);
        s.field("message", c.watermark.message);
    });
    v.section("editor", [&](auto &s) {
        s.field("seed", c.editor.seed);
        s.field("timesteps", c.editor.timesteps);
        s.field("t_min", c.editor.t_min);
        s.field("t_max", c.editor.t_max);
        s.field("traj_step", c.editor.traj_step);
        s.field("encoder_channels", c.editor.encoder_channels);
        s.field("latent_channels", c.editor.latent_channels);
        s.field("hidden_channels", c.editor.hidden_channels);
        s.field("query_dim", c.editor.query_dim);
        s.field("encoder_gain", c.editor.encoder_gain);
        s.field("decoder_gain", c.editor.decoder_gain);
    });
    v.section("protect", [&](auto &s) {
        auto &p = c.protect;
        s.field("adversarial", p.adversarial);
        s.field("lambda_adv", p.lambda_adv);
        s.field("lambda_msg", p.lambda_msg);
        s.field("lambda_quality", p.lambda_quality);
        s.field("lambda_lat", p.lambda_lat);
        s.field("lambda_traj", p.lambda_traj);
        s.field("lambda_xattn", p.lambda_xattn);
        s.field("feature_weight", p.feature_weight);
        s.field("rho", p.rho);
        s.field("learning_rate", p.learning_rate);
        s.field("enabled", p.enabled);
        s.field("epochs", p.epochs);
        s.field("views_per_iter", p.views_per_iter);
        s.field("beta1", p.beta1);
        s.field("beta2", p.beta2);
        s.field("adam_eps", p.adam_eps);
        s.field("seed", p.seed);
    });
    v.section("edit", [&](auto &s) {
        auto &e = c.edit;
        s.field("rounds", e.rounds);
        s.field("strength", e.strength);
        s.field("fit_steps", e.fit_steps);
        s.field("learning_rate", e.learning_rate);
        s.field("enabled", e.enabled);
        s.field("editor_seed", e.editor_seed);
        s.field("seed", e.seed);
        s.field("prompt", e.prompt);
        s.field("variant", e.variant);
    });
    v.section("prompts", [&](auto &s) {
        s.field("library", c.prompts.library);
        s.field("source", c.prompts.source);
    });
    v.section("metrics", [&](auto &s) {
        s.field("embed_seed", c.metrics.seed);
        s.field("bandwidth", c.metrics.bandwidth);
    });
    v.section("robustness", [&](auto &s) {
        s.field("distortions", c.robustness.distortions);
        s.section("model", [&](auto &m) {
            m.field("noise", c.robustness.model.noise);
            m.field("prune", c.robustness.model.prune);
            m.field("clone", c.robustness.model.clone);
            m.field("seed", c.robustness.model.seed);
        });
    });
}

} // namespace

void validate_run_config(const RunConfig &c) {
    require(c.workers >= 1, ErrorCode::Config, "workers must be at least 1");
    toy_kind_from_name(c.scene.kind);
    require(c.scene.count >= 1, ErrorCode::Config, "scene.count must be at least 1");
    require(c.views.width > 0 && c.views.height > 0 && c.views.width % 8 == 0 && c.views.height % 8 == 0,
            ErrorCode::Config, "view width and height must be positive multiples of 8");
    require(c.views.train >= 1 && c.views.eval >= 1, ErrorCode::Config, "view counts must be at least 1");
    require(c.mask.views >= 1, ErrorCode::Config, "mask.views must be at least 1");
    require(c.mask.config.tau > 0.0 && c.mask.config.gamma > 0.0, ErrorCode::Config, "mask tau and gamma must be > 0");
    require(c.mask.config.threshold > 0.0 && c.mask.config.threshold <= 1.0, ErrorCode::Config,
            "mask.threshold must lie in (0, 1]");
    require(c.watermark.bits >= 1, ErrorCode::Config, "watermark.bits must be at least 1");
    require(c.watermark.message.empty() || static_cast<int>(c.watermark.message.size()) == c.watermark.bits,
            ErrorCode::Config, "watermark.message length must equal watermark.bits");
    require(!c.prompts.library.empty(), ErrorCode::Config, "prompts.library must not be empty");
    require(c.metrics.bandwidth > 0.0, ErrorCode::Config, "metrics.bandwidth must be positive");
    validate_editor_config(c.editor);
    validate_protect_config(c.protect);
    validate_edit_config(c.edit);
    for (const auto &d : c.robustness.distortions) validate_distortion(d);
    const auto &m = c.robustness.model;
    require(m.noise >= 0.0 && m.prune >= 0.0 && m.prune < 1.0 && m.clone >= 0.0 && m.clone <= 1.0, ErrorCode::Config,
            "model distortion parameters out of range");
}

RunConfig parse_run_config(const std::string &json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception &e) {
        fail(ErrorCode::Config, std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig config;
    Reader reader(doc, "");
    visit_config(reader, config);
    reader.finish();
    try {
        validate_run_config(config);
    } catch (const Error &e) {
        fail(ErrorCode::Config, e.what());
    }
    return config;
}

RunConfig load_run_config(const std::filesystem::path &path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::Io, "cannot open config file '" + path.string() + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_run_config(text.str());
}

std::string run_config_to_json(const RunConfig &config) {
    Writer writer;
    visit_config(writer, config);
    return writer.doc.dump(2) + "\n";
}

std::vector<CameraView> train_views(const RunConfig &c) {
    return orbit_views(c.views.train, c.views.width, c.views.height, 0.0, "train");
}

std::vector<CameraView> eval_views(const RunConfig &c) {
    return orbit_views(c.views.eval, c.views.width, c.views.height, c.views.eval_phase, "eval");
}

Message run_message(const RunConfig &c) {
    if (!c.watermark.message.empty()) return Message::from_string(c.watermark.message);
    return Message::random(static_cast<std::size_t>(c.watermark.bits), c.watermark.message_seed);
}

WatermarkKey run_key(const RunConfig &c) {
    return make_watermark_key(c.watermark.key_seed, c.watermark.bits, c.views.height, c.views.width);
}

} // namespace splatguard
