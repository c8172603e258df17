// Copyright Contributors to the splatguard project
// SPDX-License-Identifier: Apache-2.0
//
#include "splatguard/editor.hpp"

#include "nn.hpp"
#include "splatguard/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <numbers>
#include <sstream>

namespace splatguard {

struct SurrogateEditor::Weights {
    nn::Conv enc1, enc2;
    nn::PatchUp dec1, dec2;
    nn::Conv den1, den2;
    std::vector<double> time_proj;   // hidden x kTimeEmbedDim
    std::vector<double> prompt_proj; // hidden x kPromptDim
    std::vector<double> hidden_bias; // hidden
    std::vector<double> wq;          // query x hidden
    std::vector<double> wk;          // query x kPromptDim
    std::vector<double> wv;          // hidden x kPromptDim
};

namespace {

std::vector<double> normal_vector(Rng &rng, std::size_t n, double scale) {
    std::vector<double> v(n);
    for (double &x : v) x = scale * rng.normal();
    return v;
}

nn::Conv make_conv(Rng &rng, int in, int out, int stride, bool bias, double gain) {
    nn::Conv c;
    c.in_ch  = in;
    c.out_ch = out;
    c.kernel = 3;
    c.stride = stride;
    c.pad    = 1;
    c.weight = normal_vector(rng, static_cast<std::size_t>(in) * out * 9, gain / std::sqrt(9.0 * in));
    if (bias) c.bias = normal_vector(rng, static_cast<std::size_t>(out), 0.1);
    return c;
}

nn::PatchUp make_patchup(Rng &rng, int in, int out, int factor, double gain) {
    nn::PatchUp p;
    p.in_ch  = in;
    p.out_ch = out;
    p.factor = factor;
    p.weight = normal_vector(rng, static_cast<std::size_t>(in) * out * factor * factor, gain / std::sqrt(1.0 * in));
    return p;
}

void hash_doubles(std::uint64_t &h, const std::vector<double> &v) {
    for (double d : v) {
        unsigned char bytes[8];
        std::memcpy(bytes, &d, 8);
        for (unsigned char b : bytes) {
            h ^= b;
            h *= 0x100000001b3ULL;
        }
    }
}

std::vector<double> time_embedding(int t) {
    std::vector<double> e(kTimeEmbedDim);
    const int half = kTimeEmbedDim / 2;
    for (int i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(10000.0) * i / half);
        e[i]        = std::sin(t * freq);
        e[i + half] = std::cos(t * freq);
    }
    return e;
}

// Intermediate values of one denoiser application, kept for the backward pass.
struct DenoiseTrace {
    Image hidden;              // tanh output, N tokens x hidden
    std::vector<double> attn;  // N x kPromptTokens
    std::vector<double> keys;  // kPromptTokens x query
    std::vector<double> vals;  // kPromptTokens x hidden
    Image mixed;               // hidden + attention output
    Image out;
};

} // namespace

void validate_editor_config(const EditorConfig &c) {
    require(c.timesteps >= 2, ErrorCode::Config, "editor.timesteps must be at least 2");
    require(c.t_min >= 1 && c.t_min <= c.t_max && c.t_max <= c.timesteps, ErrorCode::Config,
            "editor timestep range must satisfy 1 <= t_min <= t_max <= timesteps");
    require(c.traj_step >= 1 && c.t_min - c.traj_step >= 1, ErrorCode::Config,
            "editor.traj_step must be positive and smaller than t_min");
    require(c.encoder_channels > 0 && c.latent_channels > 0 && c.hidden_channels > 0 && c.query_dim > 0,
            ErrorCode::Config, "editor channel widths must be positive");
    require(c.encoder_gain > 0 && c.decoder_gain > 0, ErrorCode::Config, "editor gains must be positive");
}

ScheduleCoeffs cosine_schedule(int t, int timesteps) {
    require(t >= 1 && t <= timesteps, ErrorCode::InvalidArgument,
            "timestep " + std::to_string(t) + " outside 1.." + std::to_string(timesteps));
    constexpr double s = 0.008;
    auto f             = [&](double tt) {
        const double c = std::cos((tt / timesteps + s) / (1.0 + s) * std::numbers::pi / 2.0);
        return c * c;
    };
    const double alpha_bar = std::clamp(f(t) / f(0.0), 0.0, 1.0);
    return {std::sqrt(alpha_bar), std::sqrt(1.0 - alpha_bar)};
}

Image noisy_latent(const Image &z, const ScheduleCoeffs &coeffs, const Image &eps) {
    require_same_shape(z, eps, "noisy_latent");
    Image out(z.height(), z.width(), z.channels());
    for (std::size_t i = 0; i < z.size(); ++i) out.data()[i] = coeffs.alpha * z.data()[i] + coeffs.sigma * eps.data()[i];
    return out;
}

SurrogateEditor::SurrogateEditor(const EditorConfig &config) : config_(config) {
    validate_editor_config(config);
    Rng rng(derive_seed(config.seed, "editor-weights"));
    auto w        = std::make_shared<Weights>();
    const int ce  = config.encoder_channels;
    const int cl  = config.latent_channels;
    const int hid = config.hidden_channels;
    const int q   = config.query_dim;
    w->enc1       = make_conv(rng, 3, ce, 2, true, config.encoder_gain);
    w->enc2       = make_conv(rng, ce, cl, 2, true, 1.0);
    w->dec1       = make_patchup(rng, cl, ce, 2, 1.0);
    w->dec2       = make_patchup(rng, ce, 3, 4, config.decoder_gain);
    w->den1       = make_conv(rng, cl, hid, 1, false, 1.0);
    w->den2       = make_conv(rng, hid, cl, 1, true, 1.0);
    w->time_proj   = normal_vector(rng, static_cast<std::size_t>(hid) * kTimeEmbedDim, 1.0 / std::sqrt(1.0 * kTimeEmbedDim));
    w->prompt_proj = normal_vector(rng, static_cast<std::size_t>(hid) * kPromptDim, 1.0 / std::sqrt(1.0 * kPromptDim));
    w->hidden_bias = normal_vector(rng, static_cast<std::size_t>(hid), 0.1);
    w->wq          = normal_vector(rng, static_cast<std::size_t>(q) * hid, 1.0 / std::sqrt(1.0 * hid));
    w->wk          = normal_vector(rng, static_cast<std::size_t>(q) * kPromptDim, 1.0 / std::sqrt(1.0 * kPromptDim));
    w->wv          = normal_vector(rng, static_cast<std::size_t>(hid) * kPromptDim, 1.0 / std::sqrt(1.0 * kPromptDim));
    weights_       = std::move(w);
}

std::uint64_t SurrogateEditor::weight_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const Weights &w = *weights_;
    for (const auto *v : {&w.enc1.weight, &w.enc1.bias, &w.enc2.weight, &w.enc2.bias, &w.dec1.weight, &w.dec2.weight,
                          &w.den1.weight, &w.den2.weight, &w.den2.bias, &w.time_proj, &w.prompt_proj, &w.hidden_bias,
                          &w.wq, &w.wk, &w.wv})
        hash_doubles(h, *v);
    return h;
}

void SurrogateEditor::check_image(const Image &image) const {
    require(image.channels() == 3, ErrorCode::ShapeMismatch, "editor expects 3-channel images");
    require(image.height() % kLatentDownsample == 0 && image.width() % kLatentDownsample == 0,
            ErrorCode::ShapeMismatch, "editor image size must be a multiple of 8");
}

Image SurrogateEditor::encode(const Image &image) const {
    check_image(image);
    Image x(image.height(), image.width(), 3);
    for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = 2.0 * image.data()[i] - 1.0;
    Image a1 = nn::conv_forward(weights_->enc1, x);
    nn::tanh_inplace(a1);
    Image z = nn::conv_forward(weights_->enc2, nn::avgpool2_forward(a1));
    nn::tanh_inplace(z);
    return z;
}

Image SurrogateEditor::encode_vjp(const Image &image, const Image &dlatent) const {
    check_image(image);
    Image x(image.height(), image.width(), 3);
    for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = 2.0 * image.data()[i] - 1.0;
    Image a1 = nn::conv_forward(weights_->enc1, x);
    nn::tanh_inplace(a1);
    const Image pooled = nn::avgpool2_forward(a1);
    Image z            = nn::conv_forward(weights_->enc2, pooled);
    nn::tanh_inplace(z);
    require_same_shape(z, dlatent, "encode_vjp");

    const Image dpre2 = nn::tanh_vjp(z, dlatent);
    const Image dpool = nn::conv_vjp(weights_->enc2, dpre2, pooled.height(), pooled.width());
    const Image dpre1 = nn::tanh_vjp(a1, nn::avgpool2_vjp(dpool));
    Image dx          = nn::conv_vjp(weights_->enc1, dpre1, image.height(), image.width());
    for (double &v : dx.data()) v *= 2.0;
    return dx;
}

Image SurrogateEditor::decode(const Image &latent) const {
    require(latent.channels() == config_.latent_channels, ErrorCode::ShapeMismatch, "decode: latent channel mismatch");
    Image a = nn::patchup_forward(weights_->dec1, latent);
    nn::tanh_inplace(a);
    return nn::patchup_forward(weights_->dec2, a);
}

Image SurrogateEditor::decode_vjp(const Image &latent, const Image &dimage) const {
    require(latent.channels() == config_.latent_channels, ErrorCode::ShapeMismatch, "decode: latent channel mismatch");
    Image a = nn::patchup_forward(weights_->dec1, latent);
    nn::tanh_inplace(a);
    require(dimage.height() == a.height() * 4 && dimage.width() == a.width() * 4 && dimage.channels() == 3,
            ErrorCode::ShapeMismatch, "decode_vjp: gradient shape mismatch");
    return nn::patchup_vjp(weights_->dec1, nn::tanh_vjp(a, nn::patchup_vjp(weights_->dec2, dimage)));
}

ScheduleCoeffs SurrogateEditor::schedule(int t) const { return cosine_schedule(t, config_.timesteps); }

PromptEmbedding SurrogateEditor::embed_prompt(std::string_view text) const {
    PromptEmbedding p;
    p.text = std::string(text);
    std::vector<std::string> words;
    std::istringstream in(p.text);
    std::string word;
    while (in >> word && words.size() < static_cast<std::size_t>(kPromptTokens)) {
        for (char &ch : word) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        words.push_back(word);
    }
    while (words.size() < static_cast<std::size_t>(kPromptTokens)) words.emplace_back("<pad>");

    p.tokens.resize(static_cast<std::size_t>(kPromptTokens) * kPromptDim);
    p.pooled.assign(kPromptDim, 0.0);
    for (int j = 0; j < kPromptTokens; ++j) {
        Rng rng(derive_seed(config_.seed, "prompt-token", fnv1a(words[j])));
        for (int d = 0; d < kPromptDim; ++d) {
            const double v                 = rng.normal();
            p.tokens[j * kPromptDim + d] = v;
            p.pooled[d] += v / kPromptTokens;
        }
    }
    return p;
}

Image SurrogateEditor::sample_noise(int height, int width, Rng &rng) const {
    require(height % kLatentDownsample == 0 && width % kLatentDownsample == 0, ErrorCode::ShapeMismatch,
            "noise size must be a multiple of 8");
    Image eps(height / kLatentDownsample, width / kLatentDownsample, config_.latent_channels);
    for (double &v : eps.data()) v = rng.normal();
    return eps;
}

namespace {

DenoiseTrace denoise_forward(const SurrogateEditor::Weights &w, const EditorConfig &cfg, const Image &z_t, int t,
                             const PromptEmbedding &prompt) {
    require(z_t.channels() == cfg.latent_channels, ErrorCode::ShapeMismatch, "denoise: latent channel mismatch");
    require(prompt.tokens.size() == static_cast<std::size_t>(kPromptTokens) * kPromptDim, ErrorCode::InvalidArgument,
            "denoise: malformed prompt embedding");
    const int hid = cfg.hidden_channels, q = cfg.query_dim;
    DenoiseTrace tr;

    // Per-channel conditioning from timestep and pooled prompt.
    const auto emb = time_embedding(t);
    std::vector<double> cond(w.hidden_bias);
    for (int c = 0; c < hid; ++c) {
        for (int i = 0; i < kTimeEmbedDim; ++i) cond[c] += w.time_proj[c * kTimeEmbedDim + i] * emb[i];
        for (int i = 0; i < kPromptDim; ++i) cond[c] += w.prompt_proj[c * kPromptDim + i] * prompt.pooled[i];
    }
    tr.hidden = nn::conv_forward(w.den1, z_t);
    for (int y = 0; y < tr.hidden.height(); ++y)
        for (int x = 0; x < tr.hidden.width(); ++x)
            for (int c = 0; c < hid; ++c) tr.hidden.at(y, x, c) += cond[c];
    nn::tanh_inplace(tr.hidden);

    tr.keys.assign(static_cast<std::size_t>(kPromptTokens) * q, 0.0);
    tr.vals.assign(static_cast<std::size_t>(kPromptTokens) * hid, 0.0);
    for (int j = 0; j < kPromptTokens; ++j) {
        const double *e = prompt.tokens.data() + j * kPromptDim;
        for (int a = 0; a < q; ++a)
            for (int d = 0; d < kPromptDim; ++d) tr.keys[j * q + a] += w.wk[a * kPromptDim + d] * e[d];
        for (int c = 0; c < hid; ++c)
            for (int d = 0; d < kPromptDim; ++d) tr.vals[j * hid + c] += w.wv[c * kPromptDim + d] * e[d];
    }

    const int n_tok    = tr.hidden.height() * tr.hidden.width();
    const double scale = 1.0 / std::sqrt(static_cast<double>(q));
    tr.attn.assign(static_cast<std::size_t>(n_tok) * kPromptTokens, 0.0);
    tr.mixed = tr.hidden;
    std::vector<double> query(q);
    for (int n = 0; n < n_tok; ++n) {
        const double *h = tr.hidden.data().data() + static_cast<std::size_t>(n) * hid;
        for (int a = 0; a < q; ++a) {
            double acc = 0;
            for (int c = 0; c < hid; ++c) acc += w.wq[a * hid + c] * h[c];
            query[a] = acc;
        }
        double *att  = tr.attn.data() + static_cast<std::size_t>(n) * kPromptTokens;
        double max_s = -1e300;
        for (int j = 0; j < kPromptTokens; ++j) {
            double s = 0;
            for (int a = 0; a < q; ++a) s += query[a] * tr.keys[j * q + a];
            att[j] = s * scale;
            max_s  = std::max(max_s, att[j]);
        }
        double total = 0;
        for (int j = 0; j < kPromptTokens; ++j) {
            att[j] = std::exp(att[j] - max_s);
            total += att[j];
        }
        for (int j = 0; j < kPromptTokens; ++j) att[j] /= total;
        double *m = tr.mixed.data().data() + static_cast<std::size_t>(n) * hid;
        for (int j = 0; j < kPromptTokens; ++j)
            for (int c = 0; c < hid; ++c) m[c] += att[j] * tr.vals[j * hid + c];
    }
    tr.out = nn::conv_forward(w.den2, tr.mixed);
    return tr;
}

Image denoise_backward(const SurrogateEditor::Weights &w, const EditorConfig &cfg, const DenoiseTrace &tr,
                       const Image &dout) {
    require_same_shape(tr.out, dout, "denoise_vjp");
    const int hid = cfg.hidden_channels, q = cfg.query_dim;
    const Image dmixed = nn::conv_vjp(w.den2, dout, tr.mixed.height(), tr.mixed.width());
    Image dhidden      = dmixed;
    const int n_tok    = tr.hidden.height() * tr.hidden.width();
    const double scale = 1.0 / std::sqrt(static_cast<double>(q));
    std::vector<double> dquery(q);
    double datt[kPromptTokens];
    for (int n = 0; n < n_tok; ++n) {
        const double *dm  = dmixed.data().data() + static_cast<std::size_t>(n) * hid;
        const double *att = tr.attn.data() + static_cast<std::size_t>(n) * kPromptTokens;
        double weighted   = 0;
        for (int j = 0; j < kPromptTokens; ++j) {
            double acc = 0;
            for (int c = 0; c < hid; ++c) acc += dm[c] * tr.vals[j * hid + c];
            datt[j] = acc;
            weighted += att[j] * acc;
        }
        std::fill(dquery.begin(), dquery.end(), 0.0);
        for (int j = 0; j < kPromptTokens; ++j) {
            const double ds = att[j] * (datt[j] - weighted) * scale;
            for (int a = 0; a < q; ++a) dquery[a] += ds * tr.keys[j * q + a];
        }
        double *dh = dhidden.data().data() + static_cast<std::size_t>(n) * hid;
        for (int a = 0; a < q; ++a)
            for (int c = 0; c < hid; ++c) dh[c] += w.wq[a * hid + c] * dquery[a];
    }
    const Image dpre = nn::tanh_vjp(tr.hidden, dhidden);
    return nn::conv_vjp(w.den1, dpre, tr.hidden.height(), tr.hidden.width());
}

} // namespace

Image SurrogateEditor::denoise(const Image &z_t, int t, const PromptEmbedding &prompt) const {
    return denoise_forward(*weights_, config_, z_t, t, prompt).out;
}

Image SurrogateEditor::denoise_vjp(const Image &z_t, int t, const PromptEmbedding &prompt, const Image &dout) const {
    return denoise_backward(*weights_, config_, denoise_forward(*weights_, config_, z_t, t, prompt), dout);
}

Image SurrogateEditor::attention_input(const Image &z_t, int t, const PromptEmbedding &prompt) const {
    return denoise_forward(*weights_, config_, z_t, t, prompt).hidden;
}

std::vector<double> SurrogateEditor::traj_descriptor(const Image &image, const EditCondition &cond) const {
    notify(cond);
    require(cond.t - config_.traj_step >= 1, ErrorCode::InvalidArgument, "traj_descriptor: t - traj_step < 1");
    const auto coeffs = schedule(cond.t);
    const Image z_t   = noisy_latent(encode(image), coeffs, cond.eps);
    const Image d1    = denoise(z_t, cond.t, cond.prompt);
    Image z_next      = z_t;
    for (std::size_t i = 0; i < z_next.size(); ++i) z_next.data()[i] -= coeffs.sigma * d1.data()[i];
    const Image d2 = denoise(z_next, cond.t - config_.traj_step, cond.prompt);
    std::vector<double> out(d1.data().begin(), d1.data().end());
    out.insert(out.end(), d2.data().begin(), d2.data().end());
    return out;
}

Image SurrogateEditor::traj_descriptor_vjp(const Image &image, const EditCondition &cond,
                                           std::span<const double> dd) const {
    require(cond.t - config_.traj_step >= 1, ErrorCode::InvalidArgument, "traj_descriptor: t - traj_step < 1");
    const auto coeffs = schedule(cond.t);
    const Image z_t   = noisy_latent(encode(image), coeffs, cond.eps);
    const auto tr1    = denoise_forward(*weights_, config_, z_t, cond.t, cond.prompt);
    Image z_next      = z_t;
    for (std::size_t i = 0; i < z_next.size(); ++i) z_next.data()[i] -= coeffs.sigma * tr1.out.data()[i];
    const auto tr2 = denoise_forward(*weights_, config_, z_next, cond.t - config_.traj_step, cond.prompt);
    const std::size_t m = tr1.out.size();
    require(dd.size() == 2 * m, ErrorCode::ShapeMismatch, "traj_descriptor_vjp: gradient length mismatch");

    Image dd1(tr1.out.height(), tr1.out.width(), tr1.out.channels());
    Image dd2(dd1.height(), dd1.width(), dd1.channels());
    std::copy(dd.begin(), dd.begin() + static_cast<std::ptrdiff_t>(m), dd1.data().begin());
    std::copy(dd.begin() + static_cast<std::ptrdiff_t>(m), dd.end(), dd2.data().begin());

    const Image dz_next = denoise_backward(*weights_, config_, tr2, dd2);
    for (std::size_t i = 0; i < m; ++i) dd1.data()[i] -= coeffs.sigma * dz_next.data()[i];
    Image dz_t = denoise_backward(*weights_, config_, tr1, dd1);
    for (std::size_t i = 0; i < m; ++i) dz_t.data()[i] = coeffs.alpha * (dz_t.data()[i] + dz_next.data()[i]);
    return encode_vjp(image, dz_t);
}

std::vector<double> SurrogateEditor::xattn_descriptor(const Image &image, const EditCondition &cond) const {
    notify(cond);
    const Image z_t   = noisy_latent(encode(image), schedule(cond.t), cond.eps);
    const Image h     = attention_input(z_t, cond.t, cond.prompt);
    const int hid     = config_.hidden_channels, q = config_.query_dim;
    const int n_tok   = h.height() * h.width();
    std::vector<double> mean_h(hid, 0.0);
    for (int n = 0; n < n_tok; ++n)
        for (int c = 0; c < hid; ++c) mean_h[c] += h.data()[static_cast<std::size_t>(n) * hid + c];
    for (double &v : mean_h) v /= n_tok;
    std::vector<double> out(q, 0.0);
    for (int a = 0; a < q; ++a)
        for (int c = 0; c < hid; ++c) out[a] += weights_->wq[a * hid + c] * mean_h[c];
    return out;
}

Image SurrogateEditor::xattn_descriptor_vjp(const Image &image, const EditCondition &cond,
                                            std::span<const double> dd) const {
    const int hid = config_.hidden_channels, q = config_.query_dim;
    require(dd.size() == static_cast<std::size_t>(q), ErrorCode::ShapeMismatch,
            "xattn_descriptor_vjp: gradient length mismatch");
    const auto coeffs = schedule(cond.t);
    const Image z_t   = noisy_latent(encode(image), coeffs, cond.eps);
    const auto tr     = denoise_forward(*weights_, config_, z_t, cond.t, cond.prompt);
    const int n_tok   = tr.hidden.height() * tr.hidden.width();
    std::vector<double> dmean(hid, 0.0);
    for (int a = 0; a < q; ++a)
        for (int c = 0; c < hid; ++c) dmean[c] += weights_->wq[a * hid + c] * dd[a];
    Image dh(tr.hidden.height(), tr.hidden.width(), hid);
    for (int n = 0; n < n_tok; ++n)
        for (int c = 0; c < hid; ++c) dh.data()[static_cast<std::size_t>(n) * hid + c] = dmean[c] / n_tok;
    Image dz_t = nn::conv_vjp(weights_->den1, nn::tanh_vjp(tr.hidden, dh), z_t.height(), z_t.width());
    for (double &v : dz_t.data()) v *= coeffs.alpha;
    return encode_vjp(image, dz_t);
}

Image SurrogateEditor::edit_image(const Image &image, const EditCondition &cond, double strength) const {
    require(strength >= 0.0 && std::isfinite(strength), ErrorCode::InvalidArgument, "edit strength must be >= 0");
    const auto coeffs = schedule(cond.t);
    const Image z_t   = noisy_latent(encode(image), coeffs, cond.eps);
    Image delta       = denoise(z_t, cond.t, cond.prompt);
    for (double &v : delta.data()) v *= -strength * coeffs.sigma;
    const Image change = decode(delta);
    Image out          = image;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = std::clamp(out.data()[i] + change.data()[i], 0.0, 1.0);
    return out;
}

namespace {

Diversion squared_distance(std::span<const double> a, std::span<const double> b, double scale,
                           std::vector<double> &grad) {
    Diversion d;
    grad.resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        d.value += scale * diff * diff;
        grad[i] = 2.0 * scale * diff;
    }
    return d;
}

} // namespace

Diversion latent_separation(const Image &prot, const Image &ref, const SurrogateEditor &editor) {
    require_same_shape(prot, ref, "latent_separation");
    const Image zp = editor.encode(prot);
    const Image zr = editor.encode(ref);
    std::vector<double> grad;
    Diversion d = squared_distance(zp.data(), zr.data(), 1.0, grad);
    Image dz(zp.height(), zp.width(), zp.channels());
    std::copy(grad.begin(), grad.end(), dz.data().begin());
    d.cotangent = editor.encode_vjp(prot, dz);
    return d;
}

Diversion trajectory_diversion(const Image &prot, const Image &ref, const EditCondition &cond,
                               const SurrogateEditor &editor) {
    require_same_shape(prot, ref, "trajectory_diversion");
    const auto fp = editor.traj_descriptor(prot, cond);
    const auto fr = editor.traj_descriptor(ref, cond);
    std::vector<double> grad;
    Diversion d = squared_distance(fp, fr, 1.0, grad);
    d.cotangent = editor.traj_descriptor_vjp(prot, cond, grad);
    return d;
}

Diversion attention_diversion(const Image &prot, const Image &ref, const EditCondition &cond,
                              const SurrogateEditor &editor) {
    require_same_shape(prot, ref, "attention_diversion");
    const auto fp = editor.xattn_descriptor(prot, cond);
    const auto fr = editor.xattn_descriptor(ref, cond);
    std::vector<double> grad;
    Diversion d = squared_distance(fp, fr, 1.0 / editor.config().query_dim, grad);
    d.cotangent = editor.xattn_descriptor_vjp(prot, cond, grad);
    return d;
}

} // namespace splatguard
