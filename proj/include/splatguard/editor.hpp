// Copyright Contributors to the splatguard project
// SPDX-License-Identifier: Apache-2.0
//
// Frozen surrogate for a latent-diffusion image editor. Every weight is drawn from the
// seed at construction and never changes afterwards.
#pragma once

#include "splatguard/image.hpp"
#include "splatguard/random.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace splatguard {

struct EditorConfig {
    std::uint64_t seed   = 1;
    int timesteps        = 1000;
    int t_min            = 200; ///< timestep sampling range used by protection
    int t_max            = 800;
    int traj_step        = 100; ///< timestep gap between the two trajectory evaluations
    int encoder_channels = 8;
    int latent_channels  = 4;
    int hidden_channels  = 16;
    int query_dim        = 32;
    double encoder_gain  = 1.0; ///< multiplies the first encoder layer's weights
    double decoder_gain  = 1.0; ///< multiplies the last decoder layer's weights
};

void validate_editor_config(const EditorConfig &config);

inline constexpr int kPromptTokens   = 8;
inline constexpr int kPromptDim      = 64;
inline constexpr int kTimeEmbedDim   = 16;
inline constexpr int kLatentDownsample = 8;

struct PromptEmbedding {
    std::string text;
    std::vector<double> tokens; ///< kPromptTokens x kPromptDim, row-major
    std::vector<double> pooled; ///< mean over tokens
};

struct ScheduleCoeffs {
    double alpha = 1.0;
    double sigma = 0.0;
};

/// Cosine schedule: alpha_bar(t) = f(t) / f(0), f(t) = cos^2(((t / T) + 0.008) / 1.008 * pi / 2).
ScheduleCoeffs cosine_schedule(int t, int timesteps);

/// alpha * z + sigma * eps.
Image noisy_latent(const Image &z, const ScheduleCoeffs &coeffs, const Image &eps);

/// Prompt, timestep and noise shared by the protected and reference branches.
struct EditCondition {
    PromptEmbedding prompt;
    int t = 500;
    Image eps;
};

class SurrogateEditor {
public:
    explicit SurrogateEditor(const EditorConfig &config);

    const EditorConfig &config() const noexcept { return config_; }

    /// FNV-1a over every weight; constant for the lifetime of the editor.
    std::uint64_t weight_hash() const;

    /// Latent encoder: (H, W, 3) -> (H/8, W/8, latent_channels). H and W must be multiples of 8.
    Image encode(const Image &image) const;
    Image encode_vjp(const Image &image, const Image &dlatent) const;

    /// Latent decoder (no bias terms, so decode(0) = 0).
    Image decode(const Image &latent) const;
    Image decode_vjp(const Image &latent, const Image &dimage) const;

    ScheduleCoeffs schedule(int t) const;

    PromptEmbedding embed_prompt(std::string_view text) const;

    /// Standard-normal latent noise for an image of the given size.
    Image sample_noise(int height, int width, Rng &rng) const;

    /// Denoiser output for a noisy latent.
    Image denoise(const Image &z_t, int t, const PromptEmbedding &prompt) const;
    Image denoise_vjp(const Image &z_t, int t, const PromptEmbedding &prompt, const Image &dout) const;

    /// Hidden tokens entering the cross-attention block, (H/8, W/8, hidden_channels).
    Image attention_input(const Image &z_t, int t, const PromptEmbedding &prompt) const;

    /// Two-step trajectory descriptor: concat(d1, d2) with d1 = U(z_t, t),
    /// d2 = U(z_t - sigma_t d1, t - traj_step).
    std::vector<double> traj_descriptor(const Image &image, const EditCondition &cond) const;
    Image traj_descriptor_vjp(const Image &image, const EditCondition &cond, std::span<const double> dd) const;

    /// Mean over tokens of the cross-attention queries, length query_dim.
    std::vector<double> xattn_descriptor(const Image &image, const EditCondition &cond) const;
    Image xattn_descriptor_vjp(const Image &image, const EditCondition &cond, std::span<const double> dd) const;

    /// One surrogate edit: image + decode(-strength * sigma_t * U(z_t)), clamped to [0, 1].
    Image edit_image(const Image &image, const EditCondition &cond, double strength) const;

    /// Called with each condition the descriptors are evaluated under. Test hook.
    using Observer = std::function<void(const EditCondition &)>;
    void set_observer(Observer observer) { observer_ = std::move(observer); }

    struct Weights;

private:
    void check_image(const Image &image) const;
    void notify(const EditCondition &cond) const {
        if (observer_) observer_(cond);
    }

    EditorConfig config_;
    std::shared_ptr<const Weights> weights_;
    Observer observer_;
};

/// Squared distance and its gradient with respect to the protected image. The reference
/// image is treated as a constant.
struct Diversion {
    double value = 0.0;
    Image cotangent;
};

/// ||z(prot) - z(ref)||^2
Diversion latent_separation(const Image &prot, const Image &ref, const SurrogateEditor &editor);
/// ||traj(prot) - traj(ref)||^2 under one shared condition.
Diversion trajectory_diversion(const Image &prot, const Image &ref, const EditCondition &cond,
                               const SurrogateEditor &editor);
/// ||xattn(prot) - xattn(ref)||^2 / query_dim under one shared condition.
Diversion attention_diversion(const Image &prot, const Image &ref, const EditCondition &cond,
                              const SurrogateEditor &editor);

} // namespace splatguard
