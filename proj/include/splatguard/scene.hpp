// Copyright Contributors to the splatguard project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace splatguard {

using Vec3 = std::array<double, 3>;

/// Parameter groups of a Gaussian. Every parameter belongs to exactly one group.
enum class ParamGroup : int { Position = 0, Scale, Rotation, Opacity, ColorDC, ColorRest };

inline constexpr int kParamGroupCount = 6;
inline constexpr int kParamCount      = 23; // 3 + 3 + 4 + 1 + 3 + 9
inline constexpr std::array<int, kParamGroupCount> kGroupOffset{0, 3, 6, 10, 11, 14};
inline constexpr std::array<int, kParamGroupCount> kGroupSize{3, 3, 4, 1, 3, 9};
inline constexpr std::array<ParamGroup, kParamGroupCount> kAllGroups{
    ParamGroup::Position, ParamGroup::Scale,   ParamGroup::Rotation,
    ParamGroup::Opacity,  ParamGroup::ColorDC, ParamGroup::ColorRest};

const char *group_name(ParamGroup group);
ParamGroup group_from_name(const std::string &name);

/// Per-group values, e.g. role coefficients or learning rates.
using GroupValues = std::array<double, kParamGroupCount>;

inline double &group_value(GroupValues &values, ParamGroup g) { return values[static_cast<int>(g)]; }
inline double group_value(const GroupValues &values, ParamGroup g) { return values[static_cast<int>(g)]; }

using ParamVector = std::array<double, kParamCount>;

inline std::span<double> group_span(ParamVector &p, ParamGroup g) {
    const int k = static_cast<int>(g);
    return std::span<double>(p.data() + kGroupOffset[k], kGroupSize[k]);
}
inline std::span<const double> group_span(const ParamVector &p, ParamGroup g) {
    const int k = static_cast<int>(g);
    return std::span<const double>(p.data() + kGroupOffset[k], kGroupSize[k]);
}

/// One anisotropic Gaussian. Layout of `params`:
/// position(3) log_scale(3) rotation wxyz(4) opacity_logit(1) color_dc(3) color_rest(9).
/// color_rest holds the three degree-1 SH bases, each with an RGB triple.
struct Gaussian {
    ParamVector params{};

    double *position() { return params.data() + 0; }
    const double *position() const { return params.data() + 0; }
    double *log_scale() { return params.data() + 3; }
    const double *log_scale() const { return params.data() + 3; }
    double *rotation() { return params.data() + 6; }
    const double *rotation() const { return params.data() + 6; }
    double &opacity_logit() { return params[10]; }
    double opacity_logit() const { return params[10]; }
    double *color_dc() { return params.data() + 11; }
    const double *color_dc() const { return params.data() + 11; }
    double *color_rest() { return params.data() + 14; }
    const double *color_rest() const { return params.data() + 14; }

    double opacity() const;
    void normalize_rotation();

    friend bool operator==(const Gaussian &, const Gaussian &) = default;
};

struct GaussianScene {
    std::vector<Gaussian> gaussians;
    Vec3 background{0.0, 0.0, 0.0};
    std::string scene_id;
    /// Optional semantic label per Gaussian; empty string means unlabelled.
    std::vector<std::string> labels;

    std::size_t size() const noexcept { return gaussians.size(); }
    std::string label(std::size_t i) const { return i < labels.size() ? labels[i] : std::string(); }

    friend bool operator==(const GaussianScene &, const GaussianScene &) = default;
};

/// Throws EmptyScene / InvalidRotation / Numeric when an invariant is broken.
void validate_scene(const GaussianScene &scene);

/// 64-bit FNV-1a over the serialized bytes; used for frozen-state checks.
std::uint64_t scene_hash(const GaussianScene &scene);

inline constexpr std::uint8_t kSceneFormatVersion = 1;

void scene_save(const GaussianScene &scene, const std::filesystem::path &path);
GaussianScene scene_load(const std::filesystem::path &path);
std::vector<unsigned char> scene_serialize(const GaussianScene &scene);
GaussianScene scene_deserialize(std::span<const unsigned char> bytes);

enum class ToySceneKind { Plane, ObjectOnPlane, Random };

ToySceneKind toy_kind_from_name(const std::string &name);

/// Procedural stand-in scenes. object_on_plane labels its foreground blob "object"
/// and the ground "plane".
GaussianScene make_toy_scene(ToySceneKind kind, std::size_t n, std::uint64_t seed);

/// Model-level distortions. All are pure: the input scene is never modified.
GaussianScene distort_noise(const GaussianScene &scene, double sigma, std::uint64_t seed);
GaussianScene distort_prune(const GaussianScene &scene, double fraction, std::uint64_t seed);
GaussianScene distort_clone(const GaussianScene &scene, double fraction, std::uint64_t seed);

} // namespace splatguard
