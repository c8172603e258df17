// Copyright Contributors to the splatguard project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "splatguard/image.hpp"
#include "splatguard/scene.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace splatguard {

using Mat3 = std::array<std::array<double, 3>, 3>;

/// Pinhole camera. `rotation` and `translation` map world to camera coordinates
/// (x right, y down, z forward).
struct CameraView {
    double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;
    Mat3 rotation{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    Vec3 translation{0, 0, 0};
    int width  = 0;
    int height = 0;
    std::string view_id;

    Vec3 center() const;
};

/// Throws InvalidArgument if the rotation is not orthonormal (1e-9) or focal lengths are not positive.
void validate_camera(const CameraView &camera);

/// Camera at `eye` looking at `target` with world +y as up.
CameraView look_at(const Vec3 &eye, const Vec3 &target, int width, int height, double fx, std::string view_id);

/// `count` cameras on a ring around the origin. `phase` (fraction of one step) offsets
/// the azimuths so held-out views can interleave with training views.
std::vector<CameraView> orbit_views(int count, int width, int height, double phase = 0.0,
                                    const std::string &prefix = "view");

inline constexpr double kNearPlane      = 0.01;
inline constexpr double kCovDilation    = 0.3;
inline constexpr double kMinTransmit    = 1e-4;
inline constexpr double kMinDeterminant = 1e-12;
inline constexpr double kCullSigmas     = 3.0;

/// Screen-space footprint of one Gaussian.
struct Splat {
    std::array<double, 2> mean2d{};
    std::array<double, 3> cov2d{}; ///< (xx, xy, yy)
    double depth   = 0.0;
    bool visible   = false;
};

Splat project(const Gaussian &gaussian, const CameraView &camera);

/// View-dependent color sigmoid(c_dc + SH1(dir) . c_rest) for direction `dir` (unit, camera to Gaussian).
Vec3 gaussian_color(const Gaussian &gaussian, const Vec3 &dir);

struct RenderResult {
    Image image;                          ///< H x W x 3, linear RGB in [0, 1]
    std::vector<double> contrib_mask_num; ///< sum_p w_i(p) M(p); empty when no mask was given
    std::vector<double> contrib_den;      ///< sum_p w_i(p)
    std::vector<std::size_t> depth_order; ///< compositing order (front to back)
    std::size_t skipped_singular = 0;
};

RenderResult render(const GaussianScene &scene, const CameraView &camera, const Image *mask = nullptr);

/// Per-Gaussian gradient with the scene's parameter layout. Position slots stay zero.
class GradientBundle {
public:
    GradientBundle() = default;
    explicit GradientBundle(std::size_t n) : grads_(n, ParamVector{}) {}

    std::size_t size() const noexcept { return grads_.size(); }
    ParamVector &operator[](std::size_t i) { return grads_[i]; }
    const ParamVector &operator[](std::size_t i) const { return grads_[i]; }

    std::span<double> group(std::size_t i, ParamGroup g) { return group_span(grads_[i], g); }
    std::span<const double> group(std::size_t i, ParamGroup g) const { return group_span(grads_[i], g); }

    GradientBundle &operator+=(const GradientBundle &other);
    GradientBundle &operator*=(double s);
    void add_scaled(const GradientBundle &other, double s);

    bool all_finite() const;
    friend bool operator==(const GradientBundle &, const GradientBundle &) = default;

private:
    std::vector<ParamVector> grads_;
};

/// d<cotangent, render(scene, camera).image>/d(params).
GradientBundle render_vjp(const GaussianScene &scene, const CameraView &camera, const Image &cotangent);

/// Same as render_vjp for several cotangents at once, sharing the forward recomputation.
std::vector<GradientBundle> render_vjp_multi(const GaussianScene &scene, const CameraView &camera,
                                             std::span<const Image *const> cotangents);

/// Renders only the subset's compositing weight sum (occlusion by the rest of the scene
/// is kept), clamped to [0, 1]. Used for procedural object masks.
Image render_weight_map(const GaussianScene &scene, const CameraView &camera, const std::vector<bool> &subset);

} // namespace splatguard
