// Copyright Contributors to the splatguard project
// SPDX-License-Identifier: Apache-2.0
//
#include "splatguard/renderer.hpp"

#include "splatguard/error.hpp"
#include "splatguard/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace splatguard {

namespace {

constexpr int kTile          = 16;
constexpr double kShC1       = 0.4886025119029199;
constexpr int kAccumPerSplat = 7; // dcolor(3), dalpha, dconic(3)

Vec3 normalized(const Vec3 &v) {
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    return {v[0] / n, v[1] / n, v[2] / n};
}

Vec3 cross(const Vec3 &a, const Vec3 &b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Mat3 rotation_from_unit_quaternion(const double *q) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    return {{{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
             {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
             {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}}};
}

// Everything about one Gaussian in one view that the per-pixel loops and the
// parameter-space backward pass need.
struct Prepared {
    double mx = 0, my = 0;
    double conic[3]{};
    double cov[3]{};
    double alpha = 0;
    double color[3]{};
    double basis[3]{};
    int x0 = 0, x1 = -1, y0 = 0, y1 = -1;
    double depth = 0;
    bool active  = false;
    // Backward-only data.
    double T[2][3]{};
    Mat3 R{};
    double scale[3]{};
    double qhat[4]{};
    double qnorm = 1;
};

struct Frame {
    int width = 0, height = 0;
    Vec3 background{};
    std::vector<Prepared> prepared;
    std::vector<std::size_t> order;
    std::vector<std::vector<std::uint32_t>> tiles; // per tile, indices into prepared in depth order
    int tiles_x = 0, tiles_y = 0;
    std::size_t skipped_singular = 0;
};

// Projection Jacobian times world-to-camera rotation, mean, and depth.
struct ProjectionGeometry {
    double T[2][3];
    double mx, my, depth;
};

ProjectionGeometry projection_geometry(const double *mu, const CameraView &cam) {
    ProjectionGeometry geo{};
    double pc[3];
    for (int r = 0; r < 3; ++r)
        pc[r] = cam.rotation[r][0] * mu[0] + cam.rotation[r][1] * mu[1] + cam.rotation[r][2] * mu[2] + cam.translation[r];
    geo.depth = pc[2];
    if (geo.depth <= kNearPlane) return geo;
    const double iz = 1.0 / pc[2];
    geo.mx          = cam.fx * pc[0] * iz + cam.cx;
    geo.my          = cam.fy * pc[1] * iz + cam.cy;
    const double J[2][3] = {{cam.fx * iz, 0.0, -cam.fx * pc[0] * iz * iz}, {0.0, cam.fy * iz, -cam.fy * pc[1] * iz * iz}};
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 3; ++b)
            geo.T[a][b] = J[a][0] * cam.rotation[0][b] + J[a][1] * cam.rotation[1][b] + J[a][2] * cam.rotation[2][b];
    return geo;
}

Frame prepare(const GaussianScene &scene, const CameraView &cam) {
    validate_camera(cam);
    require(!scene.gaussians.empty(), ErrorCode::EmptyScene, "empty scene");
    Frame frame;
    frame.width      = cam.width;
    frame.height     = cam.height;
    frame.background = scene.background;
    frame.prepared.resize(scene.size());
    const Vec3 eye = cam.center();

    for (std::size_t i = 0; i < scene.size(); ++i) {
        const Gaussian &g = scene.gaussians[i];
        Prepared &p       = frame.prepared[i];
        const auto geo    = projection_geometry(g.position(), cam);
        p.depth           = geo.depth;
        if (geo.depth <= kNearPlane) continue;

        const double *q = g.rotation();
        p.qnorm         = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
        for (int k = 0; k < 4; ++k) p.qhat[k] = q[k] / p.qnorm;
        p.R = rotation_from_unit_quaternion(p.qhat);
        for (int k = 0; k < 3; ++k) p.scale[k] = std::exp(g.log_scale()[k]);

        // Sigma = M M^T with M = R S; cov2d = T Sigma T^T + dilation.
        double TM[2][3];
        for (int a = 0; a < 2; ++a)
            for (int j = 0; j < 3; ++j)
                TM[a][j] = (geo.T[a][0] * p.R[0][j] + geo.T[a][1] * p.R[1][j] + geo.T[a][2] * p.R[2][j]) * p.scale[j];
        p.cov[0] = TM[0][0] * TM[0][0] + TM[0][1] * TM[0][1] + TM[0][2] * TM[0][2] + kCovDilation;
        p.cov[1] = TM[0][0] * TM[1][0] + TM[0][1] * TM[1][1] + TM[0][2] * TM[1][2];
        p.cov[2] = TM[1][0] * TM[1][0] + TM[1][1] * TM[1][1] + TM[1][2] * TM[1][2] + kCovDilation;
        const double det = p.cov[0] * p.cov[2] - p.cov[1] * p.cov[1];
        if (!(det >= kMinDeterminant)) {
            ++frame.skipped_singular;
            continue;
        }
        p.conic[0] = p.cov[2] / det;
        p.conic[1] = -p.cov[1] / det;
        p.conic[2] = p.cov[0] / det;

        const double mid    = 0.5 * (p.cov[0] + p.cov[2]);
        const double lambda = mid + std::sqrt(std::max(0.1, mid * mid - det));
        const double radius = std::ceil(kCullSigmas * std::sqrt(lambda));
        p.mx                = geo.mx;
        p.my                = geo.my;
        // Pixel (x, y) has its center at (x + 0.5, y + 0.5).
        p.x0 = std::max(0, static_cast<int>(std::floor(p.mx - radius - 0.5)));
        p.x1 = std::min(cam.width - 1, static_cast<int>(std::ceil(p.mx + radius - 0.5)));
        p.y0 = std::max(0, static_cast<int>(std::floor(p.my - radius - 0.5)));
        p.y1 = std::min(cam.height - 1, static_cast<int>(std::ceil(p.my + radius - 0.5)));
        if (p.x0 > p.x1 || p.y0 > p.y1) continue;

        std::copy(&geo.T[0][0], &geo.T[0][0] + 6, &p.T[0][0]);
        p.alpha          = g.opacity();
        const Vec3 dir   = normalized({g.position()[0] - eye[0], g.position()[1] - eye[1], g.position()[2] - eye[2]});
        p.basis[0]       = -kShC1 * dir[1];
        p.basis[1]       = kShC1 * dir[2];
        p.basis[2]       = -kShC1 * dir[0];
        for (int c = 0; c < 3; ++c) {
            double pre = g.color_dc()[c];
            for (int j = 0; j < 3; ++j) pre += p.basis[j] * g.color_rest()[3 * j + c];
            p.color[c] = sigmoid(pre);
        }
        p.active = true;
    }

    frame.order.resize(scene.size());
    std::iota(frame.order.begin(), frame.order.end(), std::size_t{0});
    std::stable_sort(frame.order.begin(), frame.order.end(),
                     [&](std::size_t a, std::size_t b) { return frame.prepared[a].depth < frame.prepared[b].depth; });

    frame.tiles_x = (cam.width + kTile - 1) / kTile;
    frame.tiles_y = (cam.height + kTile - 1) / kTile;
    frame.tiles.assign(static_cast<std::size_t>(frame.tiles_x) * frame.tiles_y, {});
    for (std::size_t i : frame.order) {
        const Prepared &p = frame.prepared[i];
        if (!p.active) continue;
        for (int ty = p.y0 / kTile; ty <= p.y1 / kTile; ++ty)
            for (int tx = p.x0 / kTile; tx <= p.x1 / kTile; ++tx)
                frame.tiles[static_cast<std::size_t>(ty) * frame.tiles_x + tx].push_back(static_cast<std::uint32_t>(i));
    }
    return frame;
}

struct PixelEntry {
    std::uint32_t index;
    double a;     // alpha * g
    double g;
    double trans; // transmittance in front of this splat
    double dx, dy;
};

// Front-to-back compositing of one pixel. Calls visit(entry) for each composited splat,
// returns the final transmittance.
template <class Visit>
double composite_pixel(const Frame &frame, int x, int y, Visit &&visit) {
    const auto &list = frame.tiles[static_cast<std::size_t>(y / kTile) * frame.tiles_x + x / kTile];
    const double px  = x + 0.5;
    const double py  = y + 0.5;
    double trans     = 1.0;
    for (std::uint32_t idx : list) {
        const Prepared &p = frame.prepared[idx];
        if (x < p.x0 || x > p.x1 || y < p.y0 || y > p.y1) continue;
        const double dx    = px - p.mx;
        const double dy    = py - p.my;
        const double power = -0.5 * (p.conic[0] * dx * dx + 2.0 * p.conic[1] * dx * dy + p.conic[2] * dy * dy);
        const double g     = std::min(1.0, std::exp(power));
        const double a     = p.alpha * g;
        visit(PixelEntry{idx, a, g, trans, dx, dy});
        trans *= (1.0 - a);
        if (trans < kMinTransmit) break;
    }
    return trans;
}

std::size_t chunk_count(const Frame &frame) { return static_cast<std::size_t>(frame.tiles_y); }

} // namespace

Vec3 CameraView::center() const {
    // c = -R^T t
    Vec3 c{};
    for (int k = 0; k < 3; ++k)
        c[k] = -(rotation[0][k] * translation[0] + rotation[1][k] * translation[1] + rotation[2][k] * translation[2]);
    return c;
}

void validate_camera(const CameraView &camera) {
    require(camera.fx > 0 && camera.fy > 0, ErrorCode::InvalidArgument, "camera focal lengths must be positive");
    require(camera.width > 0 && camera.height > 0, ErrorCode::InvalidArgument, "camera image size must be positive");
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            double dot = 0;
            for (int k = 0; k < 3; ++k) dot += camera.rotation[a][k] * camera.rotation[b][k];
            require(std::abs(dot - (a == b ? 1.0 : 0.0)) <= 1e-9, ErrorCode::InvalidArgument,
                    "camera rotation is not orthonormal");
        }
}

CameraView look_at(const Vec3 &eye, const Vec3 &target, int width, int height, double fx, std::string view_id) {
    const Vec3 forward = normalized({target[0] - eye[0], target[1] - eye[1], target[2] - eye[2]});
    const Vec3 right   = normalized(cross(forward, {0.0, 1.0, 0.0}));
    const Vec3 down    = cross(forward, right);
    CameraView cam;
    cam.rotation = {{{right[0], right[1], right[2]}, {down[0], down[1], down[2]}, {forward[0], forward[1], forward[2]}}};
    for (int r = 0; r < 3; ++r)
        cam.translation[r] = -(cam.rotation[r][0] * eye[0] + cam.rotation[r][1] * eye[1] + cam.rotation[r][2] * eye[2]);
    cam.fx      = fx;
    cam.fy      = fx;
    cam.cx      = 0.5 * width;
    cam.cy      = 0.5 * height;
    cam.width   = width;
    cam.height  = height;
    cam.view_id = std::move(view_id);
    return cam;
}

std::vector<CameraView> orbit_views(int count, int width, int height, double phase, const std::string &prefix) {
    require(count >= 1, ErrorCode::InvalidArgument, "orbit_views needs at least one view");
    std::vector<CameraView> views;
    views.reserve(count);
    constexpr double kRadius = 4.0;
    for (int k = 0; k < count; ++k) {
        const double azimuth   = 2.0 * std::numbers::pi * (k + phase) / count;
        const double elevation = (25.0 + 10.0 * std::sin(3.0 * azimuth)) * std::numbers::pi / 180.0;
        const Vec3 eye{kRadius * std::cos(elevation) * std::cos(azimuth), kRadius * std::sin(elevation),
                       kRadius * std::cos(elevation) * std::sin(azimuth)};
        views.push_back(look_at(eye, {0.0, 0.3, 0.0}, width, height, 1.1 * width, prefix + "_" + std::to_string(k)));
    }
    return views;
}

Splat project(const Gaussian &gaussian, const CameraView &camera) {
    validate_camera(camera);
    Splat s;
    const auto geo = projection_geometry(gaussian.position(), camera);
    s.depth        = geo.depth;
    if (geo.depth <= kNearPlane) return s;
    double qhat[4];
    const double *q = gaussian.rotation();
    const double n  = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
    for (int k = 0; k < 4; ++k) qhat[k] = q[k] / n;
    const Mat3 R = rotation_from_unit_quaternion(qhat);
    double TM[2][3];
    for (int a = 0; a < 2; ++a)
        for (int j = 0; j < 3; ++j)
            TM[a][j] = (geo.T[a][0] * R[0][j] + geo.T[a][1] * R[1][j] + geo.T[a][2] * R[2][j]) *
                       std::exp(gaussian.log_scale()[j]);
    s.cov2d[0] = TM[0][0] * TM[0][0] + TM[0][1] * TM[0][1] + TM[0][2] * TM[0][2] + kCovDilation;
    s.cov2d[1] = TM[0][0] * TM[1][0] + TM[0][1] * TM[1][1] + TM[0][2] * TM[1][2];
    s.cov2d[2] = TM[1][0] * TM[1][0] + TM[1][1] * TM[1][1] + TM[1][2] * TM[1][2] + kCovDilation;
    s.mean2d   = {geo.mx, geo.my};
    s.visible  = true;
    return s;
}

Vec3 gaussian_color(const Gaussian &gaussian, const Vec3 &dir) {
    const double basis[3] = {-kShC1 * dir[1], kShC1 * dir[2], -kShC1 * dir[0]};
    Vec3 color{};
    for (int c = 0; c < 3; ++c) {
        double pre = gaussian.color_dc()[c];
        for (int j = 0; j < 3; ++j) pre += basis[j] * gaussian.color_rest()[3 * j + c];
        color[c] = sigmoid(pre);
    }
    return color;
}

RenderResult render(const GaussianScene &scene, const CameraView &camera, const Image *mask) {
    const Frame frame = prepare(scene, camera);
    if (mask) {
        require(mask->height() == camera.height && mask->width() == camera.width && mask->channels() == 1,
                ErrorCode::ShapeMismatch, "render: mask size does not match the camera");
    }
    const std::size_t n      = scene.size();
    const std::size_t chunks = chunk_count(frame);

    RenderResult result;
    result.image            = Image(camera.height, camera.width, 3);
    result.depth_order      = frame.order;
    result.skipped_singular = frame.skipped_singular;
    std::vector<std::vector<double>> den(chunks), num(chunks);

    parallel_for(chunks, [&](std::size_t chunk) {
        den[chunk].assign(n, 0.0);
        if (mask) num[chunk].assign(n, 0.0);
        const int y_end = std::min(camera.height, static_cast<int>(chunk + 1) * kTile);
        for (int y = static_cast<int>(chunk) * kTile; y < y_end; ++y)
            for (int x = 0; x < camera.width; ++x) {
                double rgb[3]     = {0, 0, 0};
                const double mval = mask ? mask->at(y, x) : 0.0;
                const double trans = composite_pixel(frame, x, y, [&](const PixelEntry &e) {
                    const double w   = e.a * e.trans;
                    const Prepared &p = frame.prepared[e.index];
                    for (int c = 0; c < 3; ++c) rgb[c] += w * p.color[c];
                    den[chunk][e.index] += w;
                    if (mask) num[chunk][e.index] += w * mval;
                });
                for (int c = 0; c < 3; ++c)
                    result.image.at(y, x, c) = std::clamp(rgb[c] + trans * frame.background[c], 0.0, 1.0);
            }
    });

    result.contrib_den.assign(n, 0.0);
    if (mask) result.contrib_mask_num.assign(n, 0.0);
    for (std::size_t chunk = 0; chunk < chunks; ++chunk)
        for (std::size_t i = 0; i < n; ++i) {
            result.contrib_den[i] += den[chunk][i];
            if (mask) result.contrib_mask_num[i] += num[chunk][i];
        }
    return result;
}

Image render_weight_map(const GaussianScene &scene, const CameraView &camera, const std::vector<bool> &subset) {
    require(subset.size() == scene.size(), ErrorCode::ShapeMismatch, "render_weight_map: subset size mismatch");
    const Frame frame = prepare(scene, camera);
    Image out(camera.height, camera.width, 1);
    parallel_for(chunk_count(frame), [&](std::size_t chunk) {
        const int y_end = std::min(camera.height, static_cast<int>(chunk + 1) * kTile);
        for (int y = static_cast<int>(chunk) * kTile; y < y_end; ++y)
            for (int x = 0; x < camera.width; ++x) {
                double sum = 0.0;
                composite_pixel(frame, x, y, [&](const PixelEntry &e) {
                    if (subset[e.index]) sum += e.a * e.trans;
                });
                out.at(y, x) = std::clamp(sum, 0.0, 1.0);
            }
    });
    return out;
}

GradientBundle &GradientBundle::operator+=(const GradientBundle &other) {
    require(other.size() == size(), ErrorCode::ShapeMismatch, "gradient bundle size mismatch");
    for (std::size_t i = 0; i < size(); ++i)
        for (int k = 0; k < kParamCount; ++k) grads_[i][k] += other.grads_[i][k];
    return *this;
}

GradientBundle &GradientBundle::operator*=(double s) {
    for (auto &g : grads_)
        for (double &v : g) v *= s;
    return *this;
}

void GradientBundle::add_scaled(const GradientBundle &other, double s) {
    require(other.size() == size(), ErrorCode::ShapeMismatch, "gradient bundle size mismatch");
    for (std::size_t i = 0; i < size(); ++i)
        for (int k = 0; k < kParamCount; ++k) grads_[i][k] += s * other.grads_[i][k];
}

bool GradientBundle::all_finite() const {
    for (const auto &g : grads_)
        for (double v : g)
            if (!std::isfinite(v)) return false;
    return true;
}

std::vector<GradientBundle> render_vjp_multi(const GaussianScene &scene, const CameraView &camera,
                                             std::span<const Image *const> cotangents) {
    for (const Image *cot : cotangents) {
        require(cot != nullptr, ErrorCode::InvalidArgument, "render_vjp: null cotangent");
        require(cot->height() == camera.height && cot->width() == camera.width && cot->channels() == 3,
                ErrorCode::ShapeMismatch, "render_vjp: cotangent shape does not match the render");
        for (double v : cot->data()) require(std::isfinite(v), ErrorCode::Numeric, "render_vjp: non-finite cotangent");
    }
    const Frame frame        = prepare(scene, camera);
    const std::size_t n      = scene.size();
    const std::size_t ncot   = cotangents.size();
    const std::size_t stride = ncot * kAccumPerSplat;
    const std::size_t chunks = chunk_count(frame);

    // Stage 1: per-pixel reverse compositing into screen-space accumulators, one buffer per chunk.
    std::vector<std::vector<double>> accum(chunks);
    parallel_for(chunks, [&](std::size_t chunk) {
        auto &acc = accum[chunk];
        acc.assign(n * stride, 0.0);
        std::vector<PixelEntry> entries;
        std::vector<double> behind(3 * ncot);
        const int y_end = std::min(camera.height, static_cast<int>(chunk + 1) * kTile);
        for (int y = static_cast<int>(chunk) * kTile; y < y_end; ++y)
            for (int x = 0; x < camera.width; ++x) {
                entries.clear();
                composite_pixel(frame, x, y, [&](const PixelEntry &e) { entries.push_back(e); });
                // behind = color composited behind the current splat, starting with the background.
                for (std::size_t k = 0; k < ncot; ++k)
                    for (int c = 0; c < 3; ++c) behind[3 * k + c] = frame.background[c];
                for (std::size_t r = entries.size(); r-- > 0;) {
                    const PixelEntry &e = entries[r];
                    const Prepared &p   = frame.prepared[e.index];
                    const double w      = e.a * e.trans;
                    double *slot        = acc.data() + e.index * stride;
                    for (std::size_t k = 0; k < ncot; ++k) {
                        const Image &cot = *cotangents[k];
                        double *s        = slot + k * kAccumPerSplat;
                        double da        = 0.0;
                        for (int c = 0; c < 3; ++c) {
                            const double dc = cot.at(y, x, c);
                            s[c] += dc * w;
                            da += dc * e.trans * (p.color[c] - behind[3 * k + c]);
                        }
                        s[3] += da * e.g;
                        const double dpower = da * p.alpha * e.g;
                        s[4] += -0.5 * e.dx * e.dx * dpower;
                        s[5] += -e.dx * e.dy * dpower;
                        s[6] += -0.5 * e.dy * e.dy * dpower;
                        for (int c = 0; c < 3; ++c)
                            behind[3 * k + c] = e.a * p.color[c] + (1.0 - e.a) * behind[3 * k + c];
                    }
                }
            }
    });

    std::vector<double> total(n * stride, 0.0);
    for (std::size_t chunk = 0; chunk < chunks; ++chunk)
        for (std::size_t j = 0; j < total.size(); ++j) total[j] += accum[chunk][j];

    // Stage 2: screen-space accumulators to parameter gradients, per Gaussian.
    std::vector<GradientBundle> out(ncot, GradientBundle(n));
    for (std::size_t i = 0; i < n; ++i) {
        const Prepared &p = frame.prepared[i];
        if (!p.active) continue;
        for (std::size_t k = 0; k < ncot; ++k) {
            const double *s = total.data() + i * stride + k * kAccumPerSplat;
            ParamVector &gp = out[k][i];

            for (int c = 0; c < 3; ++c) {
                const double dpre = s[c] * p.color[c] * (1.0 - p.color[c]);
                gp[kGroupOffset[4] + c] = dpre;
                for (int j = 0; j < 3; ++j) gp[kGroupOffset[5] + 3 * j + c] = dpre * p.basis[j];
            }
            gp[kGroupOffset[3]] = s[3] * p.alpha * (1.0 - p.alpha);

            // conic = cov^-1  =>  dcov = -K G K with G the symmetric conic gradient.
            const double K[2][2] = {{p.conic[0], p.conic[1]}, {p.conic[1], p.conic[2]}};
            const double G[2][2] = {{s[4], 0.5 * s[5]}, {0.5 * s[5], s[6]}};
            double KG[2][2], dcov[2][2];
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) KG[a][b] = K[a][0] * G[0][b] + K[a][1] * G[1][b];
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) dcov[a][b] = -(KG[a][0] * K[0][b] + KG[a][1] * K[1][b]);

            // cov2d = T Sigma T^T  =>  dSigma = T^T dcov T (symmetric).
            double dSigma[3][3];
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) {
                    double v = 0;
                    for (int u = 0; u < 2; ++u)
                        for (int w = 0; w < 2; ++w) v += p.T[u][a] * dcov[u][w] * p.T[w][b];
                    dSigma[a][b] = v;
                }
            // Sigma = M M^T, M = R diag(scale)  =>  dM = 2 dSigma M.
            double dM[3][3];
            for (int a = 0; a < 3; ++a)
                for (int j = 0; j < 3; ++j) {
                    double v = 0;
                    for (int b = 0; b < 3; ++b) v += dSigma[a][b] * p.R[b][j] * p.scale[j];
                    dM[a][j] = 2.0 * v;
                }
            double dR[3][3];
            for (int j = 0; j < 3; ++j) {
                double ds = 0;
                for (int a = 0; a < 3; ++a) {
                    ds += dM[a][j] * p.R[a][j];
                    dR[a][j] = dM[a][j] * p.scale[j];
                }
                gp[kGroupOffset[1] + j] = ds * p.scale[j];
            }
            const double w = p.qhat[0], x = p.qhat[1], y = p.qhat[2], z = p.qhat[3];
            double dq[4];
            dq[0] = 2 * (-z * dR[0][1] + y * dR[0][2] + z * dR[1][0] - x * dR[1][2] - y * dR[2][0] + x * dR[2][1]);
            dq[1] = 2 * (y * dR[0][1] + z * dR[0][2] + y * dR[1][0] - 2 * x * dR[1][1] - w * dR[1][2] + z * dR[2][0] +
                         w * dR[2][1] - 2 * x * dR[2][2]);
            dq[2] = 2 * (-2 * y * dR[0][0] + x * dR[0][1] + w * dR[0][2] + x * dR[1][0] + z * dR[1][2] - w * dR[2][0] +
                         z * dR[2][1] - 2 * y * dR[2][2]);
            dq[3] = 2 * (-2 * z * dR[0][0] - w * dR[0][1] + x * dR[0][2] + w * dR[1][0] - 2 * z * dR[1][1] +
                         y * dR[1][2] + x * dR[2][0] + y * dR[2][1]);
            // Through q / |q|.
            const double dot = dq[0] * p.qhat[0] + dq[1] * p.qhat[1] + dq[2] * p.qhat[2] + dq[3] * p.qhat[3];
            for (int c = 0; c < 4; ++c) gp[kGroupOffset[2] + c] = (dq[c] - p.qhat[c] * dot) / p.qnorm;
        }
    }
    return out;
}

GradientBundle render_vjp(const GaussianScene &scene, const CameraView &camera, const Image &cotangent) {
    const Image *cots[] = {&cotangent};
    return std::move(render_vjp_multi(scene, camera, cots).front());
}

} // namespace splatguard
