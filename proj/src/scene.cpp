// Copyright Contributors to the splatguard project
// SPDX-License-Identifier: Apache-2.0
//
#include "splatguard/scene.hpp"

#include "splatguard/error.hpp"
#include "splatguard/random.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <numbers>
#include <sstream>

namespace splatguard {

namespace {

constexpr char kMagic[4]           = {'G', 'S', 'P', 'L'};
constexpr std::size_t kHeaderBytes = 4 + 1 + 8;
constexpr std::size_t kRecordBytes = kParamCount * 8;

double logit(double p) { return std::log(p / (1.0 - p)); }

void put_u64(std::vector<unsigned char> &out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

std::uint64_t get_u64(const unsigned char *p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

std::string hex_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

double parse_double(const std::string &token) {
    char *end      = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    require(end != token.c_str() && *end == '\0', ErrorCode::Format, "scene footer: bad number '" + token + "'");
    return v;
}

// "0-99,150-160" style index ranges for one label.
std::string encode_ranges(const std::vector<std::size_t> &indices) {
    std::ostringstream out;
    for (std::size_t i = 0; i < indices.size();) {
        std::size_t j = i;
        while (j + 1 < indices.size() && indices[j + 1] == indices[j] + 1) ++j;
        if (i != 0) out << ',';
        out << indices[i] << '-' << indices[j];
        i = j + 1;
    }
    return out.str();
}

void random_unit_quaternion(Rng &rng, double *q) {
    double n = 0.0;
    do {
        n = 0.0;
        for (int k = 0; k < 4; ++k) {
            q[k] = rng.normal();
            n += q[k] * q[k];
        }
    } while (n < 1e-12);
    n = std::sqrt(n);
    for (int k = 0; k < 4; ++k) q[k] /= n;
}

void yaw_quaternion(double angle, double *q) {
    q[0] = std::cos(0.5 * angle);
    q[1] = 0.0;
    q[2] = std::sin(0.5 * angle);
    q[3] = 0.0;
}

// Partial Fisher-Yates; returns `count` distinct indices in ascending order.
std::vector<std::size_t> choose_indices(std::size_t n, std::size_t count, Rng &rng) {
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + rng.below(n - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    std::sort(pool.begin(), pool.end());
    return pool;
}

} // namespace

const char *group_name(ParamGroup group) {
    switch (group) {
    case ParamGroup::Position: return "position";
    case ParamGroup::Scale: return "scale";
    case ParamGroup::Rotation: return "rotation";
    case ParamGroup::Opacity: return "opacity";
    case ParamGroup::ColorDC: return "color_dc";
    case ParamGroup::ColorRest: return "color_rest";
    }
    return "?";
}

ParamGroup group_from_name(const std::string &name) {
    for (auto g : kAllGroups)
        if (name == group_name(g)) return g;
    fail(ErrorCode::InvalidArgument, "unknown parameter group '" + name + "'");
}

double Gaussian::opacity() const { return 1.0 / (1.0 + std::exp(-opacity_logit())); }

void Gaussian::normalize_rotation() {
    double *q       = rotation();
    const double n  = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
    require(n > 1e-12 && std::isfinite(n), ErrorCode::InvalidRotation, "invalid rotation: quaternion norm is zero");
    for (int k = 0; k < 4; ++k) q[k] /= n;
}

void validate_scene(const GaussianScene &scene) {
    require(!scene.gaussians.empty(), ErrorCode::EmptyScene, "empty scene");
    require(scene.labels.empty() || scene.labels.size() == scene.gaussians.size(), ErrorCode::Format,
            "label count does not match Gaussian count");
    for (std::size_t i = 0; i < scene.size(); ++i) {
        const Gaussian &g = scene.gaussians[i];
        for (double v : g.params)
            require(std::isfinite(v), ErrorCode::Numeric, "non-finite parameter in Gaussian " + std::to_string(i));
        const double *q = g.rotation();
        const double n  = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
        require(std::abs(n - 1.0) <= 1e-6, ErrorCode::InvalidRotation,
                "invalid rotation: Gaussian " + std::to_string(i) + " has quaternion norm " + std::to_string(n));
    }
    for (double v : scene.background) require(std::isfinite(v), ErrorCode::Numeric, "non-finite background");
}

std::vector<unsigned char> scene_serialize(const GaussianScene &scene) {
    std::vector<unsigned char> out;
    out.reserve(kHeaderBytes + scene.size() * kRecordBytes + 256);
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    out.push_back(kSceneFormatVersion);
    put_u64(out, scene.size());
    for (const auto &g : scene.gaussians)
        for (double v : g.params) put_u64(out, std::bit_cast<std::uint64_t>(v));

    std::ostringstream footer;
    footer << "background " << hex_double(scene.background[0]) << ' ' << hex_double(scene.background[1]) << ' '
           << hex_double(scene.background[2]) << '\n';
    footer << "scene_id " << scene.scene_id << '\n';
    std::map<std::string, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < scene.labels.size(); ++i)
        if (!scene.labels[i].empty()) by_label[scene.labels[i]].push_back(i);
    for (const auto &[name, indices] : by_label) footer << "label " << name << ' ' << encode_ranges(indices) << '\n';
    const std::string text = footer.str();
    out.insert(out.end(), text.begin(), text.end());
    return out;
}

GaussianScene scene_deserialize(std::span<const unsigned char> bytes) {
    require(bytes.size() >= kHeaderBytes, ErrorCode::Format, "malformed header: file too short");
    require(std::memcmp(bytes.data(), kMagic, 4) == 0, ErrorCode::Format, "malformed header: bad magic");
    require(bytes[4] == kSceneFormatVersion, ErrorCode::VersionMismatch,
            "version mismatch: file has version " + std::to_string(bytes[4]) + ", expected " +
                std::to_string(kSceneFormatVersion));
    const std::uint64_t n = get_u64(bytes.data() + 5);
    require(n > 0, ErrorCode::EmptyScene, "empty scene");
    require(n <= (bytes.size() - kHeaderBytes) / kRecordBytes, ErrorCode::Truncated,
            "truncated payload: header declares " + std::to_string(n) + " Gaussians");

    GaussianScene scene;
    scene.gaussians.resize(n);
    const unsigned char *p = bytes.data() + kHeaderBytes;
    for (auto &g : scene.gaussians)
        for (double &v : g.params) {
            v = std::bit_cast<double>(get_u64(p));
            p += 8;
        }

    const std::string text(reinterpret_cast<const char *>(p), bytes.size() - kHeaderBytes - n * kRecordBytes);
    std::istringstream footer(text);
    std::string line;
    bool saw_background = false;
    while (std::getline(footer, line)) {
        if (line.empty()) continue;
        const auto space = line.find(' ');
        const std::string key  = line.substr(0, space);
        const std::string rest = space == std::string::npos ? std::string() : line.substr(space + 1);
        if (key == "background") {
            std::istringstream in(rest);
            std::string a, b, c;
            in >> a >> b >> c;
            scene.background = {parse_double(a), parse_double(b), parse_double(c)};
            saw_background   = true;
        } else if (key == "scene_id") {
            scene.scene_id = rest;
        } else if (key == "label") {
            const auto sep = rest.find(' ');
            require(sep != std::string::npos, ErrorCode::Format, "scene footer: malformed label line");
            const std::string name = rest.substr(0, sep);
            if (scene.labels.empty()) scene.labels.assign(n, std::string());
            std::istringstream ranges(rest.substr(sep + 1));
            std::string range;
            while (std::getline(ranges, range, ',')) {
                const auto dash = range.find('-');
                require(dash != std::string::npos, ErrorCode::Format, "scene footer: malformed label range");
                const std::size_t lo = std::stoull(range.substr(0, dash));
                const std::size_t hi = std::stoull(range.substr(dash + 1));
                require(lo <= hi && hi < n, ErrorCode::Format, "scene footer: label range out of bounds");
                for (std::size_t i = lo; i <= hi; ++i) scene.labels[i] = name;
            }
        } else {
            fail(ErrorCode::Format, "scene footer: unknown key '" + key + "'");
        }
    }
    require(saw_background, ErrorCode::Truncated, "truncated payload: missing footer");
    validate_scene(scene);
    return scene;
}

void scene_save(const GaussianScene &scene, const std::filesystem::path &path) {
    validate_scene(scene);
    const auto bytes = scene_serialize(scene);
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    require(static_cast<bool>(out), ErrorCode::Io, "write failed: " + path.string());
}

GaussianScene scene_load(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open for reading: " + path.string());
    const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return scene_deserialize(bytes);
}

std::uint64_t scene_hash(const GaussianScene &scene) {
    const auto bytes = scene_serialize(scene);
    return fnv1a(std::string_view(reinterpret_cast<const char *>(bytes.data()), bytes.size()));
}

ToySceneKind toy_kind_from_name(const std::string &name) {
    if (name == "plane") return ToySceneKind::Plane;
    if (name == "object_on_plane") return ToySceneKind::ObjectOnPlane;
    if (name == "random") return ToySceneKind::Random;
    fail(ErrorCode::InvalidArgument, "unknown toy scene kind '" + name + "'");
}

namespace {

// Thin disc lying on the y = 0 ground plane with a two-tone checker texture.
Gaussian plane_gaussian(Rng &rng) {
    Gaussian g;
    const double x = rng.uniform(-1.5, 1.5);
    const double z = rng.uniform(-1.5, 1.5);
    g.position()[0] = x;
    g.position()[1] = 0.0;
    g.position()[2] = z;
    g.log_scale()[0] = std::log(0.07 * rng.uniform(0.8, 1.25));
    g.log_scale()[1] = std::log(0.015);
    g.log_scale()[2] = std::log(0.07 * rng.uniform(0.8, 1.25));
    yaw_quaternion(rng.uniform(0.0, std::numbers::pi), g.rotation());
    g.opacity_logit() = 2.0 + 0.3 * rng.normal();

    const bool dark = (static_cast<int>(std::floor(x / 0.5)) + static_cast<int>(std::floor(z / 0.5))) % 2 != 0;
    const Vec3 base = dark ? Vec3{0.25, 0.3, 0.22} : Vec3{0.55, 0.5, 0.35};
    for (int c = 0; c < 3; ++c) g.color_dc()[c] = logit(std::clamp(base[c] + 0.03 * rng.normal(), 0.02, 0.98));
    for (int k = 0; k < 9; ++k) g.color_rest()[k] = 0.05 * rng.normal();
    return g;
}

// Gaussian inside a roughly spherical blob resting on the plane.
Gaussian object_gaussian(Rng &rng) {
    Gaussian g;
    double p[3];
    do {
        for (double &v : p) v = rng.uniform(-1.0, 1.0);
    } while (p[0] * p[0] + p[1] * p[1] + p[2] * p[2] > 1.0);
    g.position()[0] = 0.45 * p[0];
    g.position()[1] = 0.45 + 0.4 * p[1];
    g.position()[2] = 0.45 * p[2];
    for (int k = 0; k < 3; ++k) g.log_scale()[k] = std::log(0.055 * rng.uniform(0.7, 1.4));
    random_unit_quaternion(rng, g.rotation());
    g.opacity_logit() = 2.5 + 0.3 * rng.normal();

    const double h  = (g.position()[1] - 0.05) / 0.8; // 0 at the bottom, 1 at the top
    const Vec3 base = {0.75 - 0.2 * h, 0.25 + 0.3 * h, 0.2 + 0.15 * p[0]};
    for (int c = 0; c < 3; ++c) g.color_dc()[c] = logit(std::clamp(base[c] + 0.04 * rng.normal(), 0.02, 0.98));
    for (int k = 0; k < 9; ++k) g.color_rest()[k] = 0.1 * rng.normal();
    return g;
}

Gaussian random_gaussian(Rng &rng) {
    Gaussian g;
    for (int k = 0; k < 3; ++k) g.position()[k] = rng.uniform(-1.0, 1.0);
    for (int k = 0; k < 3; ++k) g.log_scale()[k] = rng.uniform(std::log(0.05), std::log(0.2));
    random_unit_quaternion(rng, g.rotation());
    g.opacity_logit() = rng.normal();
    for (int c = 0; c < 3; ++c) g.color_dc()[c] = rng.normal();
    for (int k = 0; k < 9; ++k) g.color_rest()[k] = 0.2 * rng.normal();
    return g;
}

} // namespace

GaussianScene make_toy_scene(ToySceneKind kind, std::size_t n, std::uint64_t seed) {
    require(n >= 1, ErrorCode::InvalidArgument, "toy scene needs at least one Gaussian");
    Rng rng(derive_seed(seed, "toy-scene", static_cast<std::uint64_t>(kind)));
    GaussianScene scene;
    scene.gaussians.reserve(n);
    switch (kind) {
    case ToySceneKind::Plane:
        scene.scene_id   = "plane";
        scene.background = {0.08, 0.08, 0.1};
        for (std::size_t i = 0; i < n; ++i) scene.gaussians.push_back(plane_gaussian(rng));
        break;
    case ToySceneKind::ObjectOnPlane: {
        scene.scene_id        = "object_on_plane";
        scene.background      = {0.08, 0.08, 0.1};
        const std::size_t obj = n == 1 ? 1 : std::max<std::size_t>(1, (3 * n) / 10);
        scene.labels.reserve(n);
        for (std::size_t i = 0; i < n - obj; ++i) {
            scene.gaussians.push_back(plane_gaussian(rng));
            scene.labels.emplace_back("plane");
        }
        for (std::size_t i = 0; i < obj; ++i) {
            scene.gaussians.push_back(object_gaussian(rng));
            scene.labels.emplace_back("object");
        }
        break;
    }
    case ToySceneKind::Random:
        scene.scene_id   = "random";
        scene.background = {rng.uniform(), rng.uniform(), rng.uniform()};
        for (std::size_t i = 0; i < n; ++i) scene.gaussians.push_back(random_gaussian(rng));
        break;
    }
    return scene;
}

GaussianScene distort_noise(const GaussianScene &scene, double sigma, std::uint64_t seed) {
    require(sigma >= 0.0 && std::isfinite(sigma), ErrorCode::InvalidArgument, "noise sigma must be >= 0");
    GaussianScene out = scene;
    if (sigma == 0.0) return out;
    Rng rng(derive_seed(seed, "model-noise"));
    for (auto &g : out.gaussians) {
        for (int k = kGroupOffset[1]; k < kParamCount; ++k) g.params[k] += sigma * rng.normal();
        g.normalize_rotation();
    }
    return out;
}

GaussianScene distort_prune(const GaussianScene &scene, double fraction, std::uint64_t seed) {
    require(fraction >= 0.0 && fraction < 1.0, ErrorCode::InvalidArgument, "prune fraction must be in [0, 1)");
    const std::size_t n     = scene.size();
    const auto count        = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
    Rng rng(derive_seed(seed, "model-prune"));
    const auto removed      = choose_indices(n, count, rng);
    GaussianScene out;
    out.background = scene.background;
    out.scene_id   = scene.scene_id;
    std::size_t r  = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (r < removed.size() && removed[r] == i) {
            ++r;
            continue;
        }
        out.gaussians.push_back(scene.gaussians[i]);
        if (!scene.labels.empty()) out.labels.push_back(scene.labels[i]);
    }
    return out;
}

GaussianScene distort_clone(const GaussianScene &scene, double fraction, std::uint64_t seed) {
    require(fraction >= 0.0 && fraction <= 1.0, ErrorCode::InvalidArgument, "clone fraction must be in [0, 1]");
    const std::size_t n = scene.size();
    const auto count    = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
    Rng rng(derive_seed(seed, "model-clone"));
    const auto chosen   = choose_indices(n, count, rng);
    GaussianScene out   = scene;
    for (std::size_t i : chosen) {
        Gaussian &original   = out.gaussians[i];
        const double halved  = 0.5 * original.opacity();
        original.opacity_logit() = logit(halved);
        Gaussian copy        = original;
        for (int k = 0; k < 3; ++k) copy.position()[k] += 1e-3 * rng.normal();
        out.gaussians.push_back(copy);
        if (!out.labels.empty()) out.labels.push_back(out.labels[i]);
    }
    return out;
}

} // namespace splatguard
