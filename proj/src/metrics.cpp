// Copyright Contributors to the splatguard project
// SPDX-License-Identifier: Apache-2.0
//
#include "splatguard/metrics.hpp"

#include "splatguard/error.hpp"
#include "splatguard/random.hpp"
#include "splatguard/watermark.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace splatguard {

double psnr(const Image &a, const Image &b) {
    require_same_shape(a, b, "psnr");
    double mse = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.size());
    if (mse == 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

namespace {

constexpr int kSsimWindow = 11;

std::array<double, kSsimWindow> ssim_weights() {
    std::array<double, kSsimWindow> w{};
    double total = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double d = i - kSsimWindow / 2;
        w[i]           = std::exp(-d * d / (2.0 * 1.5 * 1.5));
        total += w[i];
    }
    for (double &v : w) v /= total;
    return w;
}

// Separable valid-region filtering of one channel of f(a, b).
template <class F>
std::vector<double> filter_valid(const Image &a, const Image &b, int c, F f) {
    static const auto w = ssim_weights();
    const int H = a.height(), W = a.width();
    const int oh = H - kSsimWindow + 1, ow = W - kSsimWindow + 1;
    std::vector<double> rows(static_cast<std::size_t>(H) * ow, 0.0);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kSsimWindow; ++k) acc += w[k] * f(a.at(y, x + k, c), b.at(y, x + k, c));
            rows[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    std::vector<double> out(static_cast<std::size_t>(oh) * ow, 0.0);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kSsimWindow; ++k) acc += w[k] * rows[static_cast<std::size_t>(y + k) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    return out;
}

} // namespace

double ssim(const Image &a, const Image &b) {
    require_same_shape(a, b, "ssim");
    require(a.height() >= kSsimWindow && a.width() >= kSsimWindow, ErrorCode::InvalidArgument,
            "ssim needs images of at least 11x11");
    constexpr double C1 = 0.01 * 0.01;
    constexpr double C2 = 0.03 * 0.03;
    double total        = 0.0;
    std::size_t count   = 0;
    for (int c = 0; c < a.channels(); ++c) {
        const auto mx  = filter_valid(a, b, c, [](double x, double) { return x; });
        const auto my  = filter_valid(a, b, c, [](double, double y) { return y; });
        const auto mxx = filter_valid(a, b, c, [](double x, double) { return x * x; });
        const auto myy = filter_valid(a, b, c, [](double, double y) { return y * y; });
        const auto mxy = filter_valid(a, b, c, [](double x, double y) { return x * y; });
        for (std::size_t i = 0; i < mx.size(); ++i) {
            const double vx  = mxx[i] - mx[i] * mx[i];
            const double vy  = myy[i] - my[i] * my[i];
            const double cxy = mxy[i] - mx[i] * my[i];
            total += ((2 * mx[i] * my[i] + C1) * (2 * cxy + C2)) /
                     ((mx[i] * mx[i] + my[i] * my[i] + C1) * (vx + vy + C2));
        }
        count += mx.size();
    }
    return total / static_cast<double>(count);
}

double feat_lpips(const Image &a, const Image &b, const SurrogateEditor &editor) {
    return feature_distance(a, b, editor);
}

namespace {

constexpr int kPoolGrid  = 8;
constexpr int kPooledDim = kPoolGrid * kPoolGrid * 3;

std::vector<double> normalized(std::vector<double> v) {
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    if (n > 0.0)
        for (double &x : v) x /= n;
    return v;
}

std::vector<std::string> words_of(const std::string &text) {
    std::vector<std::string> words;
    std::istringstream in(text);
    std::string w;
    while (in >> w) {
        for (char &ch : w) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        words.push_back(w);
    }
    return words;
}

} // namespace

EmbedderPair::EmbedderPair(std::uint64_t seed, double bandwidth) : seed_(seed) {
    require(bandwidth > 0.0, ErrorCode::InvalidArgument, "embedder bandwidth must be positive");
    Rng rng(derive_seed(seed, "image-embedder"));
    proj_.resize(static_cast<std::size_t>(kEmbedDim) * kPooledDim);
    for (double &v : proj_) v = rng.normal() / bandwidth;
    phase_.resize(kEmbedDim);
    for (double &v : phase_) v = rng.uniform(0.0, 2.0 * std::numbers::pi);
}

std::vector<double> EmbedderPair::image(const Image &img) const {
    require(img.channels() == 3 && img.height() % kPoolGrid == 0 && img.width() % kPoolGrid == 0,
            ErrorCode::ShapeMismatch, "image embedder needs RGB images with sides divisible by 8");
    const int bh = img.height() / kPoolGrid, bw = img.width() / kPoolGrid;
    std::vector<double> pooled(kPooledDim, 0.0);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < 3; ++c) pooled[((y / bh) * kPoolGrid + x / bw) * 3 + c] += img.at(y, x, c);
    for (double &v : pooled) v /= static_cast<double>(bh * bw);
    std::vector<double> feat(kEmbedDim);
    for (int k = 0; k < kEmbedDim; ++k) {
        double acc = phase_[k];
        for (int j = 0; j < kPooledDim; ++j) acc += proj_[static_cast<std::size_t>(k) * kPooledDim + j] * pooled[j];
        feat[k] = std::cos(acc);
    }
    return normalized(std::move(feat));
}

std::vector<double> EmbedderPair::text(const std::string &prompt) const {
    const auto words = words_of(prompt);
    require(!words.empty(), ErrorCode::InvalidArgument, "text embedder needs a non-empty prompt");
    std::vector<double> acc(kEmbedDim, 0.0);
    for (const auto &w : words) {
        Rng rng(derive_seed(seed_, "text-word", fnv1a(w)));
        for (double &v : acc) v += rng.normal();
    }
    return normalized(std::move(acc));
}

double cosine(const std::vector<double> &a, const std::vector<double> &b) {
    require(a.size() == b.size(), ErrorCode::ShapeMismatch, "cosine: length mismatch");
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    if (aa == 0.0 || bb == 0.0) return 0.0;
    return ab / std::sqrt(aa * bb);
}

ClipMetrics clip_metrics(const std::vector<Image> &edited_orig, const std::vector<Image> &edited_method,
                         const std::vector<Image> &src_orig, const std::vector<Image> &src_method,
                         const std::string &prompt_src, const std::string &prompt_tgt,
                         const EmbedderPair &embedders) {
    const std::size_t n = edited_orig.size();
    require(n > 0 && edited_method.size() == n && src_orig.size() == n && src_method.size() == n,
            ErrorCode::ShapeMismatch, "clip_metrics: view lists must be non-empty and aligned");
    const auto t_tgt = embedders.text(prompt_tgt);
    const auto t_src = embedders.text(prompt_src);
    std::vector<double> text_dir(kEmbedDim);
    for (int k = 0; k < kEmbedDim; ++k) text_dir[k] = t_tgt[k] - t_src[k];

    ClipMetrics m;
    m.clip.orig = 1.0;
    for (std::size_t v = 0; v < n; ++v) {
        const auto eo = embedders.image(edited_orig[v]);
        const auto em = embedders.image(edited_method[v]);
        const auto so = embedders.image(src_orig[v]);
        const auto sm = embedders.image(src_method[v]);
        m.clip.method += cosine(em, eo);
        m.clip_t.orig += cosine(eo, t_tgt);
        m.clip_t.method += cosine(em, t_tgt);
        std::vector<double> dir_o(kEmbedDim), dir_m(kEmbedDim);
        for (int k = 0; k < kEmbedDim; ++k) {
            dir_o[k] = eo[k] - so[k];
            dir_m[k] = em[k] - sm[k];
        }
        m.clip_d.orig += cosine(dir_o, text_dir);
        m.clip_d.method += cosine(dir_m, text_dir);
    }
    const double inv = 1.0 / static_cast<double>(n);
    for (ClipTriplet *t : {&m.clip_t, &m.clip_d}) t->orig *= inv;
    for (ClipTriplet *t : {&m.clip, &m.clip_t, &m.clip_d}) {
        t->method *= inv;
        t->diff = t->orig - t->method;
    }
    return m;
}

std::vector<SucpsScore> sucps(const std::vector<SucpsRow> &rows) {
    require(!rows.empty(), ErrorCode::InvalidArgument, "sucps needs at least one row");
    double b_max = -1.0;
    double max_gap[3] = {0, 0, 0};
    double psnr_max = 0, ssim_max = 0, lpips_min = std::numeric_limits<double>::infinity();
    for (const auto &r : rows) {
        require(r.lpips > 0.0 && r.ssim > 0.0 && r.psnr > 0.0, ErrorCode::InvalidArgument,
                "sucps: row '" + r.method + "' needs positive psnr, ssim and lpips");
        if (r.bit_acc) b_max = std::max(b_max, *r.bit_acc);
        const double gaps[3] = {r.d_clip, r.d_clip_t, r.d_clip_d};
        for (int k = 0; k < 3; ++k) max_gap[k] = std::max(max_gap[k], std::abs(gaps[k]));
        psnr_max  = std::max(psnr_max, r.psnr);
        ssim_max  = std::max(ssim_max, r.ssim);
        lpips_min = std::min(lpips_min, r.lpips);
    }
    require(b_max >= 0.0, ErrorCode::InvalidArgument, "sucps needs at least one row with a bit accuracy");

    auto clip01 = [](double v) { return std::clamp(v, 0.0, 1.0); };
    std::vector<SucpsScore> out;
    for (const auto &r : rows) {
        SucpsScore s;
        s.method       = r.method;
        const double b = r.bit_acc.value_or(0.5);
        s.traceability = b_max == 0.5 ? 0.5 : clip01(0.5 * (1.0 + (b - 0.5) / (b_max - 0.5)));

        const double gaps[3] = {r.d_clip, r.d_clip_t, r.d_clip_d};
        double prod          = 1.0;
        for (int k = 0; k < 3; ++k) prod *= max_gap[k] == 0.0 ? 0.5 : clip01(0.5 * (1.0 + gaps[k] / max_gap[k]));
        s.deterrence = std::cbrt(prod);

        s.fidelity = std::cbrt(clip01(r.psnr / psnr_max) * clip01(r.ssim / ssim_max) * clip01(lpips_min / r.lpips));
        if (s.traceability > 0.0 && s.deterrence > 0.0 && s.fidelity > 0.0)
            s.sucps = 3.0 / (1.0 / s.traceability + 1.0 / s.deterrence + 1.0 / s.fidelity);
        out.push_back(s);
    }
    return out;
}

std::vector<SucpsScore> sucps_against(const std::vector<SucpsRow> &reference, const std::vector<SucpsRow> &candidates) {
    std::vector<SucpsScore> out;
    for (const auto &c : candidates) {
        auto pool = reference;
        pool.push_back(c);
        out.push_back(sucps(pool).back());
    }
    return out;
}

std::vector<SucpsRow> sucps_rows_from_csv(const CsvTable &table) {
    const std::size_t im = table.column("method"), ib = table.column("bit_acc"), ic = table.column("d_clip"),
                      it = table.column("d_clipT"), id = table.column("d_clipD"), ip = table.column("psnr"),
                      is = table.column("ssim"), il = table.column("lpips");
    std::vector<SucpsRow> rows;
    for (const auto &cells : table.rows) {
        SucpsRow r;
        r.method = cells[im];
        const std::string &b = cells[ib];
        if (!(b == "NA" || b == "N/A" || b.empty())) r.bit_acc = parse_double(b);
        r.d_clip   = parse_double(cells[ic]);
        r.d_clip_t = parse_double(cells[it]);
        r.d_clip_d = parse_double(cells[id]);
        r.psnr     = parse_double(cells[ip]);
        r.ssim     = parse_double(cells[is]);
        r.lpips    = parse_double(cells[il]);
        rows.push_back(std::move(r));
    }
    return rows;
}

CsvTable sucps_rows_to_csv(const std::vector<SucpsRow> &rows) {
    CsvTable t;
    t.header = {"method", "bit_acc", "d_clip", "d_clipT", "d_clipD", "psnr", "ssim", "lpips"};
    for (const auto &r : rows)
        t.rows.push_back({r.method, r.bit_acc ? format_double(*r.bit_acc) : "NA", format_double(r.d_clip),
                          format_double(r.d_clip_t), format_double(r.d_clip_d), format_double(r.psnr),
                          format_double(r.ssim), format_double(r.lpips)});
    return t;
}

CsvTable sucps_scores_to_csv(const std::vector<SucpsScore> &scores) {
    CsvTable t;
    t.header = {"method", "T", "E", "F", "sUCPS"};
    for (const auto &s : scores)
        t.rows.push_back({s.method, format_double(s.traceability), format_double(s.deterrence),
                          format_double(s.fidelity), format_double(s.sucps)});
    return t;
}

} // namespace splatguard
