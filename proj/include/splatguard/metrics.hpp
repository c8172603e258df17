// Copyright Contributors to the splatguard project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "splatguard/csv.hpp"
#include "splatguard/editor.hpp"
#include "splatguard/image.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace splatguard {

inline constexpr double kPsnrCap = 99.0;

/// PSNR in dB with peak 1; identical images report kPsnrCap.
double psnr(const Image &a, const Image &b);

/// Mean SSIM over all valid 11x11 windows (Gaussian weights, sigma 1.5) and channels.
double ssim(const Image &a, const Image &b);

/// Mean squared editor-encoder feature distance.
double feat_lpips(const Image &a, const Image &b, const SurrogateEditor &editor);

inline constexpr int kEmbedDim = 128;

/// Frozen image and text embedders sharing one unit-norm feature space.
/// Images: 8x8 area pooling, then random Fourier features cos(P x + b).
/// Text: normalized sum of per-word Gaussian vectors keyed by a word hash.
class EmbedderPair {
public:
    explicit EmbedderPair(std::uint64_t seed = 7, double bandwidth = 1.0);

    std::vector<double> image(const Image &img) const;
    std::vector<double> text(const std::string &prompt) const;

private:
    std::uint64_t seed_;
    std::vector<double> proj_;  // kEmbedDim x 192
    std::vector<double> phase_; // kEmbedDim
};

double cosine(const std::vector<double> &a, const std::vector<double> &b);

struct ClipTriplet {
    double orig   = 0.0;
    double method = 0.0;
    double diff   = 0.0; ///< orig - method
};

struct ClipMetrics {
    ClipTriplet clip, clip_t, clip_d;
};

/// Edit-deterrence metrics averaged over aligned view lists. A zero-length image or
/// text direction has cosine 0.
ClipMetrics clip_metrics(const std::vector<Image> &edited_orig, const std::vector<Image> &edited_method,
                         const std::vector<Image> &src_orig, const std::vector<Image> &src_method,
                         const std::string &prompt_src, const std::string &prompt_tgt,
                         const EmbedderPair &embedders);

struct SucpsRow {
    std::string method;
    std::optional<double> bit_acc; ///< absent for methods without a decoder
    double d_clip = 0.0, d_clip_t = 0.0, d_clip_d = 0.0;
    double psnr = 0.0, ssim = 0.0, lpips = 0.0;
};

struct SucpsScore {
    std::string method;
    double traceability = 0.0;
    double deterrence   = 0.0;
    double fidelity     = 0.0;
    double sucps        = 0.0;
};

/// Scores every row with normalizers taken over all rows.
std::vector<SucpsScore> sucps(const std::vector<SucpsRow> &rows);

/// Scores each candidate with normalizers taken over the reference rows plus that
/// candidate alone. Ablation variants are compared this way against a fixed baseline pool.
std::vector<SucpsScore> sucps_against(const std::vector<SucpsRow> &reference, const std::vector<SucpsRow> &candidates);

/// Header: method,bit_acc,d_clip,d_clipT,d_clipD,psnr,ssim,lpips (bit_acc may be NA).
std::vector<SucpsRow> sucps_rows_from_csv(const CsvTable &table);
CsvTable sucps_rows_to_csv(const std::vector<SucpsRow> &rows);
/// Header: method,T,E,F,sUCPS.
CsvTable sucps_scores_to_csv(const std::vector<SucpsScore> &scores);

} // namespace splatguard
