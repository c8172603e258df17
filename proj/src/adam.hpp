// Copyright Contributors to the splatguard project
// SPDX-License-Identifier: Apache-2.0
//
// Per-parameter Adam over the non-position groups of a scene.
#pragma once

#include "splatguard/renderer.hpp"
#include "splatguard/scene.hpp"

#include <array>
#include <cmath>
#include <vector>

namespace splatguard {

struct AdamSettings {
    GroupValues learning_rate{};
    std::array<bool, kParamGroupCount> enabled{};
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps   = 1e-8;
};

class Adam {
public:
    Adam(std::size_t n, const AdamSettings &settings) : s_(settings), m_(n, ParamVector{}), v_(n, ParamVector{}) {}

    void step(GaussianScene &scene, const GradientBundle &g) {
        ++t_;
        const double bc1 = 1.0 - std::pow(s_.beta1, t_);
        const double bc2 = 1.0 - std::pow(s_.beta2, t_);
        const int rot    = static_cast<int>(ParamGroup::Rotation);
        const bool renormalize = s_.enabled[rot] && s_.learning_rate[rot] > 0.0;
        for (std::size_t i = 0; i < scene.size(); ++i) {
            ParamVector &p = scene.gaussians[i].params;
            for (int k = 1; k < kParamGroupCount; ++k) { // group 0 is position, always frozen
                const double lr = s_.learning_rate[k];
                if (!s_.enabled[k] || lr == 0.0) continue;
                for (int j = kGroupOffset[k]; j < kGroupOffset[k] + kGroupSize[k]; ++j) {
                    m_[i][j] = s_.beta1 * m_[i][j] + (1.0 - s_.beta1) * g[i][j];
                    v_[i][j] = s_.beta2 * v_[i][j] + (1.0 - s_.beta2) * g[i][j] * g[i][j];
                    p[j] -= lr * (m_[i][j] / bc1) / (std::sqrt(v_[i][j] / bc2) + s_.eps);
                }
            }
            if (renormalize) scene.gaussians[i].normalize_rotation();
        }
    }

private:
    AdamSettings s_;
    std::vector<ParamVector> m_, v_;
    int t_ = 0;
};

} // namespace splatguard
