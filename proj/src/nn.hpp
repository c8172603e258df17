// Copyright Contributors to the splatguard project
// SPDX-License-Identifier: Apache-2.0
//
// Small dense layers over Image tensors (H x W x C) with hand-written VJPs.
#pragma once

#include "splatguard/image.hpp"

#include <vector>

namespace splatguard::nn {

/// Square convolution, zero padding. Weight layout [out][in][ky][kx]; bias may be empty.
struct Conv {
    int in_ch = 0, out_ch = 0, kernel = 3, stride = 1, pad = 1;
    std::vector<double> weight;
    std::vector<double> bias;

    int out_size(int n) const { return (n + 2 * pad - kernel) / stride + 1; }
    double w(int o, int i, int ky, int kx) const {
        return weight[((static_cast<std::size_t>(o) * in_ch + i) * kernel + ky) * kernel + kx];
    }
};

Image conv_forward(const Conv &conv, const Image &in);
/// Gradient with respect to the input, given the output gradient.
Image conv_vjp(const Conv &conv, const Image &dout, int in_h, int in_w);

/// Transposed convolution with kernel == stride (non-overlapping patches), no bias.
/// Weight layout [in][out][ky][kx].
struct PatchUp {
    int in_ch = 0, out_ch = 0, factor = 2;
    std::vector<double> weight;
};

Image patchup_forward(const PatchUp &up, const Image &in);
Image patchup_vjp(const PatchUp &up, const Image &dout);

Image avgpool2_forward(const Image &in);
Image avgpool2_vjp(const Image &dout);

/// In place: x = tanh(x).
void tanh_inplace(Image &x);
/// dx = dy * (1 - y^2) where y = tanh output.
Image tanh_vjp(const Image &y, const Image &dy);

} // namespace splatguard::nn
