// Copyright Contributors to the splatguard project
// SPDX-License-Identifier: Apache-2.0
//
#include "nn.hpp"

#include "splatguard/error.hpp"

#include <cmath>

namespace splatguard::nn {

Image conv_forward(const Conv &conv, const Image &in) {
    require(in.channels() == conv.in_ch, ErrorCode::ShapeMismatch, "conv: channel count mismatch");
    const int oh = conv.out_size(in.height()), ow = conv.out_size(in.width());
    Image out(oh, ow, conv.out_ch);
    for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox)
            for (int o = 0; o < conv.out_ch; ++o) {
                double acc = conv.bias.empty() ? 0.0 : conv.bias[o];
                for (int ky = 0; ky < conv.kernel; ++ky) {
                    const int iy = oy * conv.stride - conv.pad + ky;
                    if (iy < 0 || iy >= in.height()) continue;
                    for (int kx = 0; kx < conv.kernel; ++kx) {
                        const int ix = ox * conv.stride - conv.pad + kx;
                        if (ix < 0 || ix >= in.width()) continue;
                        for (int i = 0; i < conv.in_ch; ++i) acc += conv.w(o, i, ky, kx) * in.at(iy, ix, i);
                    }
                }
                out.at(oy, ox, o) = acc;
            }
    return out;
}

Image conv_vjp(const Conv &conv, const Image &dout, int in_h, int in_w) {
    Image din(in_h, in_w, conv.in_ch);
    for (int oy = 0; oy < dout.height(); ++oy)
        for (int ox = 0; ox < dout.width(); ++ox)
            for (int o = 0; o < conv.out_ch; ++o) {
                const double g = dout.at(oy, ox, o);
                if (g == 0.0) continue;
                for (int ky = 0; ky < conv.kernel; ++ky) {
                    const int iy = oy * conv.stride - conv.pad + ky;
                    if (iy < 0 || iy >= in_h) continue;
                    for (int kx = 0; kx < conv.kernel; ++kx) {
                        const int ix = ox * conv.stride - conv.pad + kx;
                        if (ix < 0 || ix >= in_w) continue;
                        for (int i = 0; i < conv.in_ch; ++i) din.at(iy, ix, i) += conv.w(o, i, ky, kx) * g;
                    }
                }
            }
    return din;
}

Image patchup_forward(const PatchUp &up, const Image &in) {
    require(in.channels() == up.in_ch, ErrorCode::ShapeMismatch, "patchup: channel count mismatch");
    const int f = up.factor;
    Image out(in.height() * f, in.width() * f, up.out_ch);
    for (int y = 0; y < in.height(); ++y)
        for (int x = 0; x < in.width(); ++x)
            for (int i = 0; i < up.in_ch; ++i) {
                const double v = in.at(y, x, i);
                for (int o = 0; o < up.out_ch; ++o)
                    for (int ky = 0; ky < f; ++ky)
                        for (int kx = 0; kx < f; ++kx)
                            out.at(y * f + ky, x * f + kx, o) +=
                                v * up.weight[((static_cast<std::size_t>(i) * up.out_ch + o) * f + ky) * f + kx];
            }
    return out;
}

Image patchup_vjp(const PatchUp &up, const Image &dout) {
    const int f = up.factor;
    Image din(dout.height() / f, dout.width() / f, up.in_ch);
    for (int y = 0; y < din.height(); ++y)
        for (int x = 0; x < din.width(); ++x)
            for (int i = 0; i < up.in_ch; ++i) {
                double acc = 0.0;
                for (int o = 0; o < up.out_ch; ++o)
                    for (int ky = 0; ky < f; ++ky)
                        for (int kx = 0; kx < f; ++kx)
                            acc += dout.at(y * f + ky, x * f + kx, o) *
                                   up.weight[((static_cast<std::size_t>(i) * up.out_ch + o) * f + ky) * f + kx];
                din.at(y, x, i) = acc;
            }
    return din;
}

Image avgpool2_forward(const Image &in) {
    Image out(in.height() / 2, in.width() / 2, in.channels());
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x)
            for (int c = 0; c < in.channels(); ++c)
                out.at(y, x, c) = 0.25 * (in.at(2 * y, 2 * x, c) + in.at(2 * y, 2 * x + 1, c) +
                                          in.at(2 * y + 1, 2 * x, c) + in.at(2 * y + 1, 2 * x + 1, c));
    return out;
}

Image avgpool2_vjp(const Image &dout) {
    Image din(dout.height() * 2, dout.width() * 2, dout.channels());
    for (int y = 0; y < din.height(); ++y)
        for (int x = 0; x < din.width(); ++x)
            for (int c = 0; c < din.channels(); ++c) din.at(y, x, c) = 0.25 * dout.at(y / 2, x / 2, c);
    return din;
}

void tanh_inplace(Image &x) {
    for (double &v : x.data()) v = std::tanh(v);
}

Image tanh_vjp(const Image &y, const Image &dy) {
    Image dx(y.height(), y.width(), y.channels());
    for (std::size_t i = 0; i < y.size(); ++i) dx.data()[i] = dy.data()[i] * (1.0 - y.data()[i] * y.data()[i]);
    return dx;
}

} // namespace splatguard::nn
