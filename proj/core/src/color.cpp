#include "antifor/color.hpp"

#include <cmath>
#include <stdexcept>

namespace antifor {
namespace {

std::array<double, 9> invert3(const std::array<double, 9>& m) {
    const double det = m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
                       m[2] * (m[3] * m[7] - m[4] * m[6]);
    if (std::abs(det) < 1e-12) throw std::invalid_argument("color transform matrix is singular");
    const double inv = 1.0 / det;
    return {
        (m[4] * m[8] - m[5] * m[7]) * inv, (m[2] * m[7] - m[1] * m[8]) * inv, (m[1] * m[5] - m[2] * m[4]) * inv,
        (m[5] * m[6] - m[3] * m[8]) * inv, (m[0] * m[8] - m[2] * m[6]) * inv, (m[2] * m[3] - m[0] * m[5]) * inv,
        (m[3] * m[7] - m[4] * m[6]) * inv, (m[1] * m[6] - m[0] * m[7]) * inv, (m[0] * m[4] - m[1] * m[3]) * inv,
    };
}

}  // namespace

ColorTransform ColorTransform::from(const std::array<double, 9>& a, const std::array<double, 3>& b) {
    ColorTransform t;
    t.a = a;
    t.bias = b;
    t.a_inv = invert3(a);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) t.a_inv_t[static_cast<std::size_t>(i) * 3 + j] = t.a_inv[static_cast<std::size_t>(j) * 3 + i];
    return t;
}

const ColorTransform& ColorTransform::bt601() {
    static const ColorTransform t = ColorTransform::from(
        {0.2568, 0.5041, 0.0979, -0.1482, -0.2910, 0.4392, 0.4392, -0.3678, -0.0714}, {16.0, 128.0, 128.0});
    return t;
}

const ColorTransform& ColorTransform::identity() {
    static const ColorTransform t =
        ColorTransform::from({1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0}, {0.0, 0.0, 0.0});
    return t;
}

YccImage rgb_to_ycc(const RgbImage& x, const ColorTransform& t) {
    YccImage out(x.height, x.width);
    const std::size_t hw = x.plane();
    const float* r = x.pix.data();
    const float* g = r + hw;
    const float* b = g + hw;
    for (int c = 0; c < 3; ++c) {
        const double a0 = t.a[static_cast<std::size_t>(c) * 3];
        const double a1 = t.a[static_cast<std::size_t>(c) * 3 + 1];
        const double a2 = t.a[static_cast<std::size_t>(c) * 3 + 2];
        const double add = t.bias[static_cast<std::size_t>(c)];
        float* dst = out.pix.data() + static_cast<std::size_t>(c) * hw;
        for (std::size_t i = 0; i < hw; ++i) {
            dst[i] = static_cast<float>(a0 * r[i] + a1 * g[i] + a2 * b[i] + add);
        }
    }
    return out;
}

RgbImage ycc_to_rgb(const YccImage& x, const ColorTransform& t) {
    RgbImage out(x.height, x.width);
    const std::size_t hw = x.plane();
    const float* y = x.pix.data();
    const float* cb = y + hw;
    const float* cr = cb + hw;
    const double b0 = t.bias[0], b1 = t.bias[1], b2 = t.bias[2];
    for (int c = 0; c < 3; ++c) {
        const double a0 = t.a_inv[static_cast<std::size_t>(c) * 3];
        const double a1 = t.a_inv[static_cast<std::size_t>(c) * 3 + 1];
        const double a2 = t.a_inv[static_cast<std::size_t>(c) * 3 + 2];
        float* dst = out.pix.data() + static_cast<std::size_t>(c) * hw;
        for (std::size_t i = 0; i < hw; ++i) {
            dst[i] = static_cast<float>(a0 * (y[i] - b0) + a1 * (cb[i] - b1) + a2 * (cr[i] - b2));
        }
    }
    return out;
}

RgbImage apply_ycc_perturbation(const RgbImage& x, const YccImage& zeta, const ColorTransform& t) {
    if (!(x.height == zeta.height && x.width == zeta.width)) {
        throw std::invalid_argument("apply_ycc_perturbation: image " + std::to_string(x.height) + "x" +
                                    std::to_string(x.width) + " vs perturbation " + std::to_string(zeta.height) +
                                    "x" + std::to_string(zeta.width));
    }
    RgbImage out(x.height, x.width);
    const std::size_t hw = x.plane();
    const float* z0 = zeta.pix.data();
    const float* z1 = z0 + hw;
    const float* z2 = z1 + hw;
    for (int c = 0; c < 3; ++c) {
        const double a0 = t.a_inv[static_cast<std::size_t>(c) * 3];
        const double a1 = t.a_inv[static_cast<std::size_t>(c) * 3 + 1];
        const double a2 = t.a_inv[static_cast<std::size_t>(c) * 3 + 2];
        const float* src = x.pix.data() + static_cast<std::size_t>(c) * hw;
        float* dst = out.pix.data() + static_cast<std::size_t>(c) * hw;
        for (std::size_t i = 0; i < hw; ++i) {
            dst[i] = static_cast<float>(src[i] + (a0 * z0[i] + a1 * z1[i] + a2 * z2[i]));
        }
    }
    return out;
}

YccImage transport_gradient(const RgbImage& g_rgb, const ColorTransform& t, GradientTransport mode) {
    YccImage out(g_rgb.height, g_rgb.width);
    const std::size_t hw = g_rgb.plane();
    const float* gr = g_rgb.pix.data();
    const float* gg = gr + hw;
    const float* gb = gg + hw;
    for (int c = 0; c < 3; ++c) {
        double m0, m1, m2;
        if (mode == GradientTransport::Exact) {
            m0 = t.a_inv_t[static_cast<std::size_t>(c) * 3];
            m1 = t.a_inv_t[static_cast<std::size_t>(c) * 3 + 1];
            m2 = t.a_inv_t[static_cast<std::size_t>(c) * 3 + 2];
        } else {
            m0 = 1.0 / t.a[static_cast<std::size_t>(c) * 3];
            m1 = 1.0 / t.a[static_cast<std::size_t>(c) * 3 + 1];
            m2 = 1.0 / t.a[static_cast<std::size_t>(c) * 3 + 2];
        }
        float* dst = out.pix.data() + static_cast<std::size_t>(c) * hw;
        for (std::size_t i = 0; i < hw; ++i) {
            dst[i] = static_cast<float>(m0 * gr[i] + m1 * gg[i] + m2 * gb[i]);
        }
    }
    return out;
}

RgbImage project_box(const RgbImage& x) {
    RgbImage out = x;
    for (float& v : out.pix) v = v < 0.0f ? 0.0f : (v > 255.0f ? 255.0f : v);
    return out;
}

}  // namespace antifor
