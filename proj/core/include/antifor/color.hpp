#pragma once

#include <array>

#include "antifor/image.hpp"

namespace antifor {

// Affine RGB <-> YCbCr conversion: ycc = A * rgb + b. The inverse and its
// transpose are precomputed in double precision.
struct ColorTransform {
    std::array<double, 9> a{};       // row-major 3x3
    std::array<double, 3> bias{};
    std::array<double, 9> a_inv{};
    std::array<double, 9> a_inv_t{};

    static ColorTransform from(const std::array<double, 9>& a, const std::array<double, 3>& b);
    // The BT.601-style studio-range constants used throughout.
    static const ColorTransform& bt601();
    // A = I, b = 0; reduces the transformed-domain attack to its RGB form.
    static const ColorTransform& identity();
};

enum class GradientTransport {
    Exact,         // (A^-1)^T * g, the chain rule for x = x0 + A^-1 * zeta
    Reciprocal,    // elementwise-reciprocal matrix (1 ./ A) * g
};

YccImage rgb_to_ycc(const RgbImage& x, const ColorTransform& t = ColorTransform::bt601());
RgbImage ycc_to_rgb(const YccImage& x, const ColorTransform& t = ColorTransform::bt601());

// x + A^-1 * zeta (the bias cancels). Not projected to [0,255].
RgbImage apply_ycc_perturbation(const RgbImage& x, const YccImage& zeta,
                                const ColorTransform& t = ColorTransform::bt601());

// Transport a per-pixel RGB gradient field into the YCbCr domain.
YccImage transport_gradient(const RgbImage& g_rgb, const ColorTransform& t = ColorTransform::bt601(),
                            GradientTransport mode = GradientTransport::Exact);

// Per-value clamp to [0,255].
RgbImage project_box(const RgbImage& x);

}  // namespace antifor
