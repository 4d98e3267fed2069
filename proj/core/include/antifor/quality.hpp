#pragma once

#include <array>

#include "antifor/color.hpp"
#include "antifor/image.hpp"

namespace antifor {

struct QualityReport {
    double psnr_db = 0.0;
    double ssim = 0.0;
    std::array<double, 3> linf_rgb{};  // per RGB channel
    std::array<double, 3> linf_ycc{};  // per Y, Cb, Cr channel
    double l2 = 0.0;
};

// PSNR is capped at this sentinel for identical images.
constexpr double kPsnrCap = 100.0;

double psnr(const RgbImage& ref, const RgbImage& test);

// Windowed SSIM (8x8 windows, stride 4, dynamic range 255) on the luminance
// plane computed with the Y row of the color transform.
double ssim(const RgbImage& ref, const RgbImage& test,
            const ColorTransform& t = ColorTransform::bt601());

QualityReport perturbation_norms(const RgbImage& x, const RgbImage& x_adv,
                                 const ColorTransform& t = ColorTransform::bt601());

// Full report: PSNR + SSIM + norms.
QualityReport quality_report(const RgbImage& x, const RgbImage& x_adv,
                             const ColorTransform& t = ColorTransform::bt601());

}  // namespace antifor
