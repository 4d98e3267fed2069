#include "antifor/quality.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace antifor {
namespace {

void check_shapes(const RgbImage& a, const RgbImage& b, const char* op) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + std::to_string(a.height) + "x" +
                                    std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" +
                                    std::to_string(b.width));
    }
}

std::vector<double> luminance(const RgbImage& x, const ColorTransform& t) {
    const std::size_t hw = x.plane();
    std::vector<double> y(hw);
    const float* r = x.pix.data();
    const float* g = r + hw;
    const float* b = g + hw;
    for (std::size_t i = 0; i < hw; ++i) {
        y[i] = t.a[0] * r[i] + t.a[1] * g[i] + t.a[2] * b[i] + t.bias[0];
    }
    return y;
}

}  // namespace

double psnr(const RgbImage& ref, const RgbImage& test) {
    check_shapes(ref, test, "psnr");
    double se = 0.0;
    for (std::size_t i = 0; i < ref.pix.size(); ++i) {
        const double d = static_cast<double>(ref.pix[i]) - test.pix[i];
        se += d * d;
    }
    if (se == 0.0) return kPsnrCap;
    const double rmse = std::sqrt(se / static_cast<double>(ref.pix.size()));
    return std::min(kPsnrCap, 20.0 * std::log10(255.0 / rmse));
}

double ssim(const RgbImage& ref, const RgbImage& test, const ColorTransform& t) {
    check_shapes(ref, test, "ssim");
    constexpr int kWin = 8;
    constexpr int kStride = 4;
    if (ref.height < kWin || ref.width < kWin) {
        throw std::invalid_argument("ssim: image smaller than " + std::to_string(kWin) + "x" + std::to_string(kWin) +
                                    " window");
    }
    const double c1 = (0.01 * 255.0) * (0.01 * 255.0);
    const double c2 = (0.03 * 255.0) * (0.03 * 255.0);
    const std::vector<double> a = luminance(ref, t);
    const std::vector<double> b = luminance(test, t);

    const int w = ref.width;
    double total = 0.0;
    long count = 0;
    for (int y0 = 0; y0 + kWin <= ref.height; y0 += kStride) {
        for (int x0 = 0; x0 + kWin <= ref.width; x0 += kStride) {
            double ma = 0.0, mb = 0.0;
            for (int y = 0; y < kWin; ++y) {
                for (int x = 0; x < kWin; ++x) {
                    ma += a[static_cast<std::size_t>(y0 + y) * w + x0 + x];
                    mb += b[static_cast<std::size_t>(y0 + y) * w + x0 + x];
                }
            }
            const double n = kWin * kWin;
            ma /= n;
            mb /= n;
            double va = 0.0, vb = 0.0, cov = 0.0;
            for (int y = 0; y < kWin; ++y) {
                for (int x = 0; x < kWin; ++x) {
                    const double da = a[static_cast<std::size_t>(y0 + y) * w + x0 + x] - ma;
                    const double db = b[static_cast<std::size_t>(y0 + y) * w + x0 + x] - mb;
                    va += da * da;
                    vb += db * db;
                    cov += da * db;
                }
            }
            va /= n - 1;
            vb /= n - 1;
            cov /= n - 1;
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

QualityReport perturbation_norms(const RgbImage& x, const RgbImage& x_adv, const ColorTransform& t) {
    check_shapes(x, x_adv, "perturbation_norms");
    QualityReport q;
    const std::size_t hw = x.plane();
    double l2 = 0.0;
    for (int c = 0; c < 3; ++c) {
        double mx = 0.0;
        const float* a = x.pix.data() + static_cast<std::size_t>(c) * hw;
        const float* b = x_adv.pix.data() + static_cast<std::size_t>(c) * hw;
        for (std::size_t i = 0; i < hw; ++i) {
            const double d = std::abs(static_cast<double>(b[i]) - a[i]);
            mx = std::max(mx, d);
            l2 += d * d;
        }
        q.linf_rgb[static_cast<std::size_t>(c)] = mx;
    }
    q.l2 = std::sqrt(l2);
    const YccImage ya = rgb_to_ycc(x, t);
    const YccImage yb = rgb_to_ycc(x_adv, t);
    for (int c = 0; c < 3; ++c) {
        double mx = 0.0;
        const float* a = ya.pix.data() + static_cast<std::size_t>(c) * hw;
        const float* b = yb.pix.data() + static_cast<std::size_t>(c) * hw;
        for (std::size_t i = 0; i < hw; ++i) mx = std::max(mx, std::abs(static_cast<double>(b[i]) - a[i]));
        q.linf_ycc[static_cast<std::size_t>(c)] = mx;
    }
    return q;
}

QualityReport quality_report(const RgbImage& x, const RgbImage& x_adv, const ColorTransform& t) {
    QualityReport q = perturbation_norms(x, x_adv, t);
    q.psnr_db = psnr(x, x_adv);
    q.ssim = ssim(x, x_adv, t);
    return q;
}

}  // namespace antifor
