#include <cmath>
#include <random>

#include "antifor/quality.hpp"
#include "doctest.h"

using namespace antifor;

namespace {

RgbImage random_image(int h, int w, std::uint64_t seed) {
    RgbImage img(h, w);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, 255.0f);
    for (float& p : img.pix) p = u(rng);
    return img;
}

}  // namespace

TEST_CASE("identical images hit the PSNR cap, SSIM 1 and zero norms") {
    const RgbImage x = random_image(16, 16, 1);
    const QualityReport q = quality_report(x, x);
    CHECK(q.psnr_db == kPsnrCap);
    CHECK(q.ssim == doctest::Approx(1.0));
    CHECK(q.l2 == 0.0);
    for (int c = 0; c < 3; ++c) {
        CHECK(q.linf_rgb[static_cast<std::size_t>(c)] == 0.0);
        CHECK(q.linf_ycc[static_cast<std::size_t>(c)] == doctest::Approx(0.0).epsilon(1e-9));
    }
}

TEST_CASE("PSNR of a uniform unit offset is 20*log10(255)") {
    const RgbImage x = random_image(16, 16, 2);
    RgbImage y = x;
    for (float& p : y.pix) p += 1.0f;
    CHECK(psnr(x, y) == doctest::Approx(20.0 * std::log10(255.0)).epsilon(1e-6));
}

TEST_CASE("PSNR decreases as the perturbation grows") {
    const RgbImage x = random_image(16, 16, 3);
    RgbImage small = x, large = x;
    for (float& p : small.pix) p += 1.0f;
    for (float& p : large.pix) p += 4.0f;
    CHECK(psnr(x, small) > psnr(x, large));
}

TEST_CASE("SSIM is in [0,1] and decreases with noise amplitude") {
    const RgbImage x = random_image(32, 32, 4);
    std::mt19937_64 rng(5);
    std::normal_distribution<float> n1(0.0f, 2.0f), n2(0.0f, 20.0f);
    RgbImage a = x, b = x;
    for (float& p : a.pix) p += n1(rng);
    for (float& p : b.pix) p += n2(rng);
    const double sa = ssim(x, a);
    const double sb = ssim(x, b);
    CHECK(sa <= 1.0);
    CHECK(sb >= -1.0);
    CHECK(sa > sb);
}

TEST_CASE("SSIM rejects images smaller than the window") {
    const RgbImage x = random_image(4, 4, 6);
    CHECK_THROWS(ssim(x, x));
}

TEST_CASE("per-channel norms report the exact maxima") {
    const RgbImage x = random_image(8, 8, 7);
    RgbImage y = x;
    y.at(0, 3, 3) += 2.0f;
    y.at(1, 1, 1) -= 5.0f;
    y.at(2, 0, 0) += 0.5f;
    const QualityReport q = perturbation_norms(x, y);
    CHECK(q.linf_rgb[0] == doctest::Approx(2.0));
    CHECK(q.linf_rgb[1] == doctest::Approx(5.0));
    CHECK(q.linf_rgb[2] == doctest::Approx(0.5));
    CHECK(q.l2 == doctest::Approx(std::sqrt(4.0 + 25.0 + 0.25)));
}

TEST_CASE("quality report rejects shape mismatches") {
    CHECK_THROWS(quality_report(random_image(8, 8, 8), random_image(8, 9, 9)));
}
