#pragma once

#include <string>

#include "antifor/image.hpp"

namespace antifor {

// Reads any 8/16-bit PNG and returns real-valued 8-bit RGB intensities.
RgbImage load_image(const std::string& path);

// Quantizes to 8-bit (round half away from zero) and writes a deterministic
// RGB PNG. The input must already be inside [0,255].
void save_image(const RgbImage& x, const std::string& path);

RgbImage resize_bilinear(const RgbImage& x, int height, int width);

}  // namespace antifor
