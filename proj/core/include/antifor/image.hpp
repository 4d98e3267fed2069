#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace antifor {

// Planar real-valued image, channels stored [c][y][x]. RGB images are valid
// (in the feasible box) when every value lies in [0,255]; intermediate attack
// iterates may leave the box until projected.
struct RgbImage {
    int height = 0;
    int width = 0;
    std::vector<float> pix;  // 3 * height * width

    RgbImage() = default;
    RgbImage(int h, int w, float fill = 0.0f)
        : height(h), width(w), pix(static_cast<std::size_t>(3) * h * w, fill) {
        if (h <= 0 || w <= 0) throw std::invalid_argument("image extents must be positive");
    }

    std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
    float& at(int c, int y, int x) { return pix[(static_cast<std::size_t>(c) * height + y) * width + x]; }
    float at(int c, int y, int x) const { return pix[(static_cast<std::size_t>(c) * height + y) * width + x]; }
    bool same_shape(const RgbImage& o) const { return height == o.height && width == o.width; }
};

struct YccImage {
    int height = 0;
    int width = 0;
    std::vector<float> pix;  // planes Y, Cb, Cr

    YccImage() = default;
    YccImage(int h, int w, float fill = 0.0f)
        : height(h), width(w), pix(static_cast<std::size_t>(3) * h * w, fill) {
        if (h <= 0 || w <= 0) throw std::invalid_argument("image extents must be positive");
    }

    std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
    float& at(int c, int y, int x) { return pix[(static_cast<std::size_t>(c) * height + y) * width + x]; }
    float at(int c, int y, int x) const { return pix[(static_cast<std::size_t>(c) * height + y) * width + x]; }
    bool same_shape(const YccImage& o) const { return height == o.height && width == o.width; }
};

inline bool image_in_box(const RgbImage& x) {
    for (float v : x.pix) {
        if (!(v >= 0.0f && v <= 255.0f)) return false;
    }
    return true;
}

}  // namespace antifor
