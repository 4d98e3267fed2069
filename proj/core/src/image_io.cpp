#include "antifor/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <vector>

namespace antifor {
namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

RgbImage load_image(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw std::runtime_error("cannot open image file: " + path);

    png_byte header[8];
    if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8) != 0) {
        throw std::runtime_error("not a PNG file: " + path);
    }

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("png_create_info_struct failed");
    }
    std::vector<png_bytep> row_ptrs;
    std::vector<png_byte> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("corrupt PNG file: " + path);
    }
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);

    const int h = static_cast<int>(png_get_image_height(png, info));
    const int w = static_cast<int>(png_get_image_width(png, info));
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    if (rowbytes != static_cast<std::size_t>(w) * 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("unsupported PNG layout in " + path);
    }
    rows.resize(static_cast<std::size_t>(h) * rowbytes);
    row_ptrs.resize(static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y) row_ptrs[static_cast<std::size_t>(y)] = rows.data() + static_cast<std::size_t>(y) * rowbytes;
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    RgbImage img(h, w);
    const std::size_t hw = img.plane();
    for (int y = 0; y < h; ++y) {
        const png_byte* row = rows.data() + static_cast<std::size_t>(y) * rowbytes;
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            img.pix[i] = row[x * 3];
            img.pix[hw + i] = row[x * 3 + 1];
            img.pix[2 * hw + i] = row[x * 3 + 2];
        }
    }
    return img;
}

void save_image(const RgbImage& x, const std::string& path) {
    if (!image_in_box(x)) {
        throw std::invalid_argument("save_image: values outside [0,255]; project to the feasible box first");
    }
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw std::runtime_error("cannot write image file: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("PNG write failed: " + path);
    }
    png_init_io(png, fp.get());
    // Pinned settings so identical pixels give identical bytes.
    png_set_compression_level(png, 6);
    png_set_filter(png, 0, PNG_FILTER_SUB);
    png_set_IHDR(png, info, static_cast<png_uint_32>(x.width), static_cast<png_uint_32>(x.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    const std::size_t hw = x.plane();
    std::vector<png_byte> row(static_cast<std::size_t>(x.width) * 3);
    for (int y = 0; y < x.height; ++y) {
        for (int xx = 0; xx < x.width; ++xx) {
            const std::size_t i = static_cast<std::size_t>(y) * x.width + xx;
            row[static_cast<std::size_t>(xx) * 3] = static_cast<png_byte>(std::lround(x.pix[i]));
            row[static_cast<std::size_t>(xx) * 3 + 1] = static_cast<png_byte>(std::lround(x.pix[hw + i]));
            row[static_cast<std::size_t>(xx) * 3 + 2] = static_cast<png_byte>(std::lround(x.pix[2 * hw + i]));
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, info);
    png_destroy_write_struct(&png, &info);
}

RgbImage resize_bilinear(const RgbImage& x, int height, int width) {
    if (height <= 0 || width <= 0) throw std::invalid_argument("resize_bilinear: target extents must be positive");
    if (height == x.height && width == x.width) return x;
    RgbImage out(height, width);
    const std::size_t src_hw = x.plane();
    const std::size_t dst_hw = out.plane();
    const double sy = static_cast<double>(x.height) / height;
    const double sx = static_cast<double>(x.width) / width;
    for (int c = 0; c < 3; ++c) {
        const float* src = x.pix.data() + static_cast<std::size_t>(c) * src_hw;
        float* dst = out.pix.data() + static_cast<std::size_t>(c) * dst_hw;
        for (int y = 0; y < height; ++y) {
            const double fy = (y + 0.5) * sy - 0.5;
            const int y0 = std::max(0, std::min(x.height - 1, static_cast<int>(std::floor(fy))));
            const int y1 = std::min(x.height - 1, y0 + 1);
            const double wy = std::max(0.0, std::min(1.0, fy - y0));
            for (int xx = 0; xx < width; ++xx) {
                const double fx = (xx + 0.5) * sx - 0.5;
                const int x0 = std::max(0, std::min(x.width - 1, static_cast<int>(std::floor(fx))));
                const int x1 = std::min(x.width - 1, x0 + 1);
                const double wx = std::max(0.0, std::min(1.0, fx - x0));
                const double top = src[static_cast<std::size_t>(y0) * x.width + x0] * (1.0 - wx) +
                                   src[static_cast<std::size_t>(y0) * x.width + x1] * wx;
                const double bot = src[static_cast<std::size_t>(y1) * x.width + x0] * (1.0 - wx) +
                                   src[static_cast<std::size_t>(y1) * x.width + x1] * wx;
                dst[static_cast<std::size_t>(y) * width + xx] = static_cast<float>(top * (1.0 - wy) + bot * wy);
            }
        }
    }
    return out;
}

}  // namespace antifor
