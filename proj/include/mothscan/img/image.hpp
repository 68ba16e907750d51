#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mothscan/geometry.hpp"

namespace mothscan::img {

/// 8-bit RGB image, row-major, interleaved channels.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // size = width * height * 3

    Image() = default;
    Image(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

    static Image filled(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b);

    bool empty() const { return width == 0 || height == 0; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

    std::uint8_t at(int x, int y, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    std::uint8_t& at(int x, int y, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }

    bool contains(const BoundingBox& b) const {
        return b.x >= 0 && b.y >= 0 && b.w > 0 && b.h > 0 && b.right() <= width &&
               b.bottom() <= height;
    }

    friend bool operator==(const Image&, const Image&) = default;
};

/// Rec. 601 luma of one pixel on the 0-255 scale.
inline double luminance(const Image& im, int x, int y) {
    return 0.299 * im.at(x, y, 0) + 0.587 * im.at(x, y, 1) + 0.114 * im.at(x, y, 2);
}

Image rotate180(const Image& im);

/// Reads a PNG or JPEG file (sniffed from the file signature) as 8-bit RGB.
Image read_image(const std::string& path);

void write_png(const Image& im, const std::string& path);

}  // namespace mothscan::img
