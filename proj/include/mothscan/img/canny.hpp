#pragma once

#include <cstdint>
#include <vector>

#include "mothscan/img/image.hpp"

namespace mothscan::img {

struct EdgeMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> mask;  // 1 = edge pixel

    EdgeMap() = default;
    EdgeMap(int w, int h) : width(w), height(h), mask(static_cast<std::size_t>(w) * h, 0) {}

    bool at(int x, int y) const { return mask[static_cast<std::size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool v) {
        mask[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
    }
    std::size_t edge_count() const;
};

/// Canny on the luma channel: 5x5 Gaussian (sigma 1.4), Sobel gradients,
/// non-maximum suppression along the quantized gradient direction, then
/// double-threshold hysteresis (8-connected). Thresholds are on a 0-255ish
/// gradient-magnitude scale (Sobel response divided by 4).
EdgeMap canny_edges(const Image& im, double low = 50.0, double high = 100.0);

/// Black/white rendering of an edge map, for PNG export.
Image edge_map_to_image(const EdgeMap& edges);

}  // namespace mothscan::img
