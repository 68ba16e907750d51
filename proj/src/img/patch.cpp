#include "mothscan/img/patch.hpp"

#include <algorithm>

#include "mothscan/errors.hpp"

namespace mothscan::img {

BoundingBox window_for_center(int width, int height, PixelPoint center, int side) {
    if (side <= 0 || side > width || side > height)
        throw ExtractionError("window_for_center: side " + std::to_string(side) +
                              " does not fit a " + std::to_string(width) + "x" +
                              std::to_string(height) + " image");
    const int x0 = std::clamp(center.x - side / 2, 0, width - side);
    const int y0 = std::clamp(center.y - side / 2, 0, height - side);
    return {x0, y0, side, side};
}

void extract_square_patch_into(const Image& im, PixelPoint center, int side, double* dst) {
    const BoundingBox win = window_for_center(im.width, im.height, center, side);
    const std::size_t plane = static_cast<std::size_t>(side) * side;
    for (int y = 0; y < side; ++y) {
        const std::uint8_t* row =
            im.data.data() + (static_cast<std::size_t>(win.y + y) * im.width + win.x) * 3;
        double* r = dst + static_cast<std::size_t>(y) * side;
        double* g = r + plane;
        double* b = g + plane;
        for (int x = 0; x < side; ++x) {
            r[x] = row[x * 3 + 0];
            g[x] = row[x * 3 + 1];
            b[x] = row[x * 3 + 2];
        }
    }
}

Patch extract_square_patch(const Image& im, PixelPoint center, int side) {
    Patch p(side);
    extract_square_patch_into(im, center, side, p.data.data());
    return p;
}

PixelPoint bbox_to_square_center(const BoundingBox& bb) {
    return {static_cast<int>(round_half_even(bb.x + bb.w / 2.0)),
            static_cast<int>(round_half_even(bb.y + bb.h / 2.0))};
}

Patch rotate90(const Patch& p) {
    Patch out(p.side);
    const int n = p.side;
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) out.at(c, y, x) = p.at(c, x, n - 1 - y);
    return out;
}

Patch horizontal_flip(const Patch& p) {
    Patch out(p.side);
    const int n = p.side;
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) out.at(c, y, x) = p.at(c, y, n - 1 - x);
    return out;
}

Patch apply_dihedral(const Patch& p, int rot, bool flip) {
    Patch out = p;
    for (int i = 0; i < (rot % 4 + 4) % 4; ++i) out = rotate90(out);
    if (flip) out = horizontal_flip(out);
    return out;
}

}  // namespace mothscan::img
