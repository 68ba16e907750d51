#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace mothscan {

struct PixelPoint {
    int x = 0;
    int y = 0;
    friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

/// Axis-aligned rectangle in pixel coordinates. (x, y) is the top-left
/// corner; the box covers columns [x, x+w) and rows [y, y+h).
struct BoundingBox {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    long long area() const { return static_cast<long long>(w) * h; }
    int right() const { return x + w; }
    int bottom() const { return y + h; }

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

inline long long intersection_area(const BoundingBox& a, const BoundingBox& b) {
    const long long iw = std::max(0, std::min(a.right(), b.right()) - std::max(a.x, b.x));
    const long long ih = std::max(0, std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y));
    return iw * ih;
}

/// Round to nearest integer, halves going to the even neighbour.
inline long round_half_even(double v) {
    const double f = std::floor(v);
    const double frac = v - f;
    if (frac < 0.5) return static_cast<long>(f);
    if (frac > 0.5) return static_cast<long>(f) + 1;
    const long lo = static_cast<long>(f);
    return (lo % 2 == 0) ? lo : lo + 1;
}

}  // namespace mothscan
