#include "mothscan/img/canny.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "mothscan/errors.hpp"

namespace mothscan::img {

std::size_t EdgeMap::edge_count() const {
    std::size_t n = 0;
    for (auto v : mask) n += v;
    return n;
}

namespace {

// Row-major double grid with replicated borders on access.
struct Grid {
    int w = 0, h = 0;
    std::vector<double> v;
    Grid(int width, int height) : w(width), h(height), v(static_cast<std::size_t>(width) * height, 0.0) {}
    double& at(int x, int y) { return v[static_cast<std::size_t>(y) * w + x]; }
    double at(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }
    double clamped(int x, int y) const {
        x = std::clamp(x, 0, w - 1);
        y = std::clamp(y, 0, h - 1);
        return at(x, y);
    }
};

Grid gaussian5x5(const Grid& in) {
    // Sampled 2-D Gaussian, sigma = 1.4, normalized to unit sum.
    constexpr double sigma = 1.4;
    std::array<double, 5> k;
    double sum = 0.0;
    for (int i = -2; i <= 2; ++i) {
        k[i + 2] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        sum += k[i + 2];
    }
    for (auto& x : k) x /= sum;

    Grid tmp(in.w, in.h), out(in.w, in.h);
    for (int y = 0; y < in.h; ++y)
        for (int x = 0; x < in.w; ++x) {
            double acc = 0.0;
            for (int i = -2; i <= 2; ++i) acc += k[i + 2] * in.clamped(x + i, y);
            tmp.at(x, y) = acc;
        }
    for (int y = 0; y < in.h; ++y)
        for (int x = 0; x < in.w; ++x) {
            double acc = 0.0;
            for (int i = -2; i <= 2; ++i) acc += k[i + 2] * tmp.clamped(x, y + i);
            out.at(x, y) = acc;
        }
    return out;
}

}  // namespace

EdgeMap canny_edges(const Image& im, double low, double high) {
    if (!(low >= 0.0 && low <= high))
        throw ConfigError("canny_edges: thresholds must satisfy 0 <= low <= high");
    EdgeMap edges(im.width, im.height);
    if (im.width < 3 || im.height < 3) return edges;

    Grid luma(im.width, im.height);
    for (int y = 0; y < im.height; ++y)
        for (int x = 0; x < im.width; ++x) luma.at(x, y) = luminance(im, x, y);
    const Grid smooth = gaussian5x5(luma);

    // Sobel, normalized so a full-contrast step peaks near 255.
    Grid mag(im.width, im.height), gx(im.width, im.height), gy(im.width, im.height);
    for (int y = 0; y < im.height; ++y)
        for (int x = 0; x < im.width; ++x) {
            const double nw = smooth.clamped(x - 1, y - 1), n = smooth.clamped(x, y - 1),
                         ne = smooth.clamped(x + 1, y - 1), w = smooth.clamped(x - 1, y),
                         e = smooth.clamped(x + 1, y), sw = smooth.clamped(x - 1, y + 1),
                         s = smooth.clamped(x, y + 1), se = smooth.clamped(x + 1, y + 1);
            const double dx = (ne + 2 * e + se) - (nw + 2 * w + sw);
            const double dy = (sw + 2 * s + se) - (nw + 2 * n + ne);
            gx.at(x, y) = dx;
            gy.at(x, y) = dy;
            mag.at(x, y) = std::hypot(dx, dy) / 4.0;
        }

    // Non-maximum suppression along the gradient, quantized to 4 directions.
    // Plateaus keep the pixel the gradient points toward (> forward, >= back).
    static constexpr int dir_dx[4] = {1, 1, 0, -1};
    static constexpr int dir_dy[4] = {0, 1, 1, 1};
    std::vector<std::uint8_t> thin(im.pixel_count(), 0);
    constexpr double pi = std::numbers::pi;
    for (int y = 1; y < im.height - 1; ++y)
        for (int x = 1; x < im.width - 1; ++x) {
            const double m = mag.at(x, y);
            if (m < low || m <= 0.0) continue;
            double angle = std::atan2(gy.at(x, y), gx.at(x, y));
            if (angle < 0) angle += pi;
            const int bin = static_cast<int>(std::lround(angle / (pi / 4.0))) % 4;
            int fx = dir_dx[bin], fy = dir_dy[bin];
            // Forward = the side the gradient vector points toward.
            if (gx.at(x, y) * fx + gy.at(x, y) * fy < 0) {
                fx = -fx;
                fy = -fy;
            }
            const double fwd = mag.at(x + fx, y + fy);
            const double back = mag.at(x - fx, y - fy);
            if (m > fwd && m >= back) thin[static_cast<std::size_t>(y) * im.width + x] = 1;
        }

    // Hysteresis: grow 8-connected from strong pixels through weak ones.
    std::vector<std::size_t> stack;
    for (int y = 0; y < im.height; ++y)
        for (int x = 0; x < im.width; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * im.width + x;
            if (thin[idx] && mag.at(x, y) >= high && !edges.mask[idx]) {
                edges.mask[idx] = 1;
                stack.push_back(idx);
                while (!stack.empty()) {
                    const std::size_t cur = stack.back();
                    stack.pop_back();
                    const int cx = static_cast<int>(cur % im.width);
                    const int cy = static_cast<int>(cur / im.width);
                    for (int dy2 = -1; dy2 <= 1; ++dy2)
                        for (int dx2 = -1; dx2 <= 1; ++dx2) {
                            const int nx = cx + dx2, ny = cy + dy2;
                            if (nx < 0 || ny < 0 || nx >= im.width || ny >= im.height) continue;
                            const std::size_t nidx =
                                static_cast<std::size_t>(ny) * im.width + nx;
                            if (thin[nidx] && !edges.mask[nidx] && mag.at(nx, ny) >= low) {
                                edges.mask[nidx] = 1;
                                stack.push_back(nidx);
                            }
                        }
                }
            }
        }
    return edges;
}

Image edge_map_to_image(const EdgeMap& edges) {
    Image im(edges.width, edges.height);
    for (std::size_t i = 0; i < edges.mask.size(); ++i) {
        const std::uint8_t v = edges.mask[i] ? 255 : 0;
        im.data[i * 3 + 0] = v;
        im.data[i * 3 + 1] = v;
        im.data[i * 3 + 2] = v;
    }
    return im;
}

}  // namespace mothscan::img
