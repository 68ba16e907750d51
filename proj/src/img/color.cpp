#include "mothscan/img/color.hpp"

#include <algorithm>
#include <cmath>

#include "mothscan/errors.hpp"

namespace mothscan::img {

ChannelMeans channel_means(const Image& im) {
    double sums[3] = {0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < im.pixel_count(); ++i) {
        sums[0] += im.data[i * 3 + 0];
        sums[1] += im.data[i * 3 + 1];
        sums[2] += im.data[i * 3 + 2];
    }
    const double n = static_cast<double>(im.pixel_count());
    return {sums[0] / n, sums[1] / n, sums[2] / n};
}

namespace {
std::uint8_t scaled(std::uint8_t v, double gain) {
    const long s = std::lround(v * gain);
    return static_cast<std::uint8_t>(std::clamp(s, 0L, 255L));
}
}  // namespace

Image grey_world_correct(const Image& im) {
    if (im.empty()) throw ExtractionError("grey_world_correct: empty image");
    const ChannelMeans m = channel_means(im);
    if (m.g <= 0.0) return im;  // gains undefined on an all-black green channel
    const double gain_r = m.r > 0.0 ? m.g / m.r : 1.0;
    const double gain_b = m.b > 0.0 ? m.g / m.b : 1.0;

    Image out(im.width, im.height);
    for (std::size_t i = 0; i < im.pixel_count(); ++i) {
        out.data[i * 3 + 0] = scaled(im.data[i * 3 + 0], gain_r);
        out.data[i * 3 + 1] = im.data[i * 3 + 1];
        out.data[i * 3 + 2] = scaled(im.data[i * 3 + 2], gain_b);
    }
    return out;
}

}  // namespace mothscan::img
