#include "mothscan/img/image.hpp"

namespace mothscan::img {

Image Image::filled(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    Image im(w, h);
    for (std::size_t i = 0; i < im.pixel_count(); ++i) {
        im.data[i * 3 + 0] = r;
        im.data[i * 3 + 1] = g;
        im.data[i * 3 + 2] = b;
    }
    return im;
}

Image rotate180(const Image& im) {
    Image out(im.width, im.height);
    for (int y = 0; y < im.height; ++y)
        for (int x = 0; x < im.width; ++x)
            for (int c = 0; c < 3; ++c)
                out.at(im.width - 1 - x, im.height - 1 - y, c) = im.at(x, y, c);
    return out;
}

}  // namespace mothscan::img
