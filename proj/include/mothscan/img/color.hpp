#pragma once

#include "mothscan/img/image.hpp"

namespace mothscan::img {

struct ChannelMeans {
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;
};

ChannelMeans channel_means(const Image& im);

/// Grey-world white balance: rescales the red and blue channels by
/// mean(G)/mean(R) and mean(G)/mean(B) so all three channel means agree
/// (within rounding) after correction. Green is left untouched, and a
/// channel whose mean is zero is left unchanged since its gain is undefined.
Image grey_world_correct(const Image& im);

}  // namespace mothscan::img
