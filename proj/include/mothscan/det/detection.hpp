#pragma once

#include "mothscan/geometry.hpp"

namespace mothscan::det {

struct Detection {
    BoundingBox box;
    double probability = 0.0;
};

}  // namespace mothscan::det
