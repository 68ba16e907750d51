#pragma once

#include <Eigen/Dense>

#include "mothscan/geometry.hpp"
#include "mothscan/img/image.hpp"

namespace mothscan::img {

/// Square RGB crop with real-valued intensities still on the 0-255 scale.
/// Data layout is channel-planar, row-major: index (c * side + y) * side + x.
struct Patch {
    int side = 0;
    Eigen::VectorXd data;

    Patch() = default;
    explicit Patch(int s) : side(s), data(Eigen::VectorXd::Zero(3L * s * s)) {}

    double at(int c, int y, int x) const {
        return data[(static_cast<Eigen::Index>(c) * side + y) * side + x];
    }
    double& at(int c, int y, int x) {
        return data[(static_cast<Eigen::Index>(c) * side + y) * side + x];
    }

    friend bool operator==(const Patch&, const Patch&) = default;
};

/// Top-left corner of the side x side window centred at `center`, shifted
/// minimally so the window lies fully inside a width x height image.
BoundingBox window_for_center(int width, int height, PixelPoint center, int side);

/// Crops the square window centred at `center`. Windows that would cross the
/// image border are shifted to fit; a side larger than the image throws
/// ExtractionError.
Patch extract_square_patch(const Image& im, PixelPoint center, int side);

/// Writes the window pixels into `dst` (3 * side * side doubles, planar
/// layout). Allocation-free variant used by the batched pipelines.
void extract_square_patch_into(const Image& im, PixelPoint center, int side, double* dst);

/// Centre of a bounding box, rounded half-to-even per coordinate.
PixelPoint bbox_to_square_center(const BoundingBox& bb);

/// Quarter-turn counter-clockwise.
Patch rotate90(const Patch& p);

Patch horizontal_flip(const Patch& p);

/// `rot` quarter turns (0-3) followed by an optional horizontal flip.
Patch apply_dihedral(const Patch& p, int rot, bool flip);

}  // namespace mothscan::img
