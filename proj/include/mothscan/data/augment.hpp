#pragma once

#include <array>
#include <string>
#include <vector>

#include "mothscan/geometry.hpp"
#include "mothscan/img/patch.hpp"

namespace mothscan::data {

/// Centre offsets: identity, then +-3 px horizontally, vertically and along
/// both diagonals.
inline constexpr std::array<PixelPoint, 9> kAugShifts{
    PixelPoint{0, 0},  PixelPoint{3, 0},  PixelPoint{-3, 0},
    PixelPoint{0, 3},  PixelPoint{0, -3}, PixelPoint{3, 3},
    PixelPoint{3, -3}, PixelPoint{-3, 3}, PixelPoint{-3, -3}};

enum class AugMode { None, Trans, Rot, Both };

AugMode aug_mode_from_string(const std::string& name);
std::string to_string(AugMode mode);

/// Transform id layout: shift_index * 8 + rotation * 2 + flip, covering the
/// 9 x 4 x 2 = 72 combinations. Id 0 is the identity.
struct PatchTransform {
    PixelPoint shift;
    int rotation = 0;  // quarter turns counter-clockwise
    bool flip = false;
};

PatchTransform decode_transform(int id);

std::vector<int> transform_ids(AugMode mode);

/// Re-extracts at the shifted centre, then rotates and flips: exactly 72
/// patches, in transform-id order.
std::vector<img::Patch> augment_patch(const img::Image& im, PixelPoint center, int side);

}  // namespace mothscan::data
