#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mothscan/geometry.hpp"

namespace mothscan::data {

/// Image reference with its ground-truth boxes; an empty box list means a
/// confirmed no-moth image.
struct AnnotatedImage {
    std::string image_path;
    std::vector<BoundingBox> boxes;
};

/// CSV with header `image_path,x,y,w,h`, one row per box; no-moth images
/// appear as one row with the box fields left empty. Rows for the same image
/// keep their file order; images keep first-appearance order.
std::vector<AnnotatedImage> read_annotations(const std::filesystem::path& path);

void write_annotations(const std::filesystem::path& path,
                       const std::vector<AnnotatedImage>& images);

}  // namespace mothscan::data
