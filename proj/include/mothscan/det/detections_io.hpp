#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mothscan/det/detection.hpp"
#include "mothscan/img/image.hpp"

namespace mothscan::det {

struct NamedDetection {
    std::string image_path;
    Detection det;
};

/// CSV rows `image_path,x,y,side,probability`, probability with 6 decimals.
void write_detections(const std::filesystem::path& path, const std::vector<NamedDetection>& dets);

std::vector<NamedDetection> read_detections(const std::filesystem::path& path);

/// Copy of the image with ground truth outlined in green and detections in
/// magenta.
img::Image render_overlay(const img::Image& im, const std::vector<Detection>& dets,
                          const std::vector<BoundingBox>& gt);

}  // namespace mothscan::det
