#pragma once

#include <vector>

#include "mothscan/det/detection.hpp"
#include "mothscan/img/image.hpp"
#include "mothscan/nn/network.hpp"

namespace mothscan::det {

struct DetectorConfig {
    int side = 21;
    int stride = 5;  // the quarter-side default, see for_side()
    double nms_overlap = 0.10;
    double decision_threshold = 0.5;

    /// Config with the stride rule applied: stride = max(1, side / 4).
    static DetectorConfig for_side(int side);
};

/// Throws ConfigError unless 1 <= stride <= side and thresholds are in [0,1].
void validate(const DetectorConfig& cfg);

/// Classifies every window of the stride grid x, y in {0, stride, 2 stride,
/// ...} with x <= width - side, y <= height - side; one Detection per window.
/// The image is used as given; colour correction happens in detect().
std::vector<Detection> sliding_window_scan(const img::Image& im, const nn::Network& net,
                                           const DetectorConfig& cfg);

/// Greedy suppression: accept detections in probability order (ties by y
/// then x ascending) and drop any remaining whose IOMin with an accepted
/// detection reaches the threshold.
std::vector<Detection> nms(std::vector<Detection> dets, double overlap_threshold);

/// Keeps detections with probability >= t, order preserved.
std::vector<Detection> threshold_detections(const std::vector<Detection>& dets, double t);

/// Full pipeline on one image: grey-world correction, window scan, NMS,
/// thresholding; result sorted by probability descending.
std::vector<Detection> detect(const img::Image& im, const nn::Network& net,
                              const DetectorConfig& cfg);

}  // namespace mothscan::det
