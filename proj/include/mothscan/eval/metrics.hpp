#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "mothscan/det/detection.hpp"
#include "mothscan/geometry.hpp"

namespace mothscan::eval {

/// Intersection area over the smaller box area. Throws MetricError when a box
/// has zero area.
double iomin(const BoundingBox& a, const BoundingBox& b);

/// (1 + beta^2) p r / (beta^2 p + r), defined as 0 when p = r = 0.
double fbeta(double precision, double recall, double beta);

/// Outcome of matching one image's detections against its ground truth.
/// Indices refer back to the input lists.
struct MatchResult {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (gt index, detection index)
    std::vector<std::size_t> missed;                         // unmatched gt
    std::vector<std::size_t> false_positives;                // unmatched detections
};

/// For each ground-truth box in list order, picks among the still-unmatched
/// detections overlapping it with IOMin > overlap the one with the highest
/// probability (ties by box y then x ascending).
MatchResult match(const std::vector<BoundingBox>& gt, const std::vector<det::Detection>& dets,
                  double overlap = 0.5);

/// Dataset-level tallies the object metrics are computed from.
struct MatchCounts {
    long ground_truth = 0;
    long detections = 0;
    long matched = 0;
    long images = 0;
};

struct ObjectMetrics {
    std::optional<double> miss_rate;  // absent when the dataset has no ground truth
    double fppi = 0.0;
    double precision = 1.0;  // 1 by convention when there are no detections
    std::optional<double> recall;
    std::optional<double> f2;
};

/// Aggregated over the whole dataset, not averaged per image.
ObjectMetrics object_metrics(const MatchCounts& counts);

/// Image-level tallies: an image is proposed when any detection survives.
struct ImageCounts {
    long moth_images = 0;
    long clean_images = 0;
    long true_proposals = 0;   // proposed images that contain moths
    long false_proposals = 0;  // proposed images that do not
};

struct ImageMetrics {
    std::optional<double> sensitivity;  // absent without moth images
    std::optional<double> specificity;  // absent without clean images
    double precision = 1.0;
    std::optional<double> f2;
};

ImageMetrics image_metrics(const ImageCounts& counts);

}  // namespace mothscan::eval
