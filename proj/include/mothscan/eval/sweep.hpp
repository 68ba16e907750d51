#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mothscan/eval/metrics.hpp"

namespace mothscan::eval {

/// One image's ground truth plus its raw detections (post-NMS, threshold 0).
struct ImageEval {
    std::string image_path;
    std::vector<BoundingBox> gt;
    std::vector<det::Detection> dets;
};

struct CurvePoint {
    double threshold = 1.0;
    ObjectMetrics object;
    ImageMetrics image;
};

struct EvalReport {
    std::vector<CurvePoint> points;  // thresholds strictly decreasing
    std::optional<double> object_pr_auc;
    std::optional<double> log_avg_miss_rate;  // geometric mean over FPPI in [1, 10]
    std::optional<double> image_pr_auc;
    std::optional<double> image_sens_spec_auc;
    std::optional<double> object_best_f2_threshold;
    std::optional<double> image_best_f2_threshold;
};

/// Evaluates every metric at each distinct detection probability, then the
/// scalar summaries by trapezoidal integration. The PR curves are extended
/// to recall 0 at the highest-threshold precision; the miss-rate samples use
/// the largest swept FPPI not exceeding each of 9 log-spaced values in
/// [1, 10], miss rate 1 when none qualifies.
EvalReport sweep(const std::vector<ImageEval>& images);

}  // namespace mothscan::eval
