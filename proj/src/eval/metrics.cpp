#include "mothscan/eval/metrics.hpp"

#include <algorithm>

#include "mothscan/errors.hpp"

namespace mothscan::eval {

double iomin(const BoundingBox& a, const BoundingBox& b) {
    const long long min_area = std::min(a.area(), b.area());
    if (min_area <= 0) throw MetricError("iomin requires boxes of positive area");
    return static_cast<double>(intersection_area(a, b)) / static_cast<double>(min_area);
}

double fbeta(double precision, double recall, double beta) {
    if (precision == 0.0 && recall == 0.0) return 0.0;
    const double b2 = beta * beta;
    return (1.0 + b2) * precision * recall / (b2 * precision + recall);
}

MatchResult match(const std::vector<BoundingBox>& gt, const std::vector<det::Detection>& dets,
                  double overlap) {
    MatchResult result;
    std::vector<bool> taken(dets.size(), false);
    for (std::size_t g = 0; g < gt.size(); ++g) {
        std::size_t best = dets.size();
        for (std::size_t d = 0; d < dets.size(); ++d) {
            if (taken[d] || iomin(gt[g], dets[d].box) <= overlap) continue;
            if (best == dets.size()) {
                best = d;
                continue;
            }
            const det::Detection& cand = dets[d];
            const det::Detection& top = dets[best];
            if (cand.probability > top.probability ||
                (cand.probability == top.probability &&
                 (cand.box.y < top.box.y ||
                  (cand.box.y == top.box.y && cand.box.x < top.box.x))))
                best = d;
        }
        if (best == dets.size()) {
            result.missed.push_back(g);
        } else {
            taken[best] = true;
            result.pairs.emplace_back(g, best);
        }
    }
    for (std::size_t d = 0; d < dets.size(); ++d)
        if (!taken[d]) result.false_positives.push_back(d);
    return result;
}

ObjectMetrics object_metrics(const MatchCounts& counts) {
    if (counts.images < 1) throw MetricError("object metrics need at least one image");
    if (counts.matched > counts.ground_truth || counts.matched > counts.detections)
        throw MetricError("matched count exceeds ground truth or detections");
    ObjectMetrics m;
    const double matched = static_cast<double>(counts.matched);
    m.fppi = static_cast<double>(counts.detections - counts.matched) /
             static_cast<double>(counts.images);
    m.precision =
        counts.detections > 0 ? matched / static_cast<double>(counts.detections) : 1.0;
    if (counts.ground_truth > 0) {
        m.recall = matched / static_cast<double>(counts.ground_truth);
        m.miss_rate = 1.0 - *m.recall;
        m.f2 = fbeta(m.precision, *m.recall, 2.0);
    }
    return m;
}

ImageMetrics image_metrics(const ImageCounts& counts) {
    if (counts.true_proposals > counts.moth_images ||
        counts.false_proposals > counts.clean_images)
        throw MetricError("proposal counts exceed image counts");
    ImageMetrics m;
    const long proposals = counts.true_proposals + counts.false_proposals;
    m.precision = proposals > 0
                      ? static_cast<double>(counts.true_proposals) / static_cast<double>(proposals)
                      : 1.0;
    if (counts.moth_images > 0)
        m.sensitivity = static_cast<double>(counts.true_proposals) /
                        static_cast<double>(counts.moth_images);
    if (counts.clean_images > 0)
        m.specificity = static_cast<double>(counts.clean_images - counts.false_proposals) /
                        static_cast<double>(counts.clean_images);
    if (m.sensitivity) m.f2 = fbeta(m.precision, *m.sensitivity, 2.0);
    return m;
}

}  // namespace mothscan::eval
