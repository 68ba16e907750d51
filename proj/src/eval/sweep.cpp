#include "mothscan/eval/sweep.hpp"

#include <algorithm>
#include <cmath>

#include "mothscan/errors.hpp"

namespace mothscan::eval {

namespace {

bool det_order(const det::Detection& a, const det::Detection& b) {
    if (a.probability != b.probability) return a.probability > b.probability;
    if (a.box.y != b.box.y) return a.box.y < b.box.y;
    return a.box.x < b.box.x;
}

/// Per-image sweep state: detections sorted canonically, and the matched
/// count after each prefix of match-eligible detections. Detections that
/// overlap no ground truth can never pair, so matching is evaluated only
/// when an eligible detection enters the threshold.
struct ImageState {
    std::vector<det::Detection> sorted;
    std::vector<std::size_t> eligible_at;     // positions in `sorted`, ascending
    std::vector<long> matched_after_prefix;   // size eligible_at.size() + 1
    bool has_moths = false;
    std::size_t taken = 0;                    // detections at or above threshold
    std::size_t eligible_taken = 0;
};

ImageState build_state(const ImageEval& image) {
    ImageState st;
    st.has_moths = !image.gt.empty();
    st.sorted = image.dets;
    std::sort(st.sorted.begin(), st.sorted.end(), det_order);

    for (std::size_t d = 0; d < st.sorted.size(); ++d)
        for (const BoundingBox& box : image.gt)
            if (iomin(box, st.sorted[d].box) > 0.5) {
                st.eligible_at.push_back(d);
                break;
            }

    st.matched_after_prefix.push_back(0);
    std::vector<det::Detection> prefix;
    prefix.reserve(st.eligible_at.size());
    for (std::size_t e = 0; e < st.eligible_at.size(); ++e) {
        prefix.push_back(st.sorted[st.eligible_at[e]]);
        st.matched_after_prefix.push_back(
            static_cast<long>(match(image.gt, prefix).pairs.size()));
    }
    return st;
}

double trapezoid(const std::vector<std::pair<double, double>>& xy) {
    double area = 0.0;
    for (std::size_t i = 1; i < xy.size(); ++i)
        area += (xy[i].first - xy[i - 1].first) * (xy[i].second + xy[i - 1].second) * 0.5;
    return area;
}

}  // namespace

EvalReport sweep(const std::vector<ImageEval>& images) {
    if (images.empty()) throw MetricError("sweep needs at least one image");

    long total_gt = 0;
    long moth_images = 0;
    std::vector<ImageState> states;
    states.reserve(images.size());
    std::vector<double> thresholds;
    for (const ImageEval& image : images) {
        total_gt += static_cast<long>(image.gt.size());
        if (!image.gt.empty()) ++moth_images;
        states.push_back(build_state(image));
        for (const det::Detection& d : image.dets) thresholds.push_back(d.probability);
    }
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    if (thresholds.empty()) thresholds.push_back(1.0);

    EvalReport report;
    for (const double t : thresholds) {
        MatchCounts counts;
        counts.ground_truth = total_gt;
        counts.images = static_cast<long>(images.size());
        ImageCounts icounts;
        icounts.moth_images = moth_images;
        icounts.clean_images = static_cast<long>(images.size()) - moth_images;
        for (ImageState& st : states) {
            while (st.taken < st.sorted.size() && st.sorted[st.taken].probability >= t)
                ++st.taken;
            while (st.eligible_taken < st.eligible_at.size() &&
                   st.eligible_at[st.eligible_taken] < st.taken)
                ++st.eligible_taken;
            counts.detections += static_cast<long>(st.taken);
            counts.matched += st.matched_after_prefix[st.eligible_taken];
            if (st.taken > 0) {
                if (st.has_moths)
                    ++icounts.true_proposals;
                else
                    ++icounts.false_proposals;
            }
        }
        CurvePoint point;
        point.threshold = t;
        point.object = object_metrics(counts);
        point.image = image_metrics(icounts);
        report.points.push_back(point);
    }

    std::vector<std::pair<double, double>> object_pr;
    std::vector<std::pair<double, double>> image_pr;
    std::vector<std::pair<double, double>> sens_spec;
    for (const CurvePoint& p : report.points) {
        if (p.object.recall) object_pr.emplace_back(*p.object.recall, p.object.precision);
        if (p.image.sensitivity) image_pr.emplace_back(*p.image.sensitivity, p.image.precision);
        if (p.image.sensitivity && p.image.specificity)
            sens_spec.emplace_back(*p.image.specificity, *p.image.sensitivity);
    }
    if (!object_pr.empty()) {
        object_pr.insert(object_pr.begin(), {0.0, object_pr.front().second});
        report.object_pr_auc = trapezoid(object_pr);
    }
    if (!image_pr.empty()) {
        image_pr.insert(image_pr.begin(), {0.0, image_pr.front().second});
        report.image_pr_auc = trapezoid(image_pr);
    }
    if (!sens_spec.empty()) {
        std::reverse(sens_spec.begin(), sens_spec.end());  // specificity ascending
        report.image_sens_spec_auc = trapezoid(sens_spec);
    }

    if (total_gt > 0) {
        double log_sum = 0.0;
        for (int j = 0; j <= 8; ++j) {
            const double sample = std::pow(10.0, static_cast<double>(j) / 8.0);
            double best_fppi = -1.0;
            double miss = 1.0;
            for (const CurvePoint& p : report.points)
                if (p.object.fppi <= sample && p.object.fppi >= best_fppi) {
                    best_fppi = p.object.fppi;
                    miss = p.object.miss_rate.value_or(1.0);
                }
            log_sum += std::log(miss);
        }
        report.log_avg_miss_rate = std::exp(log_sum / 9.0);
    }

    double best_object_f2 = -1.0;
    double best_image_f2 = -1.0;
    for (const CurvePoint& p : report.points) {
        if (p.object.f2 && *p.object.f2 > best_object_f2) {
            best_object_f2 = *p.object.f2;
            report.object_best_f2_threshold = p.threshold;
        }
        if (p.image.f2 && *p.image.f2 > best_image_f2) {
            best_image_f2 = *p.image.f2;
            report.image_best_f2_threshold = p.threshold;
        }
    }
    return report;
}

}  // namespace mothscan::eval
