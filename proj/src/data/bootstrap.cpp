#include "mothscan/data/bootstrap.hpp"

#include <algorithm>
#include <tuple>

#include "mothscan/errors.hpp"
#include "mothscan/eval/metrics.hpp"

namespace mothscan::data {

BootstrapResult bootstrap_negatives(const nn::Network& net,
                                    const std::vector<AnnotatedImage>& images, ImageCache& cache,
                                    const det::DetectorConfig& cfg, long cap) {
    if (cap < 0) throw ConfigError("bootstrap cap must be nonnegative");
    struct Mined {
        double probability;
        std::string path;
        PixelPoint center;
    };
    std::vector<Mined> mined;
    for (const AnnotatedImage& image : images) {
        const img::Image& im = cache.get(image.image_path);
        const std::vector<det::Detection> dets = det::threshold_detections(
            det::nms(det::sliding_window_scan(im, net, cfg), cfg.nms_overlap),
            cfg.decision_threshold);
        const eval::MatchResult matched = eval::match(image.boxes, dets);
        for (const std::size_t d : matched.false_positives) {
            bool overlaps_gt = false;
            for (const BoundingBox& box : image.boxes)
                if (eval::iomin(box, dets[d].box) > 0.5) {
                    overlaps_gt = true;
                    break;
                }
            if (overlaps_gt) continue;
            mined.push_back({dets[d].probability, image.image_path,
                             {dets[d].box.x + cfg.side / 2, dets[d].box.y + cfg.side / 2}});
        }
    }

    std::sort(mined.begin(), mined.end(), [](const Mined& a, const Mined& b) {
        return std::tie(b.probability, a.path, a.center.y, a.center.x) <
               std::tie(a.probability, b.path, b.center.y, b.center.x);
    });

    BootstrapResult result;
    result.false_positives_found = static_cast<long>(mined.size());
    const std::size_t take = std::min(mined.size(), static_cast<std::size_t>(cap));
    for (std::size_t i = 0; i < take; ++i)
        result.patches.push_back(
            {mined[i].path, mined[i].center, cfg.side, 0, PatchLabel::Background});
    return result;
}

}  // namespace mothscan::data
