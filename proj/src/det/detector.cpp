#include "mothscan/det/detector.hpp"

#include <algorithm>
#include <string>

#include "mothscan/errors.hpp"
#include "mothscan/eval/metrics.hpp"
#include "mothscan/img/color.hpp"
#include "mothscan/img/patch.hpp"

namespace mothscan::det {

DetectorConfig DetectorConfig::for_side(int side) {
    DetectorConfig cfg;
    cfg.side = side;
    cfg.stride = std::max(1, side / 4);
    return cfg;
}

void validate(const DetectorConfig& cfg) {
    if (cfg.side < 1) throw ConfigError("patch side must be positive");
    if (cfg.stride < 1 || cfg.stride > cfg.side)
        throw ConfigError("stride must lie in [1, side]");
    if (!(cfg.nms_overlap >= 0.0 && cfg.nms_overlap <= 1.0))
        throw ConfigError("nms overlap threshold must lie in [0, 1]");
    if (!(cfg.decision_threshold >= 0.0 && cfg.decision_threshold <= 1.0))
        throw ConfigError("decision threshold must lie in [0, 1]");
}

std::vector<Detection> sliding_window_scan(const img::Image& im, const nn::Network& net,
                                           const DetectorConfig& cfg) {
    validate(cfg);
    if (im.width < cfg.side || im.height < cfg.side)
        throw DetectionError("image " + std::to_string(im.width) + "x" +
                             std::to_string(im.height) + " smaller than patch side " +
                             std::to_string(cfg.side));
    if (net.input_side != cfg.side)
        throw DetectionError("model input side does not match detector config");

    const int nx = (im.width - cfg.side) / cfg.stride + 1;
    const int ny = (im.height - cfg.side) / cfg.stride + 1;
    std::vector<Detection> dets;
    dets.reserve(static_cast<std::size_t>(nx) * ny);

    const Eigen::Index dims = net.input_dims();
    constexpr Eigen::Index kScanBatch = 256;
    Eigen::MatrixXd batch(dims, kScanBatch);
    std::vector<PixelPoint> corners;
    corners.reserve(kScanBatch);

    const auto flush = [&]() {
        if (corners.empty()) return;
        const Eigen::VectorXd probs =
            nn::predict(net, batch.leftCols(static_cast<Eigen::Index>(corners.size())));
        for (std::size_t i = 0; i < corners.size(); ++i)
            dets.push_back({BoundingBox{corners[i].x, corners[i].y, cfg.side, cfg.side},
                            probs[static_cast<Eigen::Index>(i)]});
        corners.clear();
    };

    for (int y = 0; y + cfg.side <= im.height; y += cfg.stride) {
        for (int x = 0; x + cfg.side <= im.width; x += cfg.stride) {
            img::extract_square_patch_into(im, {x + cfg.side / 2, y + cfg.side / 2}, cfg.side,
                                           batch.col(static_cast<Eigen::Index>(corners.size()))
                                               .data());
            corners.push_back({x, y});
            if (static_cast<Eigen::Index>(corners.size()) == kScanBatch) flush();
        }
    }
    flush();
    return dets;
}

namespace {

bool suppression_order(const Detection& a, const Detection& b) {
    if (a.probability != b.probability) return a.probability > b.probability;
    if (a.box.y != b.box.y) return a.box.y < b.box.y;
    return a.box.x < b.box.x;
}

}  // namespace

std::vector<Detection> nms(std::vector<Detection> dets, double overlap_threshold) {
    std::sort(dets.begin(), dets.end(), suppression_order);
    std::vector<Detection> kept;
    for (const Detection& d : dets) {
        bool suppressed = false;
        for (const Detection& k : kept)
            if (eval::iomin(k.box, d.box) >= overlap_threshold) {
                suppressed = true;
                break;
            }
        if (!suppressed) kept.push_back(d);
    }
    return kept;
}

std::vector<Detection> threshold_detections(const std::vector<Detection>& dets, double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("decision threshold must lie in [0, 1]");
    std::vector<Detection> kept;
    for (const Detection& d : dets)
        if (d.probability >= t) kept.push_back(d);
    return kept;
}

std::vector<Detection> detect(const img::Image& im, const nn::Network& net,
                              const DetectorConfig& cfg) {
    const img::Image corrected = img::grey_world_correct(im);
    return threshold_detections(nms(sliding_window_scan(corrected, net, cfg), cfg.nms_overlap),
                                cfg.decision_threshold);
}

}  // namespace mothscan::det
