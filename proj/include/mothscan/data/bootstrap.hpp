#pragma once

#include "mothscan/data/patchset.hpp"
#include "mothscan/det/detector.hpp"
#include "mothscan/nn/network.hpp"

namespace mothscan::data {

struct BootstrapResult {
    PatchSet patches;
    long false_positives_found = 0;  // before the cap
};

/// Runs the detector over the images and keeps detections the evaluation
/// matcher leaves unmatched, excluding any that overlap ground truth with
/// IOMin above 0.5. Results are sorted by probability descending (ties by
/// image path, then centre y, x) and capped. The cache must serve
/// colour-corrected images; the scan runs on them directly.
BootstrapResult bootstrap_negatives(const nn::Network& net,
                                    const std::vector<AnnotatedImage>& images, ImageCache& cache,
                                    const det::DetectorConfig& cfg, long cap = 6000);

}  // namespace mothscan::data
