#pragma once

#include <cstdint>

#include "mothscan/data/annotations.hpp"

namespace mothscan::data {

struct SplitSpec {
    double train = 110.0 / 177.0;
    double val = 27.0 / 177.0;
    double test = 40.0 / 177.0;
    std::uint64_t seed = 0;
};

struct DatasetSplit {
    std::vector<AnnotatedImage> train;
    std::vector<AnnotatedImage> val;
    std::vector<AnnotatedImage> test;
};

/// Stratified random split over the with-moth and no-moth strata, preserving
/// each stratum's ratio via largest-remainder rounding. Deterministic under
/// the seed. Throws SplitError when a stratum cannot reach every subset.
DatasetSplit split_dataset(const std::vector<AnnotatedImage>& images, const SplitSpec& spec);

}  // namespace mothscan::data
