#pragma once

#include <filesystem>

#include "mothscan/nn/network.hpp"

namespace mothscan::nn {

/// Binary model file: magic "MOTHNET\0", format version, input geometry,
/// layer descriptors, then every parameter as little-endian doubles in
/// declaration order (weights row by row, each bias after its weight),
/// then the standardization statistics. See docs/checkpoint-format.md.
void save_checkpoint(const Network& net, const std::filesystem::path& path);

/// Throws IoError on unreadable, truncated or mismatched files.
Network load_checkpoint(const std::filesystem::path& path);

}  // namespace mothscan::nn
