#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace mothscan::pipeline {

using ManifestEntries = std::vector<std::pair<std::string, std::string>>;

/// Writes `manifest.txt` under dir: the command name followed by key=value
/// lines in the given order. The content is a pure function of the
/// arguments (no timestamps, no hostnames), so identical settings yield
/// identical bytes. Returns the manifest path.
std::filesystem::path write_manifest(const std::filesystem::path& dir, const std::string& command,
                                     const ManifestEntries& entries);

}  // namespace mothscan::pipeline
