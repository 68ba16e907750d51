#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>

#include "mothscan/img/image.hpp"

namespace mothscan::data {

/// Loads images once, keyed by the relative path stored in annotation files,
/// optionally applying grey-world correction at load so downstream patch
/// pixels match what the detector sees. Thread safe; references stay valid
/// for the cache's lifetime.
class ImageCache {
  public:
    ImageCache(std::filesystem::path root, bool grey_correct);

    const img::Image& get(const std::string& relative_path);

    const std::filesystem::path& root() const { return root_; }

  private:
    std::filesystem::path root_;
    bool grey_correct_;
    std::mutex mu_;
    std::unordered_map<std::string, std::unique_ptr<const img::Image>> cache_;
};

}  // namespace mothscan::data
