#include "mothscan/data/image_cache.hpp"

#include <utility>

#include "mothscan/img/color.hpp"

namespace mothscan::data {

ImageCache::ImageCache(std::filesystem::path root, bool grey_correct)
    : root_(std::move(root)), grey_correct_(grey_correct) {}

const img::Image& ImageCache::get(const std::string& relative_path) {
    std::lock_guard lock(mu_);
    auto it = cache_.find(relative_path);
    if (it == cache_.end()) {
        img::Image im = img::read_image((root_ / relative_path).string());
        if (grey_correct_) im = img::grey_world_correct(im);
        it = cache_.emplace(relative_path, std::make_unique<const img::Image>(std::move(im)))
                 .first;
    }
    return *it->second;
}

}  // namespace mothscan::data
