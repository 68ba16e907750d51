#include "mothscan/data/patchset.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <tuple>

#include "mothscan/errors.hpp"
#include "mothscan/img/canny.hpp"

namespace mothscan::data {

namespace {
constexpr const char* kHeader = "image_path,cx,cy,side,transform_id,label";
}

void write_patch_manifest(const std::filesystem::path& path, const PatchSet& set) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << kHeader << '\n';
    for (const PatchRef& r : set)
        out << r.image_path << ',' << r.center.x << ',' << r.center.y << ',' << r.side << ','
            << r.transform_id << ','
            << (r.label == PatchLabel::Moth ? "moth" : "background") << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

PatchSet read_patch_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open patch manifest: " + path.string());
    PatchSet set;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line == kHeader) continue;
        }
        std::istringstream row(line);
        PatchRef r;
        std::string field;
        if (!std::getline(row, r.image_path, ',')) throw IoError("bad manifest row: " + line);
        std::array<int, 4> nums{};
        for (int& v : nums) {
            if (!std::getline(row, field, ',')) throw IoError("bad manifest row: " + line);
            try {
                v = std::stoi(field);
            } catch (const std::exception&) {
                throw IoError("bad manifest row: " + line);
            }
        }
        if (!std::getline(row, field)) throw IoError("bad manifest row: " + line);
        r.center = {nums[0], nums[1]};
        r.side = nums[2];
        r.transform_id = nums[3];
        if (field == "moth")
            r.label = PatchLabel::Moth;
        else if (field == "background")
            r.label = PatchLabel::Background;
        else
            throw IoError("unknown patch label '" + field + "' in " + path.string());
        set.push_back(std::move(r));
    }
    return set;
}

img::Patch patch_from_ref(const img::Image& im, const PatchRef& ref) {
    const PatchTransform t = decode_transform(ref.transform_id);
    const img::Patch base = img::extract_square_patch(
        im, {ref.center.x + t.shift.x, ref.center.y + t.shift.y}, ref.side);
    return img::apply_dihedral(base, t.rotation, t.flip);
}

PatchSet extract_positive_patches(const std::vector<AnnotatedImage>& images, int side) {
    PatchSet set;
    for (const AnnotatedImage& image : images)
        for (const BoundingBox& box : image.boxes)
            set.push_back({image.image_path, img::bbox_to_square_center(box), side, 0,
                           PatchLabel::Moth});
    return set;
}

PatchSet mine_negative_patches(const std::vector<AnnotatedImage>& images, int side, long target,
                               ImageCache& cache, std::uint64_t seed, double canny_low,
                               double canny_high) {
    if (target < 0) throw ConfigError("negative patch target must be nonnegative");
    struct Candidate {
        long score;
        std::string path;
        PixelPoint center;
    };
    std::vector<Candidate> candidates;
    const int step = std::max(1, side / 2);
    for (const AnnotatedImage& image : images) {
        if (!image.boxes.empty())
            throw ExtractionError("negative mining expects no-moth images, got boxes in " +
                                  image.image_path);
        const img::Image& im = cache.get(image.image_path);
        const img::EdgeMap edges = img::canny_edges(im, canny_low, canny_high);
        for (int cy = side / 2; cy + (side + 1) / 2 <= im.height; cy += step) {
            for (int cx = side / 2; cx + (side + 1) / 2 <= im.width; cx += step) {
                const BoundingBox win = img::window_for_center(im.width, im.height, {cx, cy}, side);
                long score = 0;
                for (int y = win.y; y < win.bottom(); ++y)
                    for (int x = win.x; x < win.right(); ++x)
                        if (edges.at(x, y)) ++score;
                if (score > 0) candidates.push_back({score, image.image_path, {cx, cy}});
            }
        }
    }

    PatchSet set;
    if (candidates.empty()) {
        if (images.empty() || target == 0) return set;
        std::cerr << "warning: no edges found in any no-moth image, "
                     "falling back to random negative centres\n";
        std::mt19937_64 rng(seed);
        for (long i = 0; i < target; ++i) {
            const AnnotatedImage& image =
                images[static_cast<std::size_t>(rng() % images.size())];
            const img::Image& im = cache.get(image.image_path);
            std::uniform_int_distribution<int> dx(side / 2, im.width - 1 - side / 2);
            std::uniform_int_distribution<int> dy(side / 2, im.height - 1 - side / 2);
            const int cx = dx(rng);
            const int cy = dy(rng);
            set.push_back({image.image_path, {cx, cy}, side, 0, PatchLabel::Background});
        }
        return set;
    }

    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        return std::tie(b.score, a.path, a.center.y, a.center.x) <
               std::tie(a.score, b.path, b.center.y, b.center.x);
    });
    const long n = static_cast<long>(candidates.size());
    const long take = std::min(target, n);
    for (long i = 0; i < take; ++i) {
        // Uniform-stride subsample over the ranked list.
        const Candidate& c = candidates[static_cast<std::size_t>(i * n / take)];
        set.push_back({c.path, c.center, side, 0, PatchLabel::Background});
    }
    return set;
}

PatchSet expand_patchset(const PatchSet& base, AugMode mode) {
    const std::vector<int> ids = transform_ids(mode);
    PatchSet out;
    out.reserve(base.size() * ids.size());
    for (const PatchRef& r : base)
        for (const int id : ids) {
            PatchRef expanded = r;
            expanded.transform_id = id;
            out.push_back(std::move(expanded));
        }
    return out;
}

PatchSetProvider::PatchSetProvider(PatchSet refs, ImageCache& cache)
    : refs_(std::move(refs)), cache_(cache) {
    if (refs_.empty()) throw DimensionError("patch set provider needs at least one patch");
    for (const PatchRef& r : refs_)
        if (r.side != refs_.front().side)
            throw DimensionError("patch set mixes different patch sides");
}

Eigen::Index PatchSetProvider::dims() const { return 3L * refs_.front().side * refs_.front().side; }

void PatchSetProvider::materialize(const std::vector<Eigen::Index>& ids, Eigen::MatrixXd& out,
                                   std::vector<int>& labels) const {
    out.resize(dims(), static_cast<Eigen::Index>(ids.size()));
    labels.resize(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const PatchRef& r = refs_[static_cast<std::size_t>(ids[i])];
        const img::Patch p = patch_from_ref(cache_.get(r.image_path), r);
        out.col(static_cast<Eigen::Index>(i)) = p.data;
        labels[i] = r.label == PatchLabel::Moth ? 1 : 0;
    }
}

}  // namespace mothscan::data
