#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mothscan/data/annotations.hpp"
#include "mothscan/data/augment.hpp"
#include "mothscan/data/image_cache.hpp"
#include "mothscan/geometry.hpp"
#include "mothscan/img/patch.hpp"
#include "mothscan/nn/train.hpp"

namespace mothscan::data {

enum class PatchLabel { Background = 0, Moth = 1 };

/// Provenance record from which the patch pixels can be regenerated exactly;
/// patches themselves are never persisted.
struct PatchRef {
    std::string image_path;
    PixelPoint center;  // pre-shift centre; the transform carries the shift
    int side = 0;
    int transform_id = 0;
    PatchLabel label = PatchLabel::Background;
};

using PatchSet = std::vector<PatchRef>;

/// CSV rows `image_path,cx,cy,side,transform_id,label` with labels written
/// as `moth` / `background`.
void write_patch_manifest(const std::filesystem::path& path, const PatchSet& set);
PatchSet read_patch_manifest(const std::filesystem::path& path);

/// Materializes the patch: shifts the centre per the transform, extracts
/// (shift-to-fit at borders), then applies the rotation and flip.
img::Patch patch_from_ref(const img::Image& im, const PatchRef& ref);

/// One moth patch per ground-truth box, centred on the box centre.
PatchSet extract_positive_patches(const std::vector<AnnotatedImage>& images, int side);

/// Ranks side x side windows on a half-side grid of the given no-moth images
/// by edge-pixel count and returns roughly `target` background refs,
/// uniformly subsampled from the ranking. Falls back to seeded random
/// centres (with a warning on stderr) when no image has any edge. The
/// hysteresis thresholds are lower than the edge-detector defaults: trap
/// distractors sit on a bright liner at moderate contrast, and mining only
/// ranks windows, so extra weak edges are harmless.
PatchSet mine_negative_patches(const std::vector<AnnotatedImage>& images, int side, long target,
                               ImageCache& cache, std::uint64_t seed = 0, double canny_low = 20.0,
                               double canny_high = 40.0);

/// Expands base refs (transform 0) to every transform of the mode.
PatchSet expand_patchset(const PatchSet& base, AugMode mode);

/// Adapts a PatchSet to the trainer, regenerating pixels per minibatch.
class PatchSetProvider final : public nn::BatchProvider {
  public:
    PatchSetProvider(PatchSet refs, ImageCache& cache);
    Eigen::Index size() const override { return static_cast<Eigen::Index>(refs_.size()); }
    Eigen::Index dims() const override;
    void materialize(const std::vector<Eigen::Index>& ids, Eigen::MatrixXd& out,
                     std::vector<int>& labels) const override;

  private:
    PatchSet refs_;
    ImageCache& cache_;
};

}  // namespace mothscan::data
