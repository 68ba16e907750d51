#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mothscan/data/annotations.hpp"
#include "mothscan/img/image.hpp"

namespace mothscan::synth {

/// Knobs of the synthetic trap-scene renderer. Defaults mirror the trap
/// geometry the detector targets: 640x480 liner photos averaging 25.1 moths,
/// about a quarter of images moth-free.
struct SceneConfig {
    int width = 640;
    int height = 480;
    double mean_moths = 25.1;
    double body_axis_min = 5.0;  // half length of the body ellipse, px
    double body_axis_max = 10.0;
    double wing_probability = 0.6;
    int flies_min = 3;
    int flies_max = 18;
    int leaves_min = 0;
    int leaves_max = 3;
    double lure_probability = 0.9;
    double tint_red_min = 0.75;
    double tint_red_max = 1.30;
    double tint_green_min = 0.97;
    double tint_green_max = 1.03;
    double tint_blue_min = 0.75;
    double tint_blue_max = 1.30;
    double blur_sigma_min = 0.4;
    double blur_sigma_max = 1.3;
    int noise_amplitude = 8;
    double no_moth_fraction = 44.0 / 177.0;
    std::uint64_t seed = 0;
};

void validate(const SceneConfig& cfg);

struct Scene {
    img::Image image;
    std::vector<BoundingBox> boxes;  // one tight box per moth, none for distractors
};

/// Renders one scene, fully determined by (cfg, index). Moth count is
/// Poisson with the configured mean; distractors (flies, leaves, lure disc)
/// get no boxes. Tint, blur and noise are applied after compositing.
Scene generate_scene(const SceneConfig& cfg, long index);

struct DatasetCounts {
    long train = 110;
    long val = 27;
    long test = 40;
};

/// Writes images/scene_NNNNN.png plus train/val/test annotation CSVs under
/// out_dir. Each scene is independently declared moth-free with probability
/// no_moth_fraction (rendered with mean 0).
void generate_dataset(const SceneConfig& cfg, const DatasetCounts& counts,
                      const std::filesystem::path& out_dir);

}  // namespace mothscan::synth
