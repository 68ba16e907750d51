#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mothscan/data/augment.hpp"
#include "mothscan/eval/sweep.hpp"
#include "mothscan/nn/network.hpp"
#include "mothscan/nn/train.hpp"
#include "mothscan/synth/scene.hpp"

namespace mothscan::pipeline {

/// Every run writes its artifacts plus a manifest.txt under its `out`
/// directory; all of them are deterministic functions of the parameters.

struct SynthRun {
    synth::SceneConfig scene;
    synth::DatasetCounts counts;
    std::filesystem::path out;
};

void run_synth(const SynthRun& run);

struct ExtractRun {
    std::filesystem::path annotations;
    std::filesystem::path images_root;  // empty: the annotation file's directory
    std::filesystem::path out;
    int side = 21;
    long negatives = -1;  // -1: one mined background per labelled moth
    data::AugMode aug = data::AugMode::None;
    std::uint64_t seed = 0;
};

struct ExtractOutcome {
    long positives = 0;  // base counts, before augmentation
    long negatives = 0;
    long rows = 0;  // manifest rows after augmentation
    std::filesystem::path patches;
};

ExtractOutcome run_extract(const ExtractRun& run);

struct TrainRun {
    std::filesystem::path train_annotations;
    std::filesystem::path val_annotations;
    std::filesystem::path images_root;  // empty: the train annotation file's directory
    std::filesystem::path out;
    std::string model = "convnet";  // convnet | logreg
    std::vector<nn::ConvSpec> conv = {{16, 5}, {32, 5}};
    Eigen::Index hidden = 128;
    int side = 21;
    data::AugMode aug = data::AugMode::Both;
    nn::StandardizeMode standardize = nn::StandardizeMode::Dataset;
    double train_fraction = 1.0;  // stratified subsample of the training images
    int bootstrap_rounds = 1;
    long bootstrap_cap = 6000;
    double bootstrap_threshold = 0.5;
    nn::TrainConfig optim;
    bool verbose = true;
};

struct StageSummary {
    int stage = 0;  // 1 is the initial fit; each bootstrap round adds one
    long train_patches = 0;
    long val_patches = 0;
    Eigen::Index best_epoch = 0;
    double best_val_accuracy = 0.0;
};

struct TrainOutcome {
    std::filesystem::path checkpoint;
    std::vector<StageSummary> stages;
    long hard_negatives = 0;  // bootstrapped patches added across rounds
};

/// Extracts moth patches and mined backgrounds, expands them per the
/// augmentation mode, fits the standardization, trains, then runs the
/// requested bootstrap rounds: each feeds the current model's surviving
/// false positives back as extra backgrounds and retrains from a fresh
/// initialization. Writes checkpoint.bin (plus checkpoint_stage1.bin) and
/// history.csv.
TrainOutcome run_train(const TrainRun& run);

struct DetectRun {
    std::filesystem::path model;
    /// Annotation CSV (image list plus overlay boxes) or a directory that is
    /// scanned recursively for .png/.jpg/.jpeg files.
    std::filesystem::path images;
    std::filesystem::path images_root;  // empty: the annotation file's directory
    std::filesystem::path out;
    double threshold = 0.5;  // 0 keeps everything the NMS passes, for curve sweeps
    double nms_overlap = 0.10;
    int stride = 0;  // 0: quarter window side
    bool overlays = false;
    int threads = 1;
};

struct DetectOutcome {
    std::filesystem::path detections;
    long detection_count = 0;
    long image_count = 0;
};

DetectOutcome run_detect(const DetectRun& run);

struct EvaluateRun {
    std::filesystem::path annotations;
    std::filesystem::path detections;
    std::filesystem::path out;
    bool plots = true;
};

/// Joins detections to ground truth by image path, sweeps the curves and
/// writes curves.csv, summary.csv and the SVG charts.
eval::EvalReport run_evaluate(const EvaluateRun& run);

struct BootstrapRun {
    std::filesystem::path model;
    std::filesystem::path annotations;
    std::filesystem::path images_root;  // empty: the annotation file's directory
    std::filesystem::path out;
    double threshold = 0.5;
    long cap = 6000;
};

struct BootstrapOutcome {
    std::filesystem::path patches;
    long kept = 0;
    long false_positives = 0;  // before the cap
};

BootstrapOutcome run_bootstrap(const BootstrapRun& run);

struct ReportRun {
    std::filesystem::path annotations;
    std::filesystem::path detections;
    std::filesystem::path images_root;  // empty: the annotation file's directory
    std::filesystem::path out;
    double threshold = -1.0;  // negative: the threshold maximizing object F2
    int threads = 1;
};

struct ReportOutcome {
    double threshold = 1.0;
    long detections_kept = 0;
};

/// Evaluation artifacts plus per-image overlays at one operating point.
ReportOutcome run_report(const ReportRun& run);

struct ReproRun {
    std::filesystem::path out;
    std::uint64_t seed = 42;
    synth::SceneConfig scene;  // its seed field is overridden by `seed`
    synth::DatasetCounts counts;
    std::string model = "convnet";
    int side = 21;
    data::AugMode aug = data::AugMode::Both;
    int bootstrap_rounds = 1;
    long bootstrap_cap = 6000;
    nn::TrainConfig optim;  // its seed field is overridden by `seed`
    int threads = 1;
    bool verbose = true;
};

struct ReproOutcome {
    std::filesystem::path dataset;
    std::filesystem::path checkpoint;
    std::filesystem::path detections;
    std::filesystem::path eval_dir;
    eval::EvalReport report;
};

/// End-to-end chain: synthesize a dataset, train on its train/val splits,
/// detect over the test split at threshold 0 and evaluate. Every stage is
/// seeded from `seed`, so two runs with equal settings produce
/// byte-identical checkpoints, detection files and report CSVs.
ReproOutcome run_repro(const ReproRun& run);

}  // namespace mothscan::pipeline
