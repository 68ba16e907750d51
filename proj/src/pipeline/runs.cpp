#include "mothscan/pipeline/runs.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <random>
#include <thread>
#include <unordered_map>
#include <utility>

#include "mothscan/data/annotations.hpp"
#include "mothscan/data/bootstrap.hpp"
#include "mothscan/data/image_cache.hpp"
#include "mothscan/data/patchset.hpp"
#include "mothscan/det/detections_io.hpp"
#include "mothscan/det/detector.hpp"
#include "mothscan/errors.hpp"
#include "mothscan/eval/report_io.hpp"
#include "mothscan/eval/svg_plot.hpp"
#include "mothscan/nn/checkpoint.hpp"
#include "mothscan/pipeline/manifest.hpp"

namespace fs = std::filesystem;

namespace mothscan::pipeline {
namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt9(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

fs::path root_or_parent(const fs::path& root, const fs::path& annotations) {
    return root.empty() ? annotations.parent_path() : root;
}

/// Ordered work queue; exceptions stop the pool and rethrow on the caller.
void parallel_for(long n, int threads, const std::function<void(long)>& fn) {
    const long workers = std::min<long>(std::max(threads, 1), n);
    if (workers <= 1) {
        for (long i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<long> next{0};
    std::mutex mu;
    std::exception_ptr error;
    auto work = [&] {
        for (;;) {
            const long i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!error) error = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (long t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

std::vector<data::AnnotatedImage> clean_only(const std::vector<data::AnnotatedImage>& images) {
    std::vector<data::AnnotatedImage> out;
    for (const auto& im : images)
        if (im.boxes.empty()) out.push_back(im);
    return out;
}

/// Keeps a seeded random fraction of each stratum (with moths / without),
/// at least one image per non-empty stratum, original order preserved.
std::vector<data::AnnotatedImage> stratified_fraction(std::vector<data::AnnotatedImage> images,
                                                      double fraction, std::uint64_t seed) {
    std::vector<std::size_t> strata[2];
    for (std::size_t i = 0; i < images.size(); ++i)
        strata[images[i].boxes.empty() ? 1 : 0].push_back(i);
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> keep;
    for (auto& stratum : strata) {
        std::shuffle(stratum.begin(), stratum.end(), rng);
        if (stratum.empty()) continue;
        auto take = static_cast<std::size_t>(std::llround(fraction * double(stratum.size())));
        take = std::clamp<std::size_t>(take, 1, stratum.size());
        keep.insert(keep.end(), stratum.begin(), stratum.begin() + take);
    }
    std::sort(keep.begin(), keep.end());
    std::vector<data::AnnotatedImage> out;
    out.reserve(keep.size());
    for (auto i : keep) out.push_back(std::move(images[i]));
    return out;
}

void fit_statistics(nn::Network& net, const nn::BatchProvider& set) {
    nn::StandardizationAccumulator acc(set.dims());
    const Eigen::Index chunk = 4096;
    Eigen::MatrixXd block;
    std::vector<int> labels;
    std::vector<Eigen::Index> ids;
    for (Eigen::Index start = 0; start < set.size(); start += chunk) {
        const Eigen::Index stop = std::min(start + chunk, set.size());
        ids.resize(static_cast<std::size_t>(stop - start));
        for (Eigen::Index i = start; i < stop; ++i) ids[static_cast<std::size_t>(i - start)] = i;
        set.materialize(ids, block, labels);
        acc.add_columns(block);
    }
    acc.finalize(net);
}

nn::Network make_model(const TrainRun& run, std::uint64_t seed) {
    nn::Network net = run.model == "logreg"
                          ? nn::make_logreg_baseline(run.side, 3, seed)
                          : nn::make_convnet(run.side, 3, run.conv, run.hidden, seed);
    net.standardize = run.standardize;
    return net;
}

std::string overlay_name(const std::string& image_path) {
    std::string flat = image_path;
    std::replace(flat.begin(), flat.end(), '/', '_');
    std::replace(flat.begin(), flat.end(), '\\', '_');
    return fs::path(flat).replace_extension(".png").string();
}

/// Annotation order with each image's detections attached; detections that
/// reference an unknown image indicate mismatched files and are an error.
std::vector<eval::ImageEval> join_for_eval(const std::vector<data::AnnotatedImage>& images,
                                           const std::vector<det::NamedDetection>& dets) {
    std::unordered_map<std::string, std::size_t> index;
    std::vector<eval::ImageEval> evals;
    evals.reserve(images.size());
    for (const auto& im : images) {
        index.emplace(im.image_path, evals.size());
        evals.push_back({im.image_path, im.boxes, {}});
    }
    for (const auto& nd : dets) {
        auto it = index.find(nd.image_path);
        if (it == index.end())
            throw MetricError("evaluate: detections reference unknown image " + nd.image_path);
        evals[it->second].dets.push_back(nd.det);
    }
    return evals;
}

}  // namespace

void run_synth(const SynthRun& run) {
    synth::validate(run.scene);
    if (run.counts.train < 0 || run.counts.val < 0 || run.counts.test < 0)
        throw ConfigError("synth: split counts must be non-negative");
    synth::generate_dataset(run.scene, run.counts, run.out);
    const auto& c = run.scene;
    write_manifest(run.out, "synth",
                   {{"width", std::to_string(c.width)},
                    {"height", std::to_string(c.height)},
                    {"mean_moths", fmt(c.mean_moths)},
                    {"no_moth_fraction", fmt(c.no_moth_fraction)},
                    {"body_axis_min", fmt(c.body_axis_min)},
                    {"body_axis_max", fmt(c.body_axis_max)},
                    {"wing_probability", fmt(c.wing_probability)},
                    {"flies_min", std::to_string(c.flies_min)},
                    {"flies_max", std::to_string(c.flies_max)},
                    {"leaves_min", std::to_string(c.leaves_min)},
                    {"leaves_max", std::to_string(c.leaves_max)},
                    {"lure_probability", fmt(c.lure_probability)},
                    {"tint_red", fmt(c.tint_red_min) + ".." + fmt(c.tint_red_max)},
                    {"tint_green", fmt(c.tint_green_min) + ".." + fmt(c.tint_green_max)},
                    {"tint_blue", fmt(c.tint_blue_min) + ".." + fmt(c.tint_blue_max)},
                    {"blur_sigma", fmt(c.blur_sigma_min) + ".." + fmt(c.blur_sigma_max)},
                    {"noise_amplitude", std::to_string(c.noise_amplitude)},
                    {"seed", std::to_string(c.seed)},
                    {"train", std::to_string(run.counts.train)},
                    {"val", std::to_string(run.counts.val)},
                    {"test", std::to_string(run.counts.test)}});
}

ExtractOutcome run_extract(const ExtractRun& run) {
    if (run.side < 3) throw ConfigError("extract: patch side must be at least 3");
    const auto images = data::read_annotations(run.annotations);
    data::ImageCache cache(root_or_parent(run.images_root, run.annotations), true);

    auto positives = data::extract_positive_patches(images, run.side);
    const long target = run.negatives < 0 ? static_cast<long>(positives.size()) : run.negatives;
    auto negatives = data::mine_negative_patches(clean_only(images), run.side, target, cache,
                                                 run.seed);

    ExtractOutcome outcome;
    outcome.positives = static_cast<long>(positives.size());
    outcome.negatives = static_cast<long>(negatives.size());

    data::PatchSet base = std::move(positives);
    base.insert(base.end(), negatives.begin(), negatives.end());
    const auto expanded = data::expand_patchset(base, run.aug);
    outcome.rows = static_cast<long>(expanded.size());

    fs::create_directories(run.out);
    outcome.patches = run.out / "patches.csv";
    data::write_patch_manifest(outcome.patches, expanded);
    write_manifest(run.out, "extract",
                   {{"annotations", run.annotations.generic_string()},
                    {"side", std::to_string(run.side)},
                    {"negatives", std::to_string(run.negatives)},
                    {"aug", data::to_string(run.aug)},
                    {"seed", std::to_string(run.seed)},
                    {"positive_patches", std::to_string(outcome.positives)},
                    {"negative_patches", std::to_string(outcome.negatives)},
                    {"rows", std::to_string(outcome.rows)}});
    return outcome;
}

TrainOutcome run_train(const TrainRun& run) {
    nn::validate(run.optim);
    if (run.model != "convnet" && run.model != "logreg")
        throw ConfigError("train: unknown model '" + run.model + "'");
    if (!(run.train_fraction > 0.0 && run.train_fraction <= 1.0))
        throw ConfigError("train: train_fraction must be in (0, 1]");
    if (run.bootstrap_rounds < 0) throw ConfigError("train: bootstrap_rounds must be >= 0");
    if (run.bootstrap_cap < 0) throw ConfigError("train: bootstrap_cap must be >= 0");
    if (!(run.bootstrap_threshold >= 0.0 && run.bootstrap_threshold <= 1.0))
        throw ConfigError("train: bootstrap_threshold must be in [0, 1]");
    if (run.side < 3) throw ConfigError("train: patch side must be at least 3");

    auto train_images = data::read_annotations(run.train_annotations);
    const auto val_images = data::read_annotations(run.val_annotations);
    if (run.train_fraction < 1.0)
        train_images = stratified_fraction(std::move(train_images), run.train_fraction,
                                           run.optim.seed);

    data::ImageCache cache(root_or_parent(run.images_root, run.train_annotations), true);

    auto train_pos = data::extract_positive_patches(train_images, run.side);
    auto val_pos = data::extract_positive_patches(val_images, run.side);
    auto train_neg = data::mine_negative_patches(clean_only(train_images), run.side,
                                                 static_cast<long>(train_pos.size()), cache,
                                                 run.optim.seed);
    auto val_neg = data::mine_negative_patches(clean_only(val_images), run.side,
                                               static_cast<long>(val_pos.size()), cache,
                                               run.optim.seed + 1);

    data::PatchSet base = train_pos;
    base.insert(base.end(), train_neg.begin(), train_neg.end());
    data::PatchSet stage_train = data::expand_patchset(base, run.aug);
    data::PatchSet val_refs = std::move(val_pos);
    val_refs.insert(val_refs.end(), val_neg.begin(), val_neg.end());
    if (stage_train.empty()) throw ConfigError("train: the training patch set is empty");
    if (val_refs.empty()) throw ConfigError("train: the validation patch set is empty");

    fs::create_directories(run.out);
    data::write_patch_manifest(run.out / "patches_base.csv", base);

    std::ofstream history(run.out / "history.csv", std::ios::trunc);
    if (!history) throw IoError("cannot write " + (run.out / "history.csv").string());
    history << "stage,epoch,train_loss,train_accuracy,val_loss,val_accuracy\n";

    TrainOutcome outcome;
    auto run_stage = [&](int stage, std::uint64_t seed_offset) {
        nn::Network net = make_model(run, run.optim.seed + seed_offset);
        data::PatchSetProvider train_set(stage_train, cache);
        data::PatchSetProvider val_set(val_refs, cache);
        if (net.standardize == nn::StandardizeMode::Dataset) fit_statistics(net, train_set);
        nn::TrainConfig cfg = run.optim;
        cfg.seed = run.optim.seed + seed_offset;
        auto on_epoch = [&](const nn::EpochStats& s) {
            history << stage << ',' << s.epoch << ',' << fmt9(s.train_loss) << ','
                    << fmt9(s.train_accuracy) << ',' << fmt9(s.val_loss) << ','
                    << fmt9(s.val_accuracy) << '\n';
            if (run.verbose)
                std::cerr << "[train] stage " << stage << " epoch " << s.epoch
                          << " loss " << fmt9(s.train_loss) << " acc " << fmt9(s.train_accuracy)
                          << " val_loss " << fmt9(s.val_loss) << " val_acc "
                          << fmt9(s.val_accuracy) << '\n';
        };
        auto result = nn::train(std::move(net), train_set, val_set, cfg, on_epoch);
        StageSummary summary;
        summary.stage = stage;
        summary.train_patches = static_cast<long>(stage_train.size());
        summary.val_patches = static_cast<long>(val_refs.size());
        summary.best_epoch = result.best_epoch;
        if (result.best_epoch >= 1)
            summary.best_val_accuracy =
                result.history[static_cast<std::size_t>(result.best_epoch - 1)].val_accuracy;
        outcome.stages.push_back(summary);
        return result;
    };

    nn::Network model = run_stage(1, 0).model;
    nn::save_checkpoint(model, run.out / "checkpoint_stage1.bin");

    for (int round = 1; round <= run.bootstrap_rounds; ++round) {
        auto dcfg = det::DetectorConfig::for_side(run.side);
        dcfg.decision_threshold = run.bootstrap_threshold;
        auto mined = data::bootstrap_negatives(model, train_images, cache, dcfg,
                                               run.bootstrap_cap);
        const long val_cap = static_cast<long>(std::llround(
            double(run.bootstrap_cap) * double(val_images.size()) /
            double(std::max<std::size_t>(train_images.size(), 1))));
        auto mined_val = data::bootstrap_negatives(model, val_images, cache, dcfg, val_cap);
        if (run.verbose)
            std::cerr << "[train] bootstrap round " << round << ": " << mined.patches.size()
                      << " hard negatives (" << mined.false_positives_found << " found), "
                      << mined_val.patches.size() << " for validation\n";
        if (mined.patches.empty()) break;
        data::write_patch_manifest(
            run.out / ("hard_negatives_round" + std::to_string(round) + ".csv"), mined.patches);
        stage_train.insert(stage_train.end(), mined.patches.begin(), mined.patches.end());
        val_refs.insert(val_refs.end(), mined_val.patches.begin(), mined_val.patches.end());
        outcome.hard_negatives += static_cast<long>(mined.patches.size());
        model = run_stage(1 + round, static_cast<std::uint64_t>(round)).model;
    }

    outcome.checkpoint = run.out / "checkpoint.bin";
    nn::save_checkpoint(model, outcome.checkpoint);
    write_manifest(run.out, "train",
                   {{"train_annotations", run.train_annotations.generic_string()},
                    {"val_annotations", run.val_annotations.generic_string()},
                    {"model", run.model},
                    {"side", std::to_string(run.side)},
                    {"hidden", std::to_string(run.hidden)},
                    {"aug", data::to_string(run.aug)},
                    {"standardize",
                     run.standardize == nn::StandardizeMode::Dataset ? "dataset" : "per_patch"},
                    {"train_fraction", fmt(run.train_fraction)},
                    {"bootstrap_rounds", std::to_string(run.bootstrap_rounds)},
                    {"bootstrap_cap", std::to_string(run.bootstrap_cap)},
                    {"bootstrap_threshold", fmt(run.bootstrap_threshold)},
                    {"learning_rate", fmt(run.optim.learning_rate)},
                    {"batch_size", std::to_string(run.optim.batch_size)},
                    {"momentum", fmt(run.optim.momentum)},
                    {"max_epochs", std::to_string(run.optim.max_epochs)},
                    {"seed", std::to_string(run.optim.seed)}});
    return outcome;
}

namespace {

bool has_image_extension(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

/// Directory input yields box-free entries, relative paths sorted.
std::vector<data::AnnotatedImage> list_detect_inputs(const fs::path& images) {
    if (!fs::is_directory(images)) return data::read_annotations(images);
    std::vector<data::AnnotatedImage> out;
    for (const auto& entry : fs::recursive_directory_iterator(images))
        if (entry.is_regular_file() && has_image_extension(entry.path()))
            out.push_back({entry.path().lexically_relative(images).generic_string(), {}});
    if (out.empty()) throw IoError("detect: no images under " + images.string());
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.image_path < b.image_path; });
    return out;
}

}  // namespace

DetectOutcome run_detect(const DetectRun& run) {
    const nn::Network net = nn::load_checkpoint(run.model);
    const auto images = list_detect_inputs(run.images);
    const fs::path root = fs::is_directory(run.images)
                              ? run.images
                              : root_or_parent(run.images_root, run.images);

    auto cfg = det::DetectorConfig::for_side(static_cast<int>(net.input_side));
    if (run.stride > 0) cfg.stride = run.stride;
    cfg.nms_overlap = run.nms_overlap;
    cfg.decision_threshold = run.threshold;
    det::validate(cfg);

    fs::create_directories(run.out);
    if (run.overlays) fs::create_directories(run.out / "overlays");

    std::vector<std::vector<det::Detection>> per_image(images.size());
    parallel_for(static_cast<long>(images.size()), run.threads, [&](long i) {
        const auto& entry = images[static_cast<std::size_t>(i)];
        const img::Image im = img::read_image((root / entry.image_path).string());
        auto dets = det::detect(im, net, cfg);
        if (run.overlays)
            img::write_png(det::render_overlay(im, dets, entry.boxes),
                           (run.out / "overlays" / overlay_name(entry.image_path)).string());
        per_image[static_cast<std::size_t>(i)] = std::move(dets);
    });

    std::vector<det::NamedDetection> rows;
    for (std::size_t i = 0; i < images.size(); ++i)
        for (const auto& d : per_image[i]) rows.push_back({images[i].image_path, d});

    DetectOutcome outcome;
    outcome.detections = run.out / "detections.csv";
    outcome.detection_count = static_cast<long>(rows.size());
    outcome.image_count = static_cast<long>(images.size());
    det::write_detections(outcome.detections, rows);
    write_manifest(run.out, "detect",
                   {{"model", run.model.generic_string()},
                    {"images", run.images.generic_string()},
                    {"threshold", fmt(run.threshold)},
                    {"nms_overlap", fmt(run.nms_overlap)},
                    {"stride", std::to_string(cfg.stride)},
                    {"side", std::to_string(cfg.side)},
                    {"overlays", run.overlays ? "1" : "0"},
                    {"image_count", std::to_string(outcome.image_count)},
                    {"detections", std::to_string(outcome.detection_count)}});
    return outcome;
}

eval::EvalReport run_evaluate(const EvaluateRun& run) {
    const auto images = data::read_annotations(run.annotations);
    const auto dets = det::read_detections(run.detections);
    const auto evals = join_for_eval(images, dets);
    auto report = eval::sweep(evals);
    fs::create_directories(run.out);
    eval::write_curves_csv(run.out / "curves.csv", report);
    eval::write_summary_csv(run.out / "summary.csv", report);
    if (run.plots) eval::write_report_plots(run.out, report);
    write_manifest(run.out, "evaluate",
                   {{"annotations", run.annotations.generic_string()},
                    {"detections", run.detections.generic_string()},
                    {"images", std::to_string(images.size())},
                    {"plots", run.plots ? "1" : "0"}});
    return report;
}

BootstrapOutcome run_bootstrap(const BootstrapRun& run) {
    const nn::Network net = nn::load_checkpoint(run.model);
    const auto images = data::read_annotations(run.annotations);
    data::ImageCache cache(root_or_parent(run.images_root, run.annotations), true);
    auto cfg = det::DetectorConfig::for_side(static_cast<int>(net.input_side));
    cfg.decision_threshold = run.threshold;
    det::validate(cfg);
    auto mined = data::bootstrap_negatives(net, images, cache, cfg, run.cap);

    BootstrapOutcome outcome;
    outcome.kept = static_cast<long>(mined.patches.size());
    outcome.false_positives = mined.false_positives_found;
    fs::create_directories(run.out);
    outcome.patches = run.out / "hard_negatives.csv";
    data::write_patch_manifest(outcome.patches, mined.patches);
    write_manifest(run.out, "bootstrap",
                   {{"model", run.model.generic_string()},
                    {"annotations", run.annotations.generic_string()},
                    {"threshold", fmt(run.threshold)},
                    {"cap", std::to_string(run.cap)},
                    {"false_positives", std::to_string(outcome.false_positives)},
                    {"kept", std::to_string(outcome.kept)}});
    return outcome;
}

ReportOutcome run_report(const ReportRun& run) {
    const auto images = data::read_annotations(run.annotations);
    const auto dets = det::read_detections(run.detections);
    const auto evals = join_for_eval(images, dets);
    const auto report = eval::sweep(evals);

    ReportOutcome outcome;
    outcome.threshold = run.threshold >= 0.0
                            ? run.threshold
                            : report.object_best_f2_threshold.value_or(1.0);
    if (outcome.threshold > 1.0) throw ConfigError("report: threshold must be at most 1");

    fs::create_directories(run.out);
    eval::write_curves_csv(run.out / "curves.csv", report);
    eval::write_summary_csv(run.out / "summary.csv", report);
    eval::write_report_plots(run.out, report);
    fs::create_directories(run.out / "overlays");

    const fs::path root = root_or_parent(run.images_root, run.annotations);
    std::atomic<long> kept{0};
    parallel_for(static_cast<long>(evals.size()), run.threads, [&](long i) {
        const auto& e = evals[static_cast<std::size_t>(i)];
        const img::Image im = img::read_image((root / e.image_path).string());
        const auto chosen = det::threshold_detections(e.dets, outcome.threshold);
        kept.fetch_add(static_cast<long>(chosen.size()));
        img::write_png(det::render_overlay(im, chosen, e.gt),
                       (run.out / "overlays" / overlay_name(e.image_path)).string());
    });
    outcome.detections_kept = kept.load();
    write_manifest(run.out, "report",
                   {{"annotations", run.annotations.generic_string()},
                    {"detections", run.detections.generic_string()},
                    {"threshold", fmt(outcome.threshold)},
                    {"detections_kept", std::to_string(outcome.detections_kept)}});
    return outcome;
}

ReproOutcome run_repro(const ReproRun& run) {
    ReproOutcome outcome;
    outcome.dataset = run.out / "dataset";

    SynthRun synth_run;
    synth_run.scene = run.scene;
    synth_run.scene.seed = run.seed;
    synth_run.counts = run.counts;
    synth_run.out = outcome.dataset;
    run_synth(synth_run);

    TrainRun train_run;
    train_run.train_annotations = outcome.dataset / "train.csv";
    train_run.val_annotations = outcome.dataset / "val.csv";
    train_run.images_root = outcome.dataset;
    train_run.out = run.out / "model";
    train_run.model = run.model;
    train_run.side = run.side;
    train_run.aug = run.aug;
    train_run.bootstrap_rounds = run.bootstrap_rounds;
    train_run.bootstrap_cap = run.bootstrap_cap;
    train_run.optim = run.optim;
    train_run.optim.seed = run.seed;
    train_run.verbose = run.verbose;
    const auto trained = run_train(train_run);
    outcome.checkpoint = trained.checkpoint;

    DetectRun detect_run;
    detect_run.model = outcome.checkpoint;
    detect_run.images = outcome.dataset / "test.csv";
    detect_run.images_root = outcome.dataset;
    detect_run.out = run.out / "detections";
    detect_run.threshold = 0.0;
    detect_run.threads = run.threads;
    outcome.detections = run_detect(detect_run).detections;

    EvaluateRun eval_run;
    eval_run.annotations = outcome.dataset / "test.csv";
    eval_run.detections = outcome.detections;
    eval_run.out = run.out / "eval";
    outcome.eval_dir = eval_run.out;
    outcome.report = run_evaluate(eval_run);

    write_manifest(run.out, "repro",
                   {{"seed", std::to_string(run.seed)},
                    {"model", run.model},
                    {"side", std::to_string(run.side)},
                    {"aug", data::to_string(run.aug)},
                    {"bootstrap_rounds", std::to_string(run.bootstrap_rounds)},
                    {"max_epochs", std::to_string(run.optim.max_epochs)},
                    {"train", std::to_string(run.counts.train)},
                    {"val", std::to_string(run.counts.val)},
                    {"test", std::to_string(run.counts.test)}});
    return outcome;
}

}  // namespace mothscan::pipeline
