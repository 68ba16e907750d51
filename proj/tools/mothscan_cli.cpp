#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mothscan/data/augment.hpp"
#include "mothscan/errors.hpp"
#include "mothscan/pipeline/runs.hpp"

namespace {

using namespace mothscan;

std::vector<nn::ConvSpec> parse_conv_specs(const std::string& text) {
    std::vector<nn::ConvSpec> specs;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        const std::string item = text.substr(pos, comma - pos);
        const std::size_t x = item.find('x');
        long maps = 0;
        long kernel = 0;
        try {
            if (x == std::string::npos) throw std::invalid_argument("missing x");
            maps = std::stol(item.substr(0, x));
            kernel = std::stol(item.substr(x + 1));
        } catch (const std::exception&) {
            throw ConfigError("bad conv spec '" + item + "', expected MAPSxKERNEL");
        }
        if (maps < 1 || kernel < 1) throw ConfigError("conv spec values must be positive");
        specs.push_back({maps, kernel});
        pos = comma + 1;
    }
    if (specs.empty()) throw ConfigError("conv spec list is empty");
    return specs;
}

std::string show(const std::optional<double>& v) {
    if (!v) return "n/a";
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6f", *v);
    return buf;
}

void print_report(const eval::EvalReport& report, const std::string& level) {
    if (level != "image") {
        std::cout << "object_pr_auc=" << show(report.object_pr_auc) << '\n'
                  << "log_avg_miss_rate=" << show(report.log_avg_miss_rate) << '\n'
                  << "object_best_f2_threshold=" << show(report.object_best_f2_threshold) << '\n';
    }
    if (level != "object") {
        std::cout << "image_pr_auc=" << show(report.image_pr_auc) << '\n'
                  << "image_sens_spec_auc=" << show(report.image_sens_spec_auc) << '\n'
                  << "image_best_f2_threshold=" << show(report.image_best_f2_threshold) << '\n';
    }
}

/// Lets --config (a root option) appear after the subcommand name.
void attach_config(CLI::App* cmd) { cmd->fallthrough(true); }

CLI::Option* out_option(CLI::App* cmd, std::filesystem::path& target) {
    return cmd->add_option("--out", target, "Output directory (env MOTHSCAN_OUT)")
        ->envname("MOTHSCAN_OUT")
        ->required();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sticky-trap moth detection: synthesize, train, detect, evaluate"};
    app.require_subcommand(1);
    // Flat key=value lines, keys prefixed with the subcommand (synth.seed=42).
    // Command-line flags win over config values; unknown keys are an error.
    app.set_config("--config", "", "Read options from a flat key=value file");
    app.allow_config_extras(CLI::config_extras_mode::error);

    pipeline::SynthRun synth;
    auto* cmd_synth = app.add_subcommand("synth", "Render a synthetic trap-image dataset");
    attach_config(cmd_synth);
    out_option(cmd_synth, synth.out);
    cmd_synth->add_option("--seed", synth.scene.seed, "Dataset seed");
    cmd_synth->add_option("--train", synth.counts.train, "Training images")
        ->check(CLI::NonNegativeNumber);
    cmd_synth->add_option("--val", synth.counts.val, "Validation images")
        ->check(CLI::NonNegativeNumber);
    cmd_synth->add_option("--test", synth.counts.test, "Test images")
        ->check(CLI::NonNegativeNumber);
    cmd_synth->add_option("--width", synth.scene.width, "Image width");
    cmd_synth->add_option("--height", synth.scene.height, "Image height");
    cmd_synth->add_option("--mean-moths", synth.scene.mean_moths,
                          "Mean moths per infested image");
    cmd_synth->add_option("--no-moth-fraction", synth.scene.no_moth_fraction,
                          "Probability an image is moth-free");
    cmd_synth->add_option("--wing-prob", synth.scene.wing_probability,
                          "Probability a moth spreads its wings");
    cmd_synth->add_option("--flies-min", synth.scene.flies_min, "Fewest flies per image");
    cmd_synth->add_option("--flies-max", synth.scene.flies_max, "Most flies per image");
    cmd_synth->add_option("--lure-prob", synth.scene.lure_probability,
                          "Probability the lure disc is visible");
    cmd_synth->add_option("--blur-min", synth.scene.blur_sigma_min, "Lowest blur sigma");
    cmd_synth->add_option("--blur-max", synth.scene.blur_sigma_max, "Highest blur sigma");
    cmd_synth->add_option("--noise", synth.scene.noise_amplitude, "Pixel noise amplitude");

    pipeline::ExtractRun extract;
    std::string extract_aug = "none";
    auto* cmd_extract = app.add_subcommand("extract", "Build a patch manifest from annotations");
    attach_config(cmd_extract);
    out_option(cmd_extract, extract.out);
    cmd_extract->add_option("--annotations", extract.annotations, "Annotation CSV")->required();
    cmd_extract->add_option("--images-root", extract.images_root,
                            "Directory the annotation paths are relative to");
    cmd_extract->add_option("--patch-size", extract.side, "Window side in pixels");
    cmd_extract->add_option("--negatives", extract.negatives,
                            "Mined background count (-1: match positives)");
    cmd_extract->add_option("--aug", extract_aug, "Augmentation: none|trans|rot|both")
        ->check(CLI::IsMember({"none", "trans", "rot", "both"}));
    cmd_extract->add_option("--seed", extract.seed, "Mining fallback seed");

    pipeline::TrainRun train;
    std::string train_aug = "both";
    std::string train_standardize = "dataset";
    std::string train_conv = "16x5,32x5";
    bool train_quiet = false;
    auto* cmd_train = app.add_subcommand("train", "Train a patch classifier");
    attach_config(cmd_train);
    out_option(cmd_train, train.out);
    cmd_train->add_option("--train", train.train_annotations, "Training annotation CSV")
        ->required();
    cmd_train->add_option("--val", train.val_annotations, "Validation annotation CSV")
        ->required();
    cmd_train->add_option("--images-root", train.images_root,
                          "Directory the annotation paths are relative to");
    cmd_train->add_option("--model", train.model, "convnet|logreg")
        ->check(CLI::IsMember({"convnet", "logreg"}));
    cmd_train->add_option("--patch-size", train.side, "Window side in pixels");
    cmd_train->add_option("--conv", train_conv, "Conv stages, e.g. 16x5,32x5");
    cmd_train->add_option("--hidden", train.hidden, "Hidden units in the first dense layer");
    cmd_train->add_option("--aug", train_aug, "Augmentation: none|trans|rot|both")
        ->check(CLI::IsMember({"none", "trans", "rot", "both"}));
    cmd_train->add_option("--standardize", train_standardize, "dataset|per-patch")
        ->check(CLI::IsMember({"dataset", "per-patch"}));
    cmd_train->add_option("--train-fraction", train.train_fraction,
                          "Stratified fraction of training images to keep");
    cmd_train->add_option("--bootstrap", train.bootstrap_rounds,
                          "Hard-negative mining rounds");
    cmd_train->add_option("--bootstrap-cap", train.bootstrap_cap,
                          "Most hard negatives kept per round");
    cmd_train->add_option("--bootstrap-threshold", train.bootstrap_threshold,
                          "Detector threshold during mining");
    cmd_train->add_option("--lr", train.optim.learning_rate, "Learning rate");
    cmd_train->add_option("--batch", train.optim.batch_size, "Minibatch size");
    cmd_train->add_option("--momentum", train.optim.momentum, "Momentum coefficient");
    cmd_train->add_option("--epochs", train.optim.max_epochs, "Epochs per stage");
    cmd_train->add_option("--seed", train.optim.seed, "Training seed");
    cmd_train->add_flag("--quiet", train_quiet, "Suppress per-epoch progress");

    pipeline::BootstrapRun bootstrap;
    auto* cmd_bootstrap =
        app.add_subcommand("bootstrap", "Mine hard negatives with a trained model");
    attach_config(cmd_bootstrap);
    out_option(cmd_bootstrap, bootstrap.out);
    cmd_bootstrap->add_option("--model", bootstrap.model, "Checkpoint file")->required();
    cmd_bootstrap->add_option("--annotations", bootstrap.annotations, "Annotation CSV")
        ->required();
    cmd_bootstrap->add_option("--images-root", bootstrap.images_root,
                              "Directory the annotation paths are relative to");
    cmd_bootstrap->add_option("--threshold", bootstrap.threshold, "Detector threshold");
    cmd_bootstrap->add_option("--cap", bootstrap.cap, "Most patches kept");

    pipeline::DetectRun detect;
    auto* cmd_detect = app.add_subcommand("detect", "Run the detector over images");
    attach_config(cmd_detect);
    out_option(cmd_detect, detect.out);
    cmd_detect->add_option("--model", detect.model, "Checkpoint file")->required();
    cmd_detect->add_option("--images", detect.images, "Annotation CSV or image directory")
        ->required();
    cmd_detect->add_option("--images-root", detect.images_root,
                           "Directory the annotation paths are relative to");
    cmd_detect->add_option("--threshold", detect.threshold,
                           "Keep detections at or above this probability (0 keeps all)");
    cmd_detect->add_option("--nms", detect.nms_overlap, "NMS overlap threshold");
    cmd_detect->add_option("--stride", detect.stride, "Window stride (0: quarter side)");
    cmd_detect->add_flag("--overlay", detect.overlays, "Write per-image overlay PNGs");
    cmd_detect->add_option("--threads", detect.threads, "Worker thread cap");

    pipeline::EvaluateRun evaluate;
    std::string eval_level = "both";
    bool eval_no_plots = false;
    auto* cmd_evaluate =
        app.add_subcommand("evaluate", "Score detections against ground truth");
    attach_config(cmd_evaluate);
    out_option(cmd_evaluate, evaluate.out);
    cmd_evaluate->add_option("--gt", evaluate.annotations, "Ground-truth annotation CSV")
        ->required();
    cmd_evaluate->add_option("--detections", evaluate.detections, "Detections CSV")->required();
    cmd_evaluate->add_option("--level", eval_level, "Printed metrics: object|image|both")
        ->check(CLI::IsMember({"object", "image", "both"}));
    cmd_evaluate->add_flag("--no-plots", eval_no_plots, "Skip the SVG charts");

    pipeline::ReportRun report;
    auto* cmd_report =
        app.add_subcommand("report", "Evaluation artifacts plus overlays at one threshold");
    attach_config(cmd_report);
    out_option(cmd_report, report.out);
    cmd_report->add_option("--gt", report.annotations, "Ground-truth annotation CSV")
        ->required();
    cmd_report->add_option("--detections", report.detections, "Detections CSV")->required();
    cmd_report->add_option("--images-root", report.images_root,
                           "Directory the annotation paths are relative to");
    cmd_report->add_option("--threshold", report.threshold,
                           "Operating point (negative: maximize object F2)");
    cmd_report->add_option("--threads", report.threads, "Worker thread cap");

    pipeline::ReproRun repro;
    std::string repro_aug = "both";
    bool repro_quiet = false;
    auto* cmd_repro =
        app.add_subcommand("repro", "Chain synth, train, detect and evaluate from one seed");
    attach_config(cmd_repro);
    out_option(cmd_repro, repro.out);
    cmd_repro->add_option("--seed", repro.seed, "Seed for every stage");
    cmd_repro->add_option("--train", repro.counts.train, "Training images")
        ->check(CLI::NonNegativeNumber);
    cmd_repro->add_option("--val", repro.counts.val, "Validation images")
        ->check(CLI::NonNegativeNumber);
    cmd_repro->add_option("--test", repro.counts.test, "Test images")
        ->check(CLI::NonNegativeNumber);
    cmd_repro->add_option("--width", repro.scene.width, "Image width");
    cmd_repro->add_option("--height", repro.scene.height, "Image height");
    cmd_repro->add_option("--mean-moths", repro.scene.mean_moths,
                          "Mean moths per infested image");
    cmd_repro->add_option("--model", repro.model, "convnet|logreg")
        ->check(CLI::IsMember({"convnet", "logreg"}));
    cmd_repro->add_option("--patch-size", repro.side, "Window side in pixels");
    cmd_repro->add_option("--aug", repro_aug, "Augmentation: none|trans|rot|both")
        ->check(CLI::IsMember({"none", "trans", "rot", "both"}));
    cmd_repro->add_option("--bootstrap", repro.bootstrap_rounds, "Hard-negative mining rounds");
    cmd_repro->add_option("--epochs", repro.optim.max_epochs, "Epochs per stage");
    cmd_repro->add_option("--batch", repro.optim.batch_size, "Minibatch size");
    cmd_repro->add_option("--lr", repro.optim.learning_rate, "Learning rate");
    cmd_repro->add_option("--threads", repro.threads, "Worker thread cap");
    cmd_repro->add_flag("--quiet", repro_quiet, "Suppress per-epoch progress");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(cmd_synth)) {
            pipeline::run_synth(synth);
            const long total = synth.counts.train + synth.counts.val + synth.counts.test;
            std::cout << "wrote " << total << " images and 3 annotation files under "
                      << synth.out.string() << '\n';
        } else if (app.got_subcommand(cmd_extract)) {
            extract.aug = data::aug_mode_from_string(extract_aug);
            const auto outcome = pipeline::run_extract(extract);
            std::cout << "extracted " << outcome.positives << " moth and " << outcome.negatives
                      << " background patches (" << outcome.rows << " rows) into "
                      << outcome.patches.string() << '\n';
        } else if (app.got_subcommand(cmd_train)) {
            train.aug = data::aug_mode_from_string(train_aug);
            train.standardize = train_standardize == "per-patch"
                                    ? nn::StandardizeMode::PerPatch
                                    : nn::StandardizeMode::Dataset;
            train.conv = parse_conv_specs(train_conv);
            train.verbose = !train_quiet;
            const auto outcome = pipeline::run_train(train);
            for (const auto& s : outcome.stages)
                std::cout << "stage " << s.stage << ": " << s.train_patches
                          << " train patches, best epoch " << s.best_epoch
                          << ", val accuracy " << s.best_val_accuracy << '\n';
            std::cout << "checkpoint " << outcome.checkpoint.string() << '\n';
        } else if (app.got_subcommand(cmd_bootstrap)) {
            const auto outcome = pipeline::run_bootstrap(bootstrap);
            std::cout << "kept " << outcome.kept << " of " << outcome.false_positives
                      << " false positives in " << outcome.patches.string() << '\n';
        } else if (app.got_subcommand(cmd_detect)) {
            const auto outcome = pipeline::run_detect(detect);
            std::cout << outcome.detection_count << " detections over " << outcome.image_count
                      << " images in " << outcome.detections.string() << '\n';
        } else if (app.got_subcommand(cmd_evaluate)) {
            evaluate.plots = !eval_no_plots;
            const auto rep = pipeline::run_evaluate(evaluate);
            print_report(rep, eval_level);
        } else if (app.got_subcommand(cmd_report)) {
            const auto outcome = pipeline::run_report(report);
            std::cout << "overlays at threshold " << outcome.threshold << " ("
                      << outcome.detections_kept << " detections) under "
                      << (report.out / "overlays").string() << '\n';
        } else if (app.got_subcommand(cmd_repro)) {
            repro.aug = data::aug_mode_from_string(repro_aug);
            repro.verbose = !repro_quiet;
            const auto outcome = pipeline::run_repro(repro);
            print_report(outcome.report, "both");
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
