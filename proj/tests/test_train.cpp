#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "mothscan/errors.hpp"
#include "mothscan/nn/minibatch.hpp"
#include "mothscan/nn/network.hpp"
#include "mothscan/nn/train.hpp"

using namespace mothscan;

namespace {

struct Blobs {
    Eigen::MatrixXd samples;
    std::vector<int> labels;
    nn::MatrixBatchProvider provider() const { return {samples, labels}; }
};

/// Two well-separated Gaussian blobs on the 0-255 patch scale, so even a
/// couple of epochs must reach high accuracy.
Blobs blob_set(Eigen::Index dims, Eigen::Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 12.0);
    Eigen::MatrixXd samples(dims, n);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (Eigen::Index c = 0; c < n; ++c) {
        const int label = static_cast<int>(c % 2);
        const double base = label == 1 ? 170.0 : 90.0;
        for (Eigen::Index r = 0; r < dims; ++r)
            samples(r, c) = std::clamp(base + noise(rng), 0.0, 255.0);
        labels[static_cast<std::size_t>(c)] = label;
    }
    return {std::move(samples), std::move(labels)};
}

nn::Network small_net(std::uint64_t seed, const Eigen::MatrixXd& fit_on) {
    // 5x5 inputs keep every epoch cheap: 3 channels, one tiny conv stage.
    nn::Network net = nn::make_convnet(5, 3, {{2, 3}}, 4, seed);
    nn::fit_standardization(net, fit_on);
    return net;
}

nn::TrainConfig quick_config(Eigen::Index epochs, std::uint64_t seed) {
    nn::TrainConfig cfg;
    cfg.learning_rate = 0.01;
    cfg.batch_size = 16;
    cfg.max_epochs = epochs;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("train config validation rejects nonsense") {
    nn::TrainConfig cfg;
    CHECK_NOTHROW(nn::validate(cfg));
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(nn::validate(cfg), ConfigError);
    cfg = {};
    cfg.batch_size = 0;
    CHECK_THROWS_AS(nn::validate(cfg), ConfigError);
    cfg = {};
    cfg.momentum = 1.0;
    CHECK_THROWS_AS(nn::validate(cfg), ConfigError);
    cfg = {};
    cfg.momentum = -0.1;
    CHECK_THROWS_AS(nn::validate(cfg), ConfigError);
    cfg = {};
    cfg.max_epochs = -1;
    CHECK_THROWS_AS(nn::validate(cfg), ConfigError);
}

TEST_CASE("momentum update follows the classical form") {
    Eigen::VectorXd params(2), grads(2), velocity(2);
    params << 1.0, -2.0;
    grads << 0.5, -1.0;
    velocity << 0.2, 0.1;
    nn::TrainConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.momentum = 0.9;
    nn::sgd_momentum_step(params, grads, velocity, cfg);
    // v' = 0.9 v - 0.1 g, theta' = theta + v'
    CHECK(velocity(0) == doctest::Approx(0.9 * 0.2 - 0.05));
    CHECK(velocity(1) == doctest::Approx(0.9 * 0.1 + 0.1));
    CHECK(params(0) == doctest::Approx(1.0 + 0.13));
    CHECK(params(1) == doctest::Approx(-2.0 + 0.19));
}

TEST_CASE("training separates an easy two-blob problem") {
    const auto train = blob_set(75, 160, 1);
    const auto val = blob_set(75, 48, 2);
    const auto result = nn::train(small_net(3, train.samples), train.provider(), val.provider(),
                                  quick_config(8, 5));

    REQUIRE(result.history.size() == 8);
    CHECK(result.best_epoch >= 1);
    CHECK(result.best_epoch <= 8);
    const auto& last = result.history.back();
    CHECK(last.train_accuracy > 0.95);
    CHECK(last.val_accuracy > 0.95);
    CHECK(last.train_loss < 0.2);
    // Epoch indices are 1-based and dense.
    for (std::size_t i = 0; i < result.history.size(); ++i)
        CHECK(result.history[i].epoch == static_cast<Eigen::Index>(i + 1));

    // The returned model is the best-validation snapshot, usable directly.
    Eigen::MatrixXd probe(75, 2);
    probe.col(0).setConstant(90.0);
    probe.col(1).setConstant(170.0);
    const Eigen::VectorXd p = nn::predict(result.model, probe);
    CHECK(p(0) < 0.5);
    CHECK(p(1) > 0.5);
}

TEST_CASE("the snapshot with the highest validation accuracy wins") {
    const auto train = blob_set(75, 96, 7);
    const auto val = blob_set(75, 32, 8);
    std::vector<double> val_curve;
    const auto result =
        nn::train(small_net(9, train.samples), train.provider(), val.provider(),
                  quick_config(6, 11),
                  [&](const nn::EpochStats& s) { val_curve.push_back(s.val_accuracy); });
    REQUIRE(val_curve.size() == 6);
    const double best = *std::max_element(val_curve.begin(), val_curve.end());
    // Earliest epoch wins ties.
    const auto first_best = std::find(val_curve.begin(), val_curve.end(), best);
    CHECK(result.best_epoch == (first_best - val_curve.begin()) + 1);
    CHECK(result.history[static_cast<std::size_t>(result.best_epoch - 1)].val_accuracy ==
          doctest::Approx(best));
}

TEST_CASE("zero epochs returns the initialized network untouched") {
    const auto train = blob_set(75, 32, 20);
    const auto val = blob_set(75, 16, 21);
    nn::Network net = small_net(31, train.samples);
    const Eigen::VectorXd before = nn::flatten_parameters(net);
    const auto result =
        nn::train(std::move(net), train.provider(), val.provider(), quick_config(0, 1));
    CHECK(result.history.empty());
    CHECK(result.best_epoch == 0);
    CHECK(nn::flatten_parameters(result.model) == before);
}

TEST_CASE("training is bit-reproducible under a fixed seed") {
    const auto train = blob_set(75, 96, 40);
    const auto val = blob_set(75, 32, 41);
    const auto a = nn::train(small_net(42, train.samples), train.provider(), val.provider(),
                             quick_config(3, 43));
    const auto b = nn::train(small_net(42, train.samples), train.provider(), val.provider(),
                             quick_config(3, 43));
    const auto c = nn::train(small_net(42, train.samples), train.provider(), val.provider(),
                             quick_config(3, 44));
    CHECK(nn::flatten_parameters(a.model) == nn::flatten_parameters(b.model));
    CHECK(nn::flatten_parameters(a.model) != nn::flatten_parameters(c.model));
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        CHECK(a.history[i].train_loss == b.history[i].train_loss);
        CHECK(a.history[i].val_accuracy == b.history[i].val_accuracy);
    }
}

TEST_CASE("diverging runs raise a training error naming the epoch") {
    const auto train = blob_set(75, 64, 50);
    const auto val = blob_set(75, 16, 51);
    nn::TrainConfig cfg = quick_config(5, 52);
    cfg.learning_rate = 1e9;  // guaranteed overflow into non-finite loss
    try {
        nn::train(small_net(53, train.samples), train.provider(), val.provider(), cfg);
        FAIL("expected TrainingError");
    } catch (const TrainingError& e) {
        CHECK(e.epoch >= 1);
    }
}

TEST_CASE("score averages loss and accuracy over chunks") {
    nn::Network net = nn::make_logreg_baseline(5, 3, 60);
    Eigen::MatrixXd samples = Eigen::MatrixXd::Constant(75, 7, 128.0);
    nn::fit_standardization(net, samples);
    // With constant inputs every sample standardizes to zero, so the softmax
    // output is exactly the bias softmax, regardless of chunking.
    nn::MatrixBatchProvider set(samples, {1, 0, 1, 0, 1, 0, 1});
    const auto [loss3, acc3] = nn::score(net, set, 3);
    const auto [loss7, acc7] = nn::score(net, set, 7);
    CHECK(loss3 == doctest::Approx(loss7));
    CHECK(acc3 == doctest::Approx(acc7));
    CHECK(loss3 == doctest::Approx(std::log(2.0)));  // zero logits, two classes
}

TEST_CASE("backprop_gradients standardizes raw batches internally") {
    Eigen::MatrixXd raw = Eigen::MatrixXd::Random(75, 6).cwiseAbs() * 255.0;
    nn::Network net = small_net(70, raw);
    const std::vector<int> labels{0, 1, 0, 1, 1, 0};
    const auto grads = nn::backprop_gradients(net, raw, labels);

    nn::ForwardCache cache;
    nn::batched_forward(net, nn::standardize(net, raw), &cache);
    const auto direct = nn::backward(net, cache, labels);
    CHECK(nn::flatten_gradients(net, grads)
              .isApprox(nn::flatten_gradients(net, direct), 1e-12));
}
