#include "mothscan/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <utility>

#include "mothscan/errors.hpp"

namespace mothscan::nn {

void validate(const TrainConfig& cfg) {
    if (!(cfg.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0))
        throw ConfigError("momentum must lie in [0, 1)");
    if (cfg.batch_size < 1) throw ConfigError("minibatch size must be at least 1");
    if (cfg.max_epochs < 0) throw ConfigError("max epochs must be nonnegative");
}

MatrixBatchProvider::MatrixBatchProvider(Eigen::MatrixXd samples, std::vector<int> labels)
    : samples_(std::move(samples)), labels_(std::move(labels)) {
    if (samples_.cols() != static_cast<Eigen::Index>(labels_.size()))
        throw DimensionError("sample count does not match label count");
}

void MatrixBatchProvider::materialize(const std::vector<Eigen::Index>& ids, Eigen::MatrixXd& out,
                                      std::vector<int>& labels) const {
    out.resize(samples_.rows(), static_cast<Eigen::Index>(ids.size()));
    labels.resize(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out.col(static_cast<Eigen::Index>(i)) = samples_.col(ids[i]);
        labels[i] = labels_[static_cast<std::size_t>(ids[i])];
    }
}

Gradients backprop_gradients(const Network& net, const Eigen::MatrixXd& raw_batch,
                             const std::vector<int>& labels) {
    if (raw_batch.cols() < 1) throw DimensionError("gradient batch is empty");
    ForwardCache cache;
    batched_forward(net, standardize(net, raw_batch), &cache);
    return backward(net, cache, labels);
}

void sgd_momentum_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads,
                       Eigen::VectorXd& velocity, const TrainConfig& cfg) {
    if (params.size() != grads.size() || params.size() != velocity.size())
        throw DimensionError("parameter, gradient and velocity lengths differ");
    velocity = cfg.momentum * velocity - cfg.learning_rate * grads;
    params += velocity;
}

namespace {

std::pair<double, Eigen::Index> batch_loss_and_hits(const Eigen::MatrixXd& probs,
                                                    const std::vector<int>& labels) {
    double loss = 0.0;
    Eigen::Index hits = 0;
    for (Eigen::Index b = 0; b < probs.cols(); ++b) {
        const int y = labels[static_cast<std::size_t>(b)];
        loss -= std::log(probs(y, b));
        Eigen::Index pred;
        probs.col(b).maxCoeff(&pred);
        if (pred == y) ++hits;
    }
    return {loss, hits};
}

std::vector<Eigen::Index> chunk(const std::vector<Eigen::Index>& order, std::size_t begin,
                                std::size_t count) {
    return {order.begin() + static_cast<std::ptrdiff_t>(begin),
            order.begin() + static_cast<std::ptrdiff_t>(begin + count)};
}

}  // namespace

std::pair<double, double> score(const Network& net, const BatchProvider& set,
                                Eigen::Index batch_size) {
    const Eigen::Index n = set.size();
    if (n < 1) throw DimensionError("cannot score an empty set");
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    double loss = 0.0;
    Eigen::Index hits = 0;
    Eigen::MatrixXd batch;
    std::vector<int> labels;
    for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(batch_size)) {
        const std::size_t take =
            std::min(static_cast<std::size_t>(batch_size), order.size() - at);
        set.materialize(chunk(order, at, take), batch, labels);
        standardize_inplace(net, batch);
        const Eigen::MatrixXd probs = batched_forward(net, batch);
        const auto [l, h] = batch_loss_and_hits(probs, labels);
        loss += l;
        hits += h;
    }
    return {loss / static_cast<double>(n), static_cast<double>(hits) / static_cast<double>(n)};
}

TrainResult train(Network net, const BatchProvider& train_set, const BatchProvider& val_set,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
    validate(cfg);
    net.validate();
    if (train_set.size() < 1 || val_set.size() < 1)
        throw DimensionError("training and validation sets must be nonempty");
    if (train_set.dims() != net.input_dims() || val_set.dims() != net.input_dims())
        throw DimensionError("provider dimensionality does not match network input");

    TrainResult result;
    if (cfg.max_epochs == 0) {
        result.model = std::move(net);
        return result;
    }

    Eigen::VectorXd params = flatten_parameters(net);
    Eigen::VectorXd velocity = Eigen::VectorXd::Zero(params.size());
    Eigen::VectorXd best_params = params;
    double best_acc = -1.0;

    std::mt19937_64 rng(cfg.seed);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(train_set.size()));
    std::iota(order.begin(), order.end(), 0);

    Eigen::MatrixXd batch;
    std::vector<int> labels;
    ForwardCache cache;
    for (Eigen::Index epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        Eigen::Index epoch_hits = 0;
        for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t take =
                std::min(static_cast<std::size_t>(cfg.batch_size), order.size() - at);
            train_set.materialize(chunk(order, at, take), batch, labels);
            standardize_inplace(net, batch);
            batched_forward(net, batch, &cache);
            const auto [batch_loss, batch_hits] = batch_loss_and_hits(cache.probs, labels);
            if (!std::isfinite(batch_loss))
                throw TrainingError("loss became non-finite at epoch " + std::to_string(epoch),
                                    epoch);
            epoch_loss += batch_loss;
            epoch_hits += batch_hits;
            const Gradients grads = backward(net, cache, labels);
            sgd_momentum_step(params, flatten_gradients(net, grads), velocity, cfg);
            set_parameters(net, params);
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = epoch_loss / static_cast<double>(train_set.size());
        stats.train_accuracy =
            static_cast<double>(epoch_hits) / static_cast<double>(train_set.size());
        std::tie(stats.val_loss, stats.val_accuracy) = score(net, val_set, cfg.batch_size);
        if (!std::isfinite(stats.val_loss))
            throw TrainingError("validation loss became non-finite at epoch " +
                                    std::to_string(epoch),
                                epoch);
        result.history.push_back(stats);
        if (on_epoch) on_epoch(stats);

        if (stats.val_accuracy > best_acc) {
            best_acc = stats.val_accuracy;
            best_params = params;
            result.best_epoch = epoch;
        }
    }

    set_parameters(net, best_params);
    result.model = std::move(net);
    return result;
}

}  // namespace mothscan::nn
