#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "mothscan/nn/minibatch.hpp"
#include "mothscan/nn/network.hpp"

namespace mothscan::nn {

struct TrainConfig {
    double learning_rate = 0.002;
    Eigen::Index batch_size = 256;
    double momentum = 0.9;
    Eigen::Index max_epochs = 100;
    std::uint64_t seed = 0;
};

/// Throws ConfigError when a field is outside its allowed range.
void validate(const TrainConfig& cfg);

/// Supplies raw 0-255 patch columns by sample index so large augmented sets
/// never have to be materialized at once.
class BatchProvider {
  public:
    virtual ~BatchProvider() = default;
    virtual Eigen::Index size() const = 0;
    virtual Eigen::Index dims() const = 0;
    virtual void materialize(const std::vector<Eigen::Index>& ids, Eigen::MatrixXd& out,
                             std::vector<int>& labels) const = 0;
};

/// In-memory provider for sets small enough to hold as one matrix.
class MatrixBatchProvider final : public BatchProvider {
  public:
    MatrixBatchProvider(Eigen::MatrixXd samples, std::vector<int> labels);
    Eigen::Index size() const override { return samples_.cols(); }
    Eigen::Index dims() const override { return samples_.rows(); }
    void materialize(const std::vector<Eigen::Index>& ids, Eigen::MatrixXd& out,
                     std::vector<int>& labels) const override;

  private:
    Eigen::MatrixXd samples_;
    std::vector<int> labels_;
};

struct EpochStats {
    Eigen::Index epoch = 0;  // 1-based
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainResult {
    Network model;
    std::vector<EpochStats> history;
    Eigen::Index best_epoch = 0;  // 1-based; 0 when no epoch ran
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Standardizes the batch with the model's fitted statistics and returns the
/// mean cross-entropy gradients.
Gradients backprop_gradients(const Network& net, const Eigen::MatrixXd& raw_batch,
                             const std::vector<int>& labels);

/// Classical momentum update: v' = momentum * v - lr * g, params += v'.
void sgd_momentum_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads,
                       Eigen::VectorXd& velocity, const TrainConfig& cfg);

/// Minibatch SGD with momentum. Shuffles per epoch with the config seed,
/// scores the validation set after every epoch and returns the snapshot with
/// the highest validation accuracy (earliest epoch wins ties). Throws
/// TrainingError when the loss turns non-finite.
TrainResult train(Network net, const BatchProvider& train_set, const BatchProvider& val_set,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Mean loss and accuracy of the model over a provider, in batch-size chunks.
std::pair<double, double> score(const Network& net, const BatchProvider& set,
                                Eigen::Index batch_size);

}  // namespace mothscan::nn
