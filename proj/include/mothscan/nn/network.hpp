#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mothscan/nn/layers.hpp"

namespace mothscan::nn {

enum class StandardizeMode {
    Dataset,   // per-dimension mean/std fitted over the training patches
    PerPatch,  // each patch standardized by its own mean/std
};

/// Feed-forward classifier: zero or more conv layers (each followed by 2x2
/// max-pooling), then fully connected layers ending in a 2-way softmax.
/// Carries the input-standardization statistics it was trained with.
struct Network {
    Eigen::Index input_side = 0;
    Eigen::Index channels = 3;
    std::vector<ConvLayer> conv_layers;
    std::vector<FCLayer> fc_layers;
    StandardizeMode standardize = StandardizeMode::Dataset;
    Eigen::VectorXd input_mean;  // per input dimension; empty until fitted
    Eigen::VectorXd input_std;

    Eigen::Index input_dims() const { return channels * input_side * input_side; }
    bool has_statistics() const {
        return standardize == StandardizeMode::PerPatch || input_mean.size() == input_dims();
    }

    /// Throws DimensionError if layer shapes do not chain from the input side.
    void validate() const;
};

struct ConvSpec {
    Eigen::Index maps = 0;
    Eigen::Index kernel = 0;
};

/// Side lengths of every feature map stage: input, post-conv and post-pool
/// for each conv layer. Throws if some stage underflows.
std::vector<Eigen::Index> stage_sides(Eigen::Index input_side, const std::vector<ConvSpec>& specs);

/// Uniform draws on [-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))].
Eigen::VectorXd glorot_uniform_init(Eigen::Index count, Eigen::Index fan_in, Eigen::Index fan_out,
                                    std::uint64_t seed);

/// Conv/pool stacks per `specs`, one RELU hidden layer, 2-way softmax output.
Network make_convnet(Eigen::Index input_side, Eigen::Index channels,
                     const std::vector<ConvSpec>& specs, Eigen::Index hidden_units,
                     std::uint64_t seed);

/// Degenerate network: a single softmax layer over the flattened patch.
Network make_logreg_baseline(Eigen::Index input_side, Eigen::Index channels, std::uint64_t seed);

/// Per-dimension standardization fitted over columns-as-samples data.
/// Dimensions with std below 1e-8 are flagged to map to zero.
void fit_standardization(Network& net, const Eigen::MatrixXd& samples);

/// Streaming variant of fit_standardization for sets too big to materialize.
class StandardizationAccumulator {
  public:
    explicit StandardizationAccumulator(Eigen::Index dims)
        : n_(0), sum_(Eigen::VectorXd::Zero(dims)), sq_(Eigen::VectorXd::Zero(dims)) {}
    void add(const Eigen::Ref<const Eigen::VectorXd>& sample) {
        sum_ += sample;
        sq_ += sample.cwiseProduct(sample);
        ++n_;
    }
    void add_columns(const Eigen::Ref<const Eigen::MatrixXd>& samples);
    void finalize(Network& net) const;

  private:
    long long n_;
    Eigen::VectorXd sum_;
    Eigen::VectorXd sq_;
};

/// Applies the stored standardization to raw 0-255 patch columns.
Eigen::MatrixXd standardize(const Network& net, const Eigen::MatrixXd& raw);
void standardize_inplace(const Network& net, Eigen::MatrixXd& raw);

/// Forward pass over one standardized input; returns the 2 class probabilities.
Eigen::VectorXd forward(const Network& net, const Eigen::VectorXd& standardized_input);

/// Probability of the positive (moth) class for each raw patch column.
Eigen::VectorXd predict(const Network& net, const Eigen::MatrixXd& raw_patches);

}  // namespace mothscan::nn
