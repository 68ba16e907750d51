#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mothscan/nn/network.hpp"

namespace mothscan::nn {

/// Parameter gradients, shaped like the network's layers.
struct Gradients {
    std::vector<Eigen::MatrixXd> conv_weight;
    std::vector<Eigen::VectorXd> conv_bias;
    std::vector<Eigen::MatrixXd> fc_weight;
    std::vector<Eigen::VectorXd> fc_bias;

    static Gradients zeros_like(const Network& net);
};

/// Intermediate activations kept for the backward pass. Column blocks of the
/// conv matrices are per-sample; pooled activations use one column per sample.
struct ForwardCache {
    Eigen::MatrixXd input;                        // dims x B, standardized
    std::vector<Eigen::MatrixXd> patches;         // im2col per conv stage
    std::vector<Eigen::MatrixXd> conv_out;        // post-RELU, out_maps x (B*oh*ow)
    std::vector<Eigen::Matrix<Eigen::Index, Eigen::Dynamic, Eigen::Dynamic>> pool_src;
    std::vector<Eigen::MatrixXd> fc_in;           // input to each fully connected layer
    Eigen::MatrixXd probs;                        // 2 x B softmax output
};

/// Runs the network over a batch of standardized sample columns. Returns the
/// 2 x B class probabilities. With a cache, keeps what backward() needs;
/// without, uses transient scratch only.
Eigen::MatrixXd batched_forward(const Network& net, const Eigen::MatrixXd& standardized,
                                ForwardCache* cache = nullptr);

/// Mean cross-entropy of the true-class probabilities. Labels are 0 or 1.
double mean_cross_entropy(const Eigen::MatrixXd& probs, const std::vector<int>& labels);

/// Gradient of the mean cross-entropy with respect to every parameter.
Gradients backward(const Network& net, const ForwardCache& cache, const std::vector<int>& labels);

/// Parameters in layer declaration order, weights row by row, bias after its
/// weight. The checkpoint format serializes this exact sequence.
Eigen::VectorXd flatten_parameters(const Network& net);
void set_parameters(Network& net, const Eigen::VectorXd& flat);
Eigen::VectorXd flatten_gradients(const Network& net, const Gradients& g);
Eigen::Index parameter_count(const Network& net);

}  // namespace mothscan::nn
