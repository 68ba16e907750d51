#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mothscan/nn/tensor.hpp"

namespace mothscan::nn {

enum class Activation { Relu, Softmax };

/// Convolution filter bank. Weights are stored as one row per output map,
/// each row holding the receptive field in (in_map, ky, kx) row-major order,
/// i.e. column (m * kh + ky) * kw + kx.
struct ConvLayer {
    Eigen::Index in_maps = 0;
    Eigen::Index out_maps = 0;
    Eigen::Index kh = 0;
    Eigen::Index kw = 0;
    Eigen::MatrixXd weight;  // out_maps x (in_maps * kh * kw)
    Eigen::VectorXd bias;    // out_maps

    double weight_at(Eigen::Index out, Eigen::Index in, Eigen::Index ky, Eigen::Index kx) const {
        return weight(out, (in * kh + ky) * kw + kx);
    }
    double& weight_at(Eigen::Index out, Eigen::Index in, Eigen::Index ky, Eigen::Index kx) {
        return weight(out, (in * kh + ky) * kw + kx);
    }
};

struct FCLayer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;    // out
    Activation activation = Activation::Relu;
};

/// Valid cross-correlation over all input maps, plus bias, then RELU.
/// Output extents are H - kh + 1 by W - kw + 1.
Tensor conv2d(const Tensor& input, const ConvLayer& layer);

struct PoolResult {
    Tensor output;
    // For each output element, the flat index of the winning input element
    // (first maximum in row-major window order). Used to route gradients.
    std::vector<Eigen::Index> argmax;
};

/// 2x2 max-pooling on disjoint windows. Odd trailing rows/columns are
/// cropped, not padded.
PoolResult maxpool2(const Tensor& input);

/// phi(W x + b) with phi given by the layer's activation tag.
Eigen::VectorXd fully_connected(const Eigen::VectorXd& input, const FCLayer& layer);

/// Numerically stable softmax (max-subtracted).
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

/// Column-wise softmax over a batch of logit columns, in place.
void softmax_columns_inplace(Eigen::MatrixXd& logits);

/// Gathers all valid receptive fields of a (maps, h, w) sample into columns:
/// one column per output position (row-major), one row per receptive-field
/// element in the ConvLayer weight order. `sample` points at maps*h*w doubles.
void im2col(const double* sample, Eigen::Index maps, Eigen::Index h, Eigen::Index w,
            Eigen::Index kh, Eigen::Index kw, double* cols_out);

}  // namespace mothscan::nn
