#include "mothscan/nn/layers.hpp"

#include <limits>

#include "mothscan/errors.hpp"

namespace mothscan::nn {

void im2col(const double* sample, Eigen::Index maps, Eigen::Index h, Eigen::Index w,
            Eigen::Index kh, Eigen::Index kw, double* cols_out) {
    const Eigen::Index oh = h - kh + 1;
    const Eigen::Index ow = w - kw + 1;
    const Eigen::Index rows = maps * kh * kw;
    // cols_out is column-major (rows x oh*ow): entry (r, col) at col*rows + r.
    for (Eigen::Index m = 0; m < maps; ++m) {
        const double* plane = sample + m * h * w;
        for (Eigen::Index ky = 0; ky < kh; ++ky)
            for (Eigen::Index kx = 0; kx < kw; ++kx) {
                const Eigen::Index r = (m * kh + ky) * kw + kx;
                for (Eigen::Index y = 0; y < oh; ++y) {
                    const double* src = plane + (y + ky) * w + kx;
                    double* dst = cols_out + (y * ow) * rows + r;
                    for (Eigen::Index x = 0; x < ow; ++x) dst[x * rows] = src[x];
                }
            }
    }
}

Tensor conv2d(const Tensor& input, const ConvLayer& layer) {
    if (input.shape.size() != 3 || !input.shape_matches_data())
        throw DimensionError("conv2d: input must be a (maps, h, w) tensor");
    const Eigen::Index maps = input.shape[0], h = input.shape[1], w = input.shape[2];
    if (maps != layer.in_maps)
        throw DimensionError("conv2d: input has " + std::to_string(maps) + " maps, layer expects " +
                             std::to_string(layer.in_maps));
    if (h < layer.kh || w < layer.kw)
        throw DimensionError("conv2d: input extents smaller than kernel");

    const Eigen::Index oh = h - layer.kh + 1;
    const Eigen::Index ow = w - layer.kw + 1;
    Eigen::MatrixXd cols(layer.in_maps * layer.kh * layer.kw, oh * ow);
    im2col(input.data.data(), maps, h, w, layer.kh, layer.kw, cols.data());

    Eigen::MatrixXd out = layer.weight * cols;        // out_maps x (oh*ow)
    out.colwise() += layer.bias;
    out = out.cwiseMax(0.0);

    Tensor result;
    result.shape = {layer.out_maps, oh, ow};
    result.data.resize(layer.out_maps * oh * ow);
    // Row i of `out` is output map i in row-major spatial order.
    for (Eigen::Index m = 0; m < layer.out_maps; ++m)
        result.data.segment(m * oh * ow, oh * ow) = out.row(m).transpose();
    return result;
}

PoolResult maxpool2(const Tensor& input) {
    if (input.shape.size() != 3 || !input.shape_matches_data())
        throw DimensionError("maxpool2: input must be a (maps, h, w) tensor");
    const Eigen::Index maps = input.shape[0];
    const Eigen::Index h = input.shape[1] - input.shape[1] % 2;  // crop odd extents
    const Eigen::Index w = input.shape[2] - input.shape[2] % 2;
    const Eigen::Index ih = input.shape[1], iw = input.shape[2];
    const Eigen::Index oh = h / 2, ow = w / 2;

    PoolResult res;
    res.output = Tensor::zeros({maps, oh, ow});
    res.argmax.resize(static_cast<std::size_t>(maps * oh * ow));
    for (Eigen::Index m = 0; m < maps; ++m)
        for (Eigen::Index y = 0; y < oh; ++y)
            for (Eigen::Index x = 0; x < ow; ++x) {
                double best = -std::numeric_limits<double>::infinity();
                Eigen::Index best_idx = 0;
                for (Eigen::Index dy = 0; dy < 2; ++dy)
                    for (Eigen::Index dx = 0; dx < 2; ++dx) {
                        const Eigen::Index idx = (m * ih + 2 * y + dy) * iw + 2 * x + dx;
                        if (input.data[idx] > best) {
                            best = input.data[idx];
                            best_idx = idx;
                        }
                    }
                res.output.at(m, y, x) = best;
                res.argmax[static_cast<std::size_t>((m * oh + y) * ow + x)] = best_idx;
            }
    return res;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    const double m = logits.maxCoeff();
    Eigen::VectorXd e = (logits.array() - m).exp();
    return e / e.sum();
}

void softmax_columns_inplace(Eigen::MatrixXd& logits) {
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
        const double m = logits.col(c).maxCoeff();
        logits.col(c) = (logits.col(c).array() - m).exp();
        logits.col(c) /= logits.col(c).sum();
    }
}

Eigen::VectorXd fully_connected(const Eigen::VectorXd& input, const FCLayer& layer) {
    if (input.size() != layer.weight.cols())
        throw DimensionError("fully_connected: input length " + std::to_string(input.size()) +
                             " does not match weight columns " +
                             std::to_string(layer.weight.cols()));
    Eigen::VectorXd z = layer.weight * input + layer.bias;
    if (layer.activation == Activation::Relu) return z.cwiseMax(0.0);
    return softmax(z);
}

}  // namespace mothscan::nn
