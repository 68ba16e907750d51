#include "mothscan/nn/network.hpp"

#include <cmath>
#include <random>
#include <string>

#include "mothscan/errors.hpp"
#include "mothscan/nn/minibatch.hpp"
#include "mothscan/nn/tensor.hpp"

namespace mothscan::nn {

namespace {

constexpr double kStdFloor = 1e-8;

Eigen::VectorXd inverse_std(const Eigen::VectorXd& sd) {
    Eigen::VectorXd inv(sd.size());
    for (Eigen::Index i = 0; i < sd.size(); ++i)
        inv[i] = sd[i] < kStdFloor ? 0.0 : 1.0 / sd[i];
    return inv;
}

}  // namespace

std::vector<Eigen::Index> stage_sides(Eigen::Index input_side, const std::vector<ConvSpec>& specs) {
    std::vector<Eigen::Index> sides{input_side};
    Eigen::Index side = input_side;
    for (const ConvSpec& s : specs) {
        side = side - s.kernel + 1;
        if (side < 1)
            throw DimensionError("conv kernel " + std::to_string(s.kernel) +
                                 " does not fit feature map of side " + std::to_string(sides.back()));
        sides.push_back(side);
        side /= 2;
        if (side < 1)
            throw DimensionError("feature map vanished after pooling");
        sides.push_back(side);
    }
    return sides;
}

void Network::validate() const {
    if (input_side < 1 || channels < 1) throw DimensionError("network input shape unset");
    Eigen::Index side = input_side;
    Eigen::Index maps = channels;
    for (const ConvLayer& c : conv_layers) {
        if (c.in_maps != maps)
            throw DimensionError("conv layer expects " + std::to_string(c.in_maps) +
                                 " input maps, previous stage has " + std::to_string(maps));
        if (c.weight.rows() != c.out_maps || c.weight.cols() != c.in_maps * c.kh * c.kw ||
            c.bias.size() != c.out_maps)
            throw DimensionError("conv layer parameter shapes inconsistent");
        side = side - c.kh + 1;
        if (side < 1) throw DimensionError("conv kernel does not fit its input");
        side /= 2;
        if (side < 1) throw DimensionError("feature map vanished after pooling");
        maps = c.out_maps;
    }
    Eigen::Index dims = maps * side * side;
    if (fc_layers.empty()) throw DimensionError("network has no fully connected layers");
    for (const FCLayer& f : fc_layers) {
        if (f.weight.cols() != dims)
            throw DimensionError("fully connected layer expects " + std::to_string(f.weight.cols()) +
                                 " inputs, previous stage has " + std::to_string(dims));
        if (f.bias.size() != f.weight.rows())
            throw DimensionError("fully connected bias length mismatch");
        dims = f.weight.rows();
    }
    if (dims != 2 || fc_layers.back().activation != Activation::Softmax)
        throw DimensionError("network must end in a 2-way softmax");
}

Eigen::VectorXd glorot_uniform_init(Eigen::Index count, Eigen::Index fan_in, Eigen::Index fan_out,
                                    std::uint64_t seed) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-limit, limit);
    Eigen::VectorXd out(count);
    for (Eigen::Index i = 0; i < count; ++i) out[i] = dist(rng);
    return out;
}

Network make_convnet(Eigen::Index input_side, Eigen::Index channels,
                     const std::vector<ConvSpec>& specs, Eigen::Index hidden_units,
                     std::uint64_t seed) {
    Network net;
    net.input_side = input_side;
    net.channels = channels;
    const std::vector<Eigen::Index> sides = stage_sides(input_side, specs);

    std::uint64_t layer_seed = seed;
    Eigen::Index maps = channels;
    for (const ConvSpec& s : specs) {
        ConvLayer c;
        c.in_maps = maps;
        c.out_maps = s.maps;
        c.kh = c.kw = s.kernel;
        const Eigen::Index cols = c.in_maps * c.kh * c.kw;
        const Eigen::Index fan_in = cols;
        const Eigen::Index fan_out = c.out_maps * c.kh * c.kw;
        Eigen::VectorXd w = glorot_uniform_init(c.out_maps * cols, fan_in, fan_out, layer_seed++);
        c.weight = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                  Eigen::RowMajor>>(w.data(), c.out_maps, cols);
        c.bias = Eigen::VectorXd::Zero(c.out_maps);
        net.conv_layers.push_back(std::move(c));
        maps = s.maps;
    }

    const Eigen::Index flat = specs.empty() ? channels * input_side * input_side
                                            : maps * sides.back() * sides.back();
    const std::vector<std::pair<Eigen::Index, Activation>> fc_shapes{
        {hidden_units, Activation::Relu}, {2, Activation::Softmax}};
    Eigen::Index in_dims = flat;
    for (const auto& [units, act] : fc_shapes) {
        FCLayer f;
        Eigen::VectorXd w = glorot_uniform_init(units * in_dims, in_dims, units, layer_seed++);
        f.weight = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                  Eigen::RowMajor>>(w.data(), units, in_dims);
        f.bias = Eigen::VectorXd::Zero(units);
        f.activation = act;
        net.fc_layers.push_back(std::move(f));
        in_dims = units;
    }
    net.validate();
    return net;
}

Network make_logreg_baseline(Eigen::Index input_side, Eigen::Index channels, std::uint64_t seed) {
    Network net;
    net.input_side = input_side;
    net.channels = channels;
    const Eigen::Index dims = net.input_dims();
    FCLayer f;
    Eigen::VectorXd w = glorot_uniform_init(2 * dims, dims, 2, seed);
    f.weight = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                              Eigen::RowMajor>>(w.data(), 2, dims);
    f.bias = Eigen::VectorXd::Zero(2);
    f.activation = Activation::Softmax;
    net.fc_layers.push_back(std::move(f));
    net.validate();
    return net;
}

void fit_standardization(Network& net, const Eigen::MatrixXd& samples) {
    if (samples.cols() < 1) throw DimensionError("cannot fit standardization on an empty set");
    if (samples.rows() != net.input_dims())
        throw DimensionError("standardization sample dimensionality mismatch");
    StandardizationAccumulator acc(samples.rows());
    acc.add_columns(samples);
    acc.finalize(net);
}

void StandardizationAccumulator::add_columns(const Eigen::Ref<const Eigen::MatrixXd>& samples) {
    sum_ += samples.rowwise().sum();
    sq_ += samples.cwiseProduct(samples).rowwise().sum();
    n_ += samples.cols();
}

void StandardizationAccumulator::finalize(Network& net) const {
    if (n_ < 1) throw DimensionError("cannot fit standardization on an empty set");
    if (sum_.size() != net.input_dims())
        throw DimensionError("standardization sample dimensionality mismatch");
    const double inv_n = 1.0 / static_cast<double>(n_);
    net.input_mean = sum_ * inv_n;
    Eigen::VectorXd var = sq_ * inv_n - net.input_mean.cwiseProduct(net.input_mean);
    net.input_std = var.cwiseMax(0.0).cwiseSqrt();
}

Eigen::MatrixXd standardize(const Network& net, const Eigen::MatrixXd& raw) {
    Eigen::MatrixXd out = raw;
    standardize_inplace(net, out);
    return out;
}

void standardize_inplace(const Network& net, Eigen::MatrixXd& raw) {
    if (raw.rows() != net.input_dims())
        throw DimensionError("patch dimensionality does not match network input");
    if (net.standardize == StandardizeMode::PerPatch) {
        const double inv_d = 1.0 / static_cast<double>(raw.rows());
        for (Eigen::Index j = 0; j < raw.cols(); ++j) {
            auto col = raw.col(j);
            const double mean = col.mean();
            col.array() -= mean;
            const double sd = std::sqrt(col.squaredNorm() * inv_d);
            col *= (sd < kStdFloor ? 0.0 : 1.0 / sd);
        }
        return;
    }
    if (!net.has_statistics())
        throw DimensionError("network standardization statistics not fitted");
    const Eigen::VectorXd inv = inverse_std(net.input_std);
    raw.colwise() -= net.input_mean;
    raw.array().colwise() *= inv.array();
}

Eigen::VectorXd forward(const Network& net, const Eigen::VectorXd& standardized_input) {
    if (standardized_input.size() != net.input_dims())
        throw DimensionError("forward input dimensionality mismatch");
    Tensor t;
    t.shape = {net.channels, net.input_side, net.input_side};
    t.data = standardized_input;
    for (const ConvLayer& c : net.conv_layers) t = maxpool2(conv2d(t, c)).output;
    Eigen::VectorXd v = t.data;
    for (const FCLayer& f : net.fc_layers) v = fully_connected(v, f);
    return v;
}

Eigen::VectorXd predict(const Network& net, const Eigen::MatrixXd& raw_patches) {
    Eigen::MatrixXd x = standardize(net, raw_patches);
    return batched_forward(net, x).row(1).transpose();
}

}  // namespace mothscan::nn
