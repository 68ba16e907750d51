#include "mothscan/nn/minibatch.hpp"

#include <cmath>
#include <string>

#include "mothscan/errors.hpp"

namespace mothscan::nn {

namespace {

struct ConvGeometry {
    Eigen::Index in_h, in_w;    // incoming feature map extent
    Eigen::Index oh, ow;        // after valid convolution
    Eigen::Index ph, pw;        // after 2x2 pooling
};

std::vector<ConvGeometry> conv_geometry(const Network& net) {
    std::vector<ConvGeometry> geo;
    Eigen::Index side = net.input_side;
    for (const ConvLayer& c : net.conv_layers) {
        ConvGeometry g;
        g.in_h = g.in_w = side;
        g.oh = side - c.kh + 1;
        g.ow = side - c.kw + 1;
        if (g.oh < 1 || g.ow < 1) throw DimensionError("conv kernel does not fit its input");
        g.ph = g.oh / 2;
        g.pw = g.ow / 2;
        if (g.ph < 1 || g.pw < 1) throw DimensionError("feature map vanished after pooling");
        geo.push_back(g);
        side = g.ph;
    }
    return geo;
}

void relu_inplace(Eigen::MatrixXd& m) { m = m.cwiseMax(0.0); }

}  // namespace

Gradients Gradients::zeros_like(const Network& net) {
    Gradients g;
    for (const ConvLayer& c : net.conv_layers) {
        g.conv_weight.push_back(Eigen::MatrixXd::Zero(c.weight.rows(), c.weight.cols()));
        g.conv_bias.push_back(Eigen::VectorXd::Zero(c.bias.size()));
    }
    for (const FCLayer& f : net.fc_layers) {
        g.fc_weight.push_back(Eigen::MatrixXd::Zero(f.weight.rows(), f.weight.cols()));
        g.fc_bias.push_back(Eigen::VectorXd::Zero(f.bias.size()));
    }
    return g;
}

Eigen::MatrixXd batched_forward(const Network& net, const Eigen::MatrixXd& standardized,
                                ForwardCache* cache) {
    if (standardized.rows() != net.input_dims())
        throw DimensionError("batch dimensionality does not match network input");
    const Eigen::Index batch = standardized.cols();
    const std::vector<ConvGeometry> geo = conv_geometry(net);

    if (cache) {
        cache->input = standardized;
        cache->patches.clear();
        cache->conv_out.clear();
        cache->pool_src.clear();
        cache->fc_in.clear();
    }

    Eigen::MatrixXd act = standardized;
    for (std::size_t i = 0; i < net.conv_layers.size(); ++i) {
        const ConvLayer& c = net.conv_layers[i];
        const ConvGeometry& g = geo[i];
        const Eigen::Index ohw = g.oh * g.ow;
        const Eigen::Index krows = c.in_maps * c.kh * c.kw;

        Eigen::MatrixXd patches(krows, batch * ohw);
        for (Eigen::Index b = 0; b < batch; ++b)
            im2col(act.col(b).data(), c.in_maps, g.in_h, g.in_w, c.kh, c.kw,
                   patches.data() + b * ohw * krows);

        Eigen::MatrixXd z = c.weight * patches;
        z.colwise() += c.bias;
        relu_inplace(z);

        Eigen::MatrixXd pooled(c.out_maps * g.ph * g.pw, batch);
        Eigen::Matrix<Eigen::Index, Eigen::Dynamic, Eigen::Dynamic> src(pooled.rows(),
                                                                        cache ? batch : 0);
        for (Eigen::Index b = 0; b < batch; ++b) {
            const Eigen::Index base = b * ohw;
            for (Eigen::Index m = 0; m < c.out_maps; ++m) {
                for (Eigen::Index py = 0; py < g.ph; ++py) {
                    for (Eigen::Index px = 0; px < g.pw; ++px) {
                        Eigen::Index best = base + (2 * py) * g.ow + 2 * px;
                        double val = z(m, best);
                        for (Eigen::Index dy = 0; dy < 2; ++dy) {
                            for (Eigen::Index dx = 0; dx < 2; ++dx) {
                                const Eigen::Index col = base + (2 * py + dy) * g.ow + 2 * px + dx;
                                if (z(m, col) > val) {
                                    val = z(m, col);
                                    best = col;
                                }
                            }
                        }
                        const Eigen::Index row = (m * g.ph + py) * g.pw + px;
                        pooled(row, b) = val;
                        if (cache) src(row, b) = best;
                    }
                }
            }
        }

        if (cache) {
            cache->patches.push_back(std::move(patches));
            cache->conv_out.push_back(std::move(z));
            cache->pool_src.push_back(std::move(src));
        }
        act = std::move(pooled);
    }

    for (const FCLayer& f : net.fc_layers) {
        if (f.weight.cols() != act.rows())
            throw DimensionError("fully connected layer input mismatch in batch forward");
        if (cache) cache->fc_in.push_back(act);
        Eigen::MatrixXd z = f.weight * act;
        z.colwise() += f.bias;
        if (f.activation == Activation::Relu)
            relu_inplace(z);
        else
            softmax_columns_inplace(z);
        act = std::move(z);
    }
    if (cache) cache->probs = act;
    return act;
}

double mean_cross_entropy(const Eigen::MatrixXd& probs, const std::vector<int>& labels) {
    if (static_cast<Eigen::Index>(labels.size()) != probs.cols())
        throw DimensionError("label count does not match batch size");
    double total = 0.0;
    for (Eigen::Index b = 0; b < probs.cols(); ++b) {
        const int y = labels[static_cast<std::size_t>(b)];
        if (y < 0 || y >= probs.rows())
            throw DimensionError("label out of range: " + std::to_string(y));
        total -= std::log(probs(y, b));
    }
    return total / static_cast<double>(probs.cols());
}

Gradients backward(const Network& net, const ForwardCache& cache, const std::vector<int>& labels) {
    const Eigen::Index batch = cache.probs.cols();
    if (static_cast<Eigen::Index>(labels.size()) != batch)
        throw DimensionError("label count does not match batch size");
    Gradients g = Gradients::zeros_like(net);
    const std::vector<ConvGeometry> geo = conv_geometry(net);

    Eigen::MatrixXd delta = cache.probs;
    for (Eigen::Index b = 0; b < batch; ++b) delta(labels[static_cast<std::size_t>(b)], b) -= 1.0;
    delta /= static_cast<double>(batch);

    for (std::size_t j = net.fc_layers.size(); j-- > 0;) {
        const Eigen::MatrixXd& in = cache.fc_in[j];
        g.fc_weight[j] = delta * in.transpose();
        g.fc_bias[j] = delta.rowwise().sum();
        if (j == 0 && net.conv_layers.empty()) {
            delta.resize(0, 0);
            break;
        }
        delta = net.fc_layers[j].weight.transpose() * delta;
        if (j > 0 && net.fc_layers[j - 1].activation == Activation::Relu)
            delta.array() *= (in.array() > 0.0).cast<double>();
    }

    for (std::size_t i = net.conv_layers.size(); i-- > 0;) {
        const ConvLayer& c = net.conv_layers[i];
        const ConvGeometry& geom = geo[i];
        const Eigen::Index ohw = geom.oh * geom.ow;

        // Route pooled gradients back to the winning conv outputs.
        Eigen::MatrixXd dz = Eigen::MatrixXd::Zero(c.out_maps, batch * ohw);
        const auto& src = cache.pool_src[i];
        for (Eigen::Index b = 0; b < batch; ++b)
            for (Eigen::Index m = 0; m < c.out_maps; ++m)
                for (Eigen::Index p = 0; p < geom.ph * geom.pw; ++p) {
                    const Eigen::Index row = m * geom.ph * geom.pw + p;
                    dz(m, src(row, b)) += delta(row, b);
                }
        dz.array() *= (cache.conv_out[i].array() > 0.0).cast<double>();

        g.conv_weight[i] = dz * cache.patches[i].transpose();
        g.conv_bias[i] = dz.rowwise().sum();

        if (i == 0) break;
        const Eigen::MatrixXd dpatches = c.weight.transpose() * dz;
        Eigen::MatrixXd dprev = Eigen::MatrixXd::Zero(c.in_maps * geom.in_h * geom.in_w, batch);
        for (Eigen::Index b = 0; b < batch; ++b) {
            for (Eigen::Index y = 0; y < geom.oh; ++y) {
                for (Eigen::Index x = 0; x < geom.ow; ++x) {
                    const Eigen::Index col = b * ohw + y * geom.ow + x;
                    Eigen::Index r = 0;
                    for (Eigen::Index m = 0; m < c.in_maps; ++m)
                        for (Eigen::Index ky = 0; ky < c.kh; ++ky)
                            for (Eigen::Index kx = 0; kx < c.kw; ++kx, ++r)
                                dprev((m * geom.in_h + y + ky) * geom.in_w + x + kx, b) +=
                                    dpatches(r, col);
                }
            }
        }
        delta = std::move(dprev);
    }
    return g;
}

namespace {

Eigen::Index append_rowwise(const Eigen::MatrixXd& m, Eigen::VectorXd& out, Eigen::Index at) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) out[at++] = m(r, c);
    return at;
}

Eigen::Index read_rowwise(Eigen::MatrixXd& m, const Eigen::VectorXd& in, Eigen::Index at) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = in[at++];
    return at;
}

}  // namespace

Eigen::Index parameter_count(const Network& net) {
    Eigen::Index n = 0;
    for (const ConvLayer& c : net.conv_layers) n += c.weight.size() + c.bias.size();
    for (const FCLayer& f : net.fc_layers) n += f.weight.size() + f.bias.size();
    return n;
}

Eigen::VectorXd flatten_parameters(const Network& net) {
    Eigen::VectorXd flat(parameter_count(net));
    Eigen::Index at = 0;
    for (const ConvLayer& c : net.conv_layers) {
        at = append_rowwise(c.weight, flat, at);
        flat.segment(at, c.bias.size()) = c.bias;
        at += c.bias.size();
    }
    for (const FCLayer& f : net.fc_layers) {
        at = append_rowwise(f.weight, flat, at);
        flat.segment(at, f.bias.size()) = f.bias;
        at += f.bias.size();
    }
    return flat;
}

void set_parameters(Network& net, const Eigen::VectorXd& flat) {
    if (flat.size() != parameter_count(net))
        throw DimensionError("flat parameter vector has wrong length");
    Eigen::Index at = 0;
    for (ConvLayer& c : net.conv_layers) {
        at = read_rowwise(c.weight, flat, at);
        c.bias = flat.segment(at, c.bias.size());
        at += c.bias.size();
    }
    for (FCLayer& f : net.fc_layers) {
        at = read_rowwise(f.weight, flat, at);
        f.bias = flat.segment(at, f.bias.size());
        at += f.bias.size();
    }
}

Eigen::VectorXd flatten_gradients(const Network& net, const Gradients& g) {
    Eigen::VectorXd flat(parameter_count(net));
    Eigen::Index at = 0;
    for (std::size_t i = 0; i < net.conv_layers.size(); ++i) {
        at = append_rowwise(g.conv_weight[i], flat, at);
        flat.segment(at, g.conv_bias[i].size()) = g.conv_bias[i];
        at += g.conv_bias[i].size();
    }
    for (std::size_t i = 0; i < net.fc_layers.size(); ++i) {
        at = append_rowwise(g.fc_weight[i], flat, at);
        flat.segment(at, g.fc_bias[i].size()) = g.fc_bias[i];
        at += g.fc_bias[i].size();
    }
    return flat;
}

}  // namespace mothscan::nn
