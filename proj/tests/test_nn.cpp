#include <cmath>
#include <fstream>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "mothscan/errors.hpp"
#include "mothscan/nn/checkpoint.hpp"
#include "mothscan/nn/layers.hpp"
#include "mothscan/nn/minibatch.hpp"
#include "mothscan/nn/network.hpp"

using namespace mothscan;
using testutil::TempDir;

namespace {

nn::Network random_net(Eigen::Index side, std::uint64_t seed) {
    nn::Network net = nn::make_convnet(side, 3, {{2, 3}, {3, 3}}, 5, seed);
    net.input_mean = Eigen::VectorXd::Zero(net.input_dims());
    net.input_std = Eigen::VectorXd::Ones(net.input_dims());
    return net;
}

}  // namespace

TEST_CASE("conv2d is a valid cross-correlation with bias and relu") {
    nn::Tensor in = nn::Tensor::zeros({1, 3, 3});
    for (Eigen::Index i = 0; i < 9; ++i) in.data[i] = double(i + 1);  // rows 123/456/789

    nn::ConvLayer layer;
    layer.in_maps = 1;
    layer.out_maps = 2;
    layer.kh = layer.kw = 2;
    layer.weight.setZero(2, 4);
    layer.bias.setZero(2);
    // Map 0 picks the top-left of each window: output equals that pixel.
    layer.weight_at(0, 0, 0, 0) = 1.0;
    // Map 1 is a negative sum; relu clamps it to zero.
    layer.weight.row(1).setConstant(-1.0);
    layer.bias(1) = 2.0;

    const nn::Tensor out = nn::conv2d(in, layer);
    REQUIRE(out.extent(0) == 2);
    REQUIRE(out.extent(1) == 2);
    REQUIRE(out.extent(2) == 2);
    CHECK(out.at(0, 0, 0) == 1.0);
    CHECK(out.at(0, 0, 1) == 2.0);
    CHECK(out.at(0, 1, 0) == 4.0);
    CHECK(out.at(0, 1, 1) == 5.0);
    // Window sums are 12, 16, 24, 28; 2 - sum < 0 everywhere.
    for (Eigen::Index y = 0; y < 2; ++y)
        for (Eigen::Index x = 0; x < 2; ++x) CHECK(out.at(1, y, x) == 0.0);
}

TEST_CASE("conv2d sums over input maps") {
    nn::Tensor in = nn::Tensor::zeros({2, 2, 2});
    in.data << 1, 2, 3, 4, 10, 20, 30, 40;
    nn::ConvLayer layer;
    layer.in_maps = 2;
    layer.out_maps = 1;
    layer.kh = layer.kw = 2;
    layer.weight.setOnes(1, 8);
    layer.bias.setZero(1);
    const nn::Tensor out = nn::conv2d(in, layer);
    CHECK(out.at(0, 0, 0) == 110.0);
}

TEST_CASE("maxpool2 crops odd extents and keeps the first maximum") {
    nn::Tensor in = nn::Tensor::zeros({1, 3, 5});
    in.data << 1, 5, 2, 2, 9,   //
        5, 3, 2, 2, 7,          //
        8, 8, 8, 8, 8;          // odd row and column are dropped
    const nn::PoolResult pooled = nn::maxpool2(in);
    REQUIRE(pooled.output.extent(0) == 1);
    REQUIRE(pooled.output.extent(1) == 1);
    REQUIRE(pooled.output.extent(2) == 2);
    CHECK(pooled.output.at(0, 0, 0) == 5.0);
    CHECK(pooled.output.at(0, 0, 1) == 2.0);
    // Ties resolve to the first element in row-major window order: the 5 at
    // (0,1) beats the 5 at (1,0); the 2 at (0,2) beats the other three 2s.
    CHECK(pooled.argmax[0] == 1);
    CHECK(pooled.argmax[1] == 2);
}

TEST_CASE("fully connected layers apply their activation") {
    nn::FCLayer fc;
    fc.weight.resize(2, 2);
    fc.weight << 1, -1, 2, 0;
    fc.bias.resize(2);
    fc.bias << -3, 1;
    fc.activation = nn::Activation::Relu;
    Eigen::VectorXd x(2);
    x << 2, 1;
    const Eigen::VectorXd y = nn::fully_connected(x, fc);
    CHECK(y(0) == 0.0);  // 2 - 1 - 3 = -2, clamped
    CHECK(y(1) == 5.0);

    fc.activation = nn::Activation::Softmax;
    const Eigen::VectorXd p = nn::fully_connected(x, fc);
    CHECK(p.sum() == doctest::Approx(1.0));
    CHECK(p(1) > p(0));
}

TEST_CASE("softmax is stable for extreme logits") {
    Eigen::VectorXd logits(2);
    logits << 1000.0, 1000.0 + std::log(3.0);
    const Eigen::VectorXd p = nn::softmax(logits);
    CHECK(p(0) == doctest::Approx(0.25));
    CHECK(p(1) == doctest::Approx(0.75));

    Eigen::MatrixXd batch(2, 2);
    batch.col(0) = logits;
    batch.col(1) << -500.0, -500.0;
    nn::softmax_columns_inplace(batch);
    CHECK(batch(0, 0) == doctest::Approx(0.25));
    CHECK(batch(0, 1) == doctest::Approx(0.5));
    CHECK(batch.colwise().sum().isApproxToConstant(1.0));
}

TEST_CASE("im2col lays receptive fields out in weight order") {
    // One 2-map 3x3 sample; kernel 2x2 gives 4 positions of 8 elements.
    std::vector<double> sample(18);
    for (std::size_t i = 0; i < 18; ++i) sample[i] = double(i);
    Eigen::MatrixXd cols(8, 4);
    nn::im2col(sample.data(), 2, 3, 3, 2, 2, cols.data());
    // Column 0 = window at (0,0): map0 rows {0,1,3,4}, map1 rows {9,10,12,13}.
    Eigen::VectorXd expect(8);
    expect << 0, 1, 3, 4, 9, 10, 12, 13;
    CHECK(cols.col(0) == expect);
    // Column 3 = window at (1,1).
    expect << 4, 5, 7, 8, 13, 14, 16, 17;
    CHECK(cols.col(3) == expect);
}

TEST_CASE("glorot init is bounded, seeded and fan-dependent") {
    const Eigen::Index fan_in = 75, fan_out = 25;
    const double bound = std::sqrt(6.0 / double(fan_in + fan_out));
    const Eigen::VectorXd a = nn::glorot_uniform_init(4000, fan_in, fan_out, 7);
    const Eigen::VectorXd b = nn::glorot_uniform_init(4000, fan_in, fan_out, 7);
    const Eigen::VectorXd c = nn::glorot_uniform_init(4000, fan_in, fan_out, 8);
    CHECK(a == b);
    CHECK(a != c);
    CHECK(a.maxCoeff() <= bound);
    CHECK(a.minCoeff() >= -bound);
    CHECK(a.maxCoeff() > 0.8 * bound);  // draws actually reach the range
    CHECK(a.minCoeff() < -0.8 * bound);
}

TEST_CASE("stage sides shrink by valid conv and floor-halving pool") {
    CHECK(nn::stage_sides(21, {{16, 5}, {32, 5}}) ==
          std::vector<Eigen::Index>{21, 17, 8, 4, 2});
    CHECK(nn::stage_sides(11, {{2, 5}}) == std::vector<Eigen::Index>{11, 7, 3});
    CHECK_THROWS_AS(nn::stage_sides(5, {{2, 5}, {2, 5}}), DimensionError);
}

TEST_CASE("convnet factory wires the documented architecture") {
    const nn::Network net = nn::make_convnet(21, 3, {{16, 5}, {32, 5}}, 128, 1);
    net.validate();
    REQUIRE(net.conv_layers.size() == 2);
    REQUIRE(net.fc_layers.size() == 2);
    CHECK(net.conv_layers[0].weight.rows() == 16);
    CHECK(net.conv_layers[0].weight.cols() == 3 * 5 * 5);
    CHECK(net.conv_layers[1].weight.cols() == 16 * 5 * 5);
    CHECK(net.fc_layers[0].weight.rows() == 128);
    CHECK(net.fc_layers[0].weight.cols() == 32 * 2 * 2);
    CHECK(net.fc_layers[1].weight.rows() == 2);
    CHECK(net.fc_layers[0].activation == nn::Activation::Relu);
    CHECK(net.fc_layers[1].activation == nn::Activation::Softmax);
    for (const auto& conv : net.conv_layers) CHECK(conv.bias.isZero());

    const nn::Network logreg = nn::make_logreg_baseline(21, 3, 1);
    logreg.validate();
    CHECK(logreg.conv_layers.empty());
    REQUIRE(logreg.fc_layers.size() == 1);
    CHECK(logreg.fc_layers[0].weight.cols() == 3 * 21 * 21);
    CHECK(logreg.fc_layers[0].activation == nn::Activation::Softmax);
}

TEST_CASE("network seeds decorrelate layers but reproduce runs") {
    const nn::Network a = nn::make_convnet(11, 3, {{2, 3}}, 4, 5);
    const nn::Network b = nn::make_convnet(11, 3, {{2, 3}}, 4, 5);
    const nn::Network c = nn::make_convnet(11, 3, {{2, 3}}, 4, 6);
    CHECK(nn::flatten_parameters(a) == nn::flatten_parameters(b));
    CHECK(nn::flatten_parameters(a) != nn::flatten_parameters(c));
    CHECK(a.conv_layers[0].weight != a.fc_layers[0].weight.topLeftCorner(2, 27));
}

TEST_CASE("dataset standardization centres dimensions and kills constants") {
    nn::Network net = nn::make_logreg_baseline(1, 3, 2);
    Eigen::MatrixXd samples(3, 4);
    samples << 1, 2, 3, 4,  //
        5, 5, 5, 5,         // constant: std below the floor maps to zero
        0, 2, 0, 2;
    nn::fit_standardization(net, samples);
    REQUIRE(net.has_statistics());
    const Eigen::MatrixXd z = nn::standardize(net, samples);
    CHECK(z.row(0).mean() == doctest::Approx(0.0));
    CHECK(z.row(1).isZero());
    // Population std of row 0 is sqrt(1.25).
    CHECK(z(0, 0) == doctest::Approx(-1.5 / std::sqrt(1.25)));
    CHECK(z(2, 1) == doctest::Approx(1.0));

    Eigen::MatrixXd copy = samples;
    nn::standardize_inplace(net, copy);
    CHECK(copy == z);
}

TEST_CASE("streaming standardization matches the one-shot fit") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 255.0);
    Eigen::MatrixXd samples(12, 50);
    for (Eigen::Index i = 0; i < samples.size(); ++i) samples.data()[i] = u(rng);

    nn::Network whole = nn::make_logreg_baseline(2, 3, 0);
    nn::fit_standardization(whole, samples);

    nn::Network stream = nn::make_logreg_baseline(2, 3, 0);
    nn::StandardizationAccumulator acc(12);
    acc.add_columns(samples.leftCols(13));
    acc.add_columns(samples.middleCols(13, 20));
    for (Eigen::Index c = 33; c < 50; ++c) acc.add(samples.col(c));
    acc.finalize(stream);

    CHECK(stream.input_mean.isApprox(whole.input_mean, 1e-12));
    CHECK(stream.input_std.isApprox(whole.input_std, 1e-12));
}

TEST_CASE("per-patch mode standardizes each column by its own moments") {
    nn::Network net = nn::make_logreg_baseline(1, 3, 2);
    net.standardize = nn::StandardizeMode::PerPatch;
    CHECK(net.has_statistics());  // nothing to fit
    Eigen::MatrixXd raw(3, 2);
    raw << 0, 7, 10, 7, 20, 7;
    const Eigen::MatrixXd z = nn::standardize(net, raw);
    CHECK(z.col(0).mean() == doctest::Approx(0.0));
    CHECK(z(0, 0) == doctest::Approx(-10.0 / std::sqrt(200.0 / 3.0)));
    CHECK(z.col(1).isZero());  // constant patch
}

TEST_CASE("batched forward agrees with the single-sample path") {
    const nn::Network net = random_net(11, 3);
    Eigen::MatrixXd raw(net.input_dims(), 5);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 255.0);
    for (Eigen::Index i = 0; i < raw.size(); ++i) raw.data()[i] = u(rng);

    const Eigen::MatrixXd z = nn::standardize(net, raw);
    const Eigen::MatrixXd batch = nn::batched_forward(net, z);
    REQUIRE(batch.rows() == 2);
    REQUIRE(batch.cols() == 5);
    for (Eigen::Index c = 0; c < 5; ++c) {
        const Eigen::VectorXd single = nn::forward(net, z.col(c));
        CHECK(batch.col(c).isApprox(single, 1e-12));
    }
    const Eigen::VectorXd probs = nn::predict(net, raw);
    for (Eigen::Index c = 0; c < 5; ++c) CHECK(probs(c) == doctest::Approx(batch(1, c)));
}

TEST_CASE("mean cross entropy averages the true-class surprisal") {
    Eigen::MatrixXd probs(2, 2);
    probs << 0.75, 0.4,  //
        0.25, 0.6;
    const double expect = -(std::log(0.25) + std::log(0.4)) / 2.0;
    CHECK(nn::mean_cross_entropy(probs, {1, 0}) == doctest::Approx(expect));
}

TEST_CASE("backprop gradients match central finite differences") {
    nn::Network net = random_net(11, 12);
    const Eigen::Index dims = net.input_dims();
    Eigen::MatrixXd raw(dims, 4);
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 255.0);
    for (Eigen::Index i = 0; i < raw.size(); ++i) raw.data()[i] = u(rng);
    const std::vector<int> labels{1, 0, 1, 1};

    const Eigen::MatrixXd z = nn::standardize(net, raw);
    nn::ForwardCache cache;
    nn::batched_forward(net, z, &cache);
    const Eigen::VectorXd grad =
        nn::flatten_gradients(net, nn::backward(net, cache, labels));

    Eigen::VectorXd params = nn::flatten_parameters(net);
    REQUIRE(grad.size() == params.size());
    const double eps = 1e-5;
    std::mt19937_64 pick(99);
    for (int probe = 0; probe < 60; ++probe) {
        const Eigen::Index i =
            static_cast<Eigen::Index>(pick() % static_cast<std::uint64_t>(params.size()));
        const double saved = params(i);
        auto loss_at = [&](double v) {
            params(i) = v;
            nn::set_parameters(net, params);
            return nn::mean_cross_entropy(nn::batched_forward(net, z), labels);
        };
        const double numeric = (loss_at(saved + eps) - loss_at(saved - eps)) / (2.0 * eps);
        params(i) = saved;
        nn::set_parameters(net, params);
        const double denom = std::max({std::abs(numeric), std::abs(grad(i)), 1e-8});
        CHECK(std::abs(numeric - grad(i)) / denom <= 1e-4);
    }
}

TEST_CASE("parameter flattening is a faithful bijection") {
    nn::Network net = nn::make_convnet(11, 3, {{2, 3}}, 4, 21);
    const Eigen::Index expect = 2 * (3 * 3 * 3) + 2        // conv weight + bias
                                + 4 * (2 * 4 * 4) + 4      // hidden layer
                                + 2 * 4 + 2;               // softmax layer
    CHECK(nn::parameter_count(net) == expect);

    Eigen::VectorXd flat = nn::flatten_parameters(net);
    REQUIRE(flat.size() == expect);
    // First entries are conv weight row 0; bias follows the whole weight.
    CHECK(flat(0) == net.conv_layers[0].weight(0, 0));
    CHECK(flat(1) == net.conv_layers[0].weight(0, 1));
    CHECK(flat(2 * 27) == net.conv_layers[0].bias(0));

    flat = flat.reverse().eval();
    nn::set_parameters(net, flat);
    CHECK(nn::flatten_parameters(net) == flat);
    CHECK_THROWS_AS(nn::set_parameters(net, Eigen::VectorXd::Zero(expect - 1)),
                    DimensionError);
}

TEST_CASE("checkpoints round trip bit for bit") {
    TempDir dir("ckpt");
    nn::Network net = nn::make_convnet(11, 3, {{2, 5}}, 6, 77);
    Eigen::MatrixXd samples = Eigen::MatrixXd::Random(net.input_dims(), 20) * 100.0;
    nn::fit_standardization(net, samples.cwiseAbs());

    const auto path = dir / "model.bin";
    nn::save_checkpoint(net, path);
    const nn::Network back = nn::load_checkpoint(path);
    CHECK(back.input_side == net.input_side);
    CHECK(back.channels == net.channels);
    CHECK(back.standardize == net.standardize);
    CHECK(nn::flatten_parameters(back) == nn::flatten_parameters(net));
    CHECK(back.input_mean == net.input_mean);
    CHECK(back.input_std == net.input_std);

    // Stats-free and per-patch variants keep their flags.
    nn::Network bare = nn::make_logreg_baseline(5, 3, 1);
    bare.standardize = nn::StandardizeMode::PerPatch;
    nn::save_checkpoint(bare, dir / "bare.bin");
    const nn::Network bare_back = nn::load_checkpoint(dir / "bare.bin");
    CHECK(bare_back.standardize == nn::StandardizeMode::PerPatch);
    CHECK(bare_back.input_mean.size() == 0);
}

TEST_CASE("checkpoint loader rejects corrupt files") {
    TempDir dir("ckpt_bad");
    nn::Network net = nn::make_logreg_baseline(5, 3, 1);
    const auto path = dir / "model.bin";
    nn::save_checkpoint(net, path);

    // Truncation.
    {
        std::ifstream in(path, std::ios::binary);
        std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
        std::ofstream out(dir / "short.bin", std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    }
    CHECK_THROWS_AS(nn::load_checkpoint(dir / "short.bin"), IoError);

    // Wrong magic.
    {
        std::ofstream out(dir / "magic.bin", std::ios::binary | std::ios::trunc);
        out << "NOTANET0junkjunkjunkjunk";
    }
    CHECK_THROWS_AS(nn::load_checkpoint(dir / "magic.bin"), IoError);
    CHECK_THROWS_AS(nn::load_checkpoint(dir / "absent.bin"), IoError);
}
