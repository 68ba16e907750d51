#include "mothscan/nn/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <type_traits>

#include "mothscan/errors.hpp"
#include "mothscan/nn/minibatch.hpp"

namespace mothscan::nn {

namespace {

constexpr std::array<char, 8> kMagic{'M', 'O', 'T', 'H', 'N', 'E', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::array<unsigned char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
        std::reverse(bytes.begin(), bytes.end());
    out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T take(std::istream& in, const std::filesystem::path& path) {
    std::array<unsigned char, sizeof(T)> bytes;
    if (!in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T)))
        throw IoError("truncated checkpoint: " + path.string());
    if constexpr (std::endian::native == std::endian::big)
        std::reverse(bytes.begin(), bytes.end());
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

void put_vector(std::ostream& out, const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) put<double>(out, v[i]);
}

Eigen::VectorXd take_vector(std::istream& in, Eigen::Index n, const std::filesystem::path& path) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = take<double>(in, path);
    return v;
}

}  // namespace

void save_checkpoint(const Network& net, const std::filesystem::path& path) {
    net.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path.string());

    out.write(kMagic.data(), kMagic.size());
    put<std::uint32_t>(out, kVersion);
    put<std::uint8_t>(out, net.standardize == StandardizeMode::PerPatch ? 1 : 0);
    put<std::int64_t>(out, net.input_side);
    put<std::int64_t>(out, net.channels);

    put<std::uint32_t>(out, static_cast<std::uint32_t>(net.conv_layers.size()));
    for (const ConvLayer& c : net.conv_layers) {
        put<std::int64_t>(out, c.in_maps);
        put<std::int64_t>(out, c.out_maps);
        put<std::int64_t>(out, c.kh);
        put<std::int64_t>(out, c.kw);
    }
    put<std::uint32_t>(out, static_cast<std::uint32_t>(net.fc_layers.size()));
    for (const FCLayer& f : net.fc_layers) {
        put<std::int64_t>(out, f.weight.rows());
        put<std::int64_t>(out, f.weight.cols());
        put<std::uint8_t>(out, f.activation == Activation::Softmax ? 1 : 0);
    }

    put_vector(out, flatten_parameters(net));

    const bool has_stats = net.input_mean.size() == net.input_dims();
    put<std::uint8_t>(out, has_stats ? 1 : 0);
    if (has_stats) {
        put_vector(out, net.input_mean);
        put_vector(out, net.input_std);
    }
    if (!out) throw IoError("failed writing checkpoint: " + path.string());
}

Network load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path.string());

    std::array<char, 8> magic;
    if (!in.read(magic.data(), magic.size()) || magic != kMagic)
        throw IoError("not a model checkpoint: " + path.string());
    if (take<std::uint32_t>(in, path) != kVersion)
        throw IoError("unsupported checkpoint version: " + path.string());

    Network net;
    net.standardize =
        take<std::uint8_t>(in, path) ? StandardizeMode::PerPatch : StandardizeMode::Dataset;
    net.input_side = take<std::int64_t>(in, path);
    net.channels = take<std::int64_t>(in, path);

    const std::uint32_t conv_count = take<std::uint32_t>(in, path);
    for (std::uint32_t i = 0; i < conv_count; ++i) {
        ConvLayer c;
        c.in_maps = take<std::int64_t>(in, path);
        c.out_maps = take<std::int64_t>(in, path);
        c.kh = take<std::int64_t>(in, path);
        c.kw = take<std::int64_t>(in, path);
        if (c.in_maps < 1 || c.out_maps < 1 || c.kh < 1 || c.kw < 1)
            throw IoError("corrupt conv descriptor: " + path.string());
        c.weight.setZero(c.out_maps, c.in_maps * c.kh * c.kw);
        c.bias.setZero(c.out_maps);
        net.conv_layers.push_back(std::move(c));
    }
    const std::uint32_t fc_count = take<std::uint32_t>(in, path);
    for (std::uint32_t i = 0; i < fc_count; ++i) {
        const std::int64_t rows = take<std::int64_t>(in, path);
        const std::int64_t cols = take<std::int64_t>(in, path);
        if (rows < 1 || cols < 1) throw IoError("corrupt layer descriptor: " + path.string());
        FCLayer f;
        f.weight.setZero(rows, cols);
        f.bias.setZero(rows);
        f.activation = take<std::uint8_t>(in, path) ? Activation::Softmax : Activation::Relu;
        net.fc_layers.push_back(std::move(f));
    }

    set_parameters(net, take_vector(in, parameter_count(net), path));

    if (take<std::uint8_t>(in, path)) {
        net.input_mean = take_vector(in, net.input_dims(), path);
        net.input_std = take_vector(in, net.input_dims(), path);
    }
    net.validate();
    return net;
}

}  // namespace mothscan::nn
