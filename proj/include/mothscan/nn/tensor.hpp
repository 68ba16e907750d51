#pragma once

#include <Eigen/Dense>
#include <numeric>
#include <vector>

namespace mothscan::nn {

/// Dense value container: a shape plus row-major flat data. Feature maps use
/// shape (maps, height, width).
struct Tensor {
    std::vector<Eigen::Index> shape;
    Eigen::VectorXd data;

    Tensor() = default;
    Tensor(std::vector<Eigen::Index> s, Eigen::VectorXd d) : shape(std::move(s)), data(std::move(d)) {}

    static Tensor zeros(std::vector<Eigen::Index> s) {
        const Eigen::Index n = element_count(s);
        return Tensor(std::move(s), Eigen::VectorXd::Zero(n));
    }

    static Eigen::Index element_count(const std::vector<Eigen::Index>& s) {
        Eigen::Index n = 1;
        for (auto e : s) n *= e;
        return n;
    }

    Eigen::Index size() const { return data.size(); }
    Eigen::Index extent(std::size_t i) const { return shape[i]; }
    bool shape_matches_data() const { return element_count(shape) == data.size(); }

    // (maps, h, w) accessors.
    double at(Eigen::Index m, Eigen::Index y, Eigen::Index x) const {
        return data[(m * shape[1] + y) * shape[2] + x];
    }
    double& at(Eigen::Index m, Eigen::Index y, Eigen::Index x) {
        return data[(m * shape[1] + y) * shape[2] + x];
    }
};

}  // namespace mothscan::nn
