#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lumpnn/ctmc.hpp"
#include "lumpnn/nn.hpp"
#include "lumpnn/random.hpp"

namespace lumpnn::fixtures {

inline Layer make_layer(std::size_t in, std::size_t out, std::vector<double> weights_row_major, std::vector<double> bias,
                        Activation act = Activation::relu()) {
    Layer L;
    L.weights = Matrix(in, out);
    for (std::size_t i = 0; i < in; ++i)
        for (std::size_t j = 0; j < out; ++j) L.weights(i, j) = weights_row_major[i * out + j];
    L.bias = std::move(bias);
    L.activation = act;
    return L;
}

inline Network random_network(Rng& rng, const std::vector<std::size_t>& widths, Activation act = Activation::relu()) {
    Network net;
    for (std::size_t l = 1; l < widths.size(); ++l) {
        Layer L;
        L.weights = Matrix(widths[l - 1], widths[l]);
        for (double& w : L.weights.values()) w = rng.uniform(-1.0, 1.0);
        L.bias = rng.uniform_vector(widths[l], -1.0, 1.0);
        L.activation = act;
        net.layers.push_back(std::move(L));
    }
    return net;
}

/// Overwrites column t of layer l (and its bias) with scale * column s.
inline void plant_scaled_copy(Network& net, std::size_t l, std::size_t t, std::size_t s, double scale) {
    Layer& L = net.layer(l);
    for (std::size_t i = 0; i < L.in_width(); ++i) L.weights(i, t) = scale * L.weights(i, s);
    L.bias[t] = scale * L.bias[s];
}

/// Least-norm input giving layer-1 neurons a and b the pre-activations s and -s.
inline Valuation opposing_sign_input(const Network& net, std::size_t a, std::size_t b, double s) {
    const Layer& L = net.layer(1);
    const auto n = static_cast<Eigen::Index>(L.in_width());
    Eigen::MatrixXd A(2, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        A(0, i) = L.weights(static_cast<std::size_t>(i), a);
        A(1, i) = L.weights(static_cast<std::size_t>(i), b);
    }
    Eigen::Vector2d rhs(s - L.bias[a], -s - L.bias[b]);
    Eigen::VectorXd x = A.transpose() * (A * A.transpose()).ldlt().solve(rhs);
    return Valuation(x.data(), x.data() + x.size());
}

/// The chain of the worked example, with its states renumbered 0..7.
inline Ctmc fig2_chain(ChainMode mode = ChainMode::ctmc) {
    // paper numbering s -> index s - 1
    return Ctmc::from_edges(8, mode,
                            {{0, 1, 2}, {1, 4, 3}, {4, 7, 1}, {0, 2, 1}, {2, 4, 3}, {0, 3, 2}, {3, 6, 2},
                             {6, 7, 1}, {7, 0, 4}, {3, 5, 1}, {5, 7, 5}, {2, 6, 4}, {1, 5, 1}});
}

/// Per-test scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("lumpnn_" + tag + "_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

} // namespace lumpnn::fixtures
