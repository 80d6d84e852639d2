#pragma once

/*
 * Feed-forward ReLU / LeakyReLU networks and their exact forward semantics.
 *
 * A network with k layers stores k weight matrices. Layer 0 (the input layer)
 * carries no parameters and exists only as a width. Layer l (1 <= l <= k)
 * maps a valuation of layer l-1 to a valuation of layer l:
 *
 *     v'_j = act( sum_i W(i, j) * v_i + b_j )
 *
 * The sum always runs over ascending source index so that results are
 * bitwise reproducible.
 */

#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lumpnn/error.hpp"

namespace lumpnn {

using Valuation = std::vector<double>;

enum class ActivationKind { relu, leaky_relu };

struct Activation {
    ActivationKind kind = ActivationKind::relu;
    double alpha = 0.0; // negative-branch slope, LeakyReLU only

    static Activation relu() { return {ActivationKind::relu, 0.0}; }
    static Activation leaky_relu(double alpha) { return {ActivationKind::leaky_relu, alpha}; }

    friend bool operator==(const Activation&, const Activation&) = default;
};

inline double apply_activation(const Activation& a, double x) noexcept {
    if (x >= 0.0) return x;
    return a.kind == ActivationKind::relu ? 0.0 : a.alpha * x;
}

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    std::span<const double> values() const noexcept { return data_; }
    std::span<double> values() noexcept { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// One weighted layer: weights(i, j) is the edge from source neuron i to
/// target neuron j.
struct Layer {
    Matrix weights;
    std::vector<double> bias;
    Activation activation;

    std::size_t in_width() const noexcept { return weights.rows(); }
    std::size_t out_width() const noexcept { return weights.cols(); }

    friend bool operator==(const Layer&, const Layer&) = default;
};

struct Network {
    std::vector<Layer> layers;

    /// Number of weighted layers (k).
    std::size_t depth() const noexcept { return layers.size(); }
    std::size_t input_width() const noexcept { return layers.empty() ? 0 : layers.front().in_width(); }
    std::size_t output_width() const noexcept { return layers.empty() ? 0 : layers.back().out_width(); }

    /// Width of layer l for l in [0, k].
    std::size_t width(std::size_t l) const {
        if (l == 0) return input_width();
        return layers.at(l - 1).out_width();
    }

    /// Layer l for l in [1, k].
    const Layer& layer(std::size_t l) const { return layers.at(l - 1); }
    Layer& layer(std::size_t l) { return layers.at(l - 1); }

    std::size_t parameter_count() const noexcept {
        std::size_t n = 0;
        for (const auto& L : layers) n += L.in_width() * L.out_width() + L.out_width();
        return n;
    }

    friend bool operator==(const Network&, const Network&) = default;
};

/// Affine part of layer l: sum_i W(i, j) v_i + b_j.
inline Valuation pre_activation(const Network& net, std::size_t l, std::span<const double> v) {
    if (l < 1 || l > net.depth()) {
        throw ShapeError("layer index " + std::to_string(l) + " outside [1, " + std::to_string(net.depth()) + "]");
    }
    const Layer& L = net.layer(l);
    if (v.size() != L.in_width()) {
        throw ShapeError("layer " + std::to_string(l) + " expects input width " + std::to_string(L.in_width()) +
                         ", got " + std::to_string(v.size()));
    }
    const std::size_t out = L.out_width();
    Valuation acc(out, 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double x = v[i];
        auto row = L.weights.row(i);
        for (std::size_t j = 0; j < out; ++j) acc[j] += row[j] * x;
    }
    for (std::size_t j = 0; j < out; ++j) acc[j] += L.bias[j];
    return acc;
}

inline Valuation forward_layer(const Network& net, std::size_t l, std::span<const double> v) {
    Valuation out = pre_activation(net, l, v);
    const Activation act = net.layer(l).activation;
    for (double& x : out) x = apply_activation(act, x);
    return out;
}

inline Valuation forward(const Network& net, std::span<const double> input) {
    if (net.depth() == 0) throw ShapeError("network has no layers");
    Valuation v(input.begin(), input.end());
    for (std::size_t l = 1; l <= net.depth(); ++l) v = forward_layer(net, l, v);
    return v;
}

/// Every intermediate valuation of a forward pass. values[l] is the valuation
/// of layer l (values[0] is the input); pre[l] is the affine part of layer l
/// before activation (pre[0] is empty).
struct Trace {
    std::vector<Valuation> values;
    std::vector<Valuation> pre;
};

inline Trace forward_trace(const Network& net, std::span<const double> input) {
    if (net.depth() == 0) throw ShapeError("network has no layers");
    Trace t;
    t.values.reserve(net.depth() + 1);
    t.pre.reserve(net.depth() + 1);
    t.values.emplace_back(input.begin(), input.end());
    t.pre.emplace_back();
    for (std::size_t l = 1; l <= net.depth(); ++l) {
        Valuation p = pre_activation(net, l, t.values.back());
        Valuation v = p;
        const Activation act = net.layer(l).activation;
        for (double& x : v) x = apply_activation(act, x);
        t.pre.push_back(std::move(p));
        t.values.push_back(std::move(v));
    }
    return t;
}

enum class ViolationKind { empty_network, shape, chain, non_finite, bad_alpha };

struct Violation {
    std::size_t layer; // 1-based; 0 for whole-network problems
    ViolationKind kind;
    std::string message;
};

/// Lists every broken well-formedness invariant. An empty result means the
/// network is usable by every other operation.
inline std::vector<Violation> validate(const Network& net) {
    std::vector<Violation> out;
    if (net.depth() == 0) {
        out.push_back({0, ViolationKind::empty_network, "network has no layers"});
        return out;
    }
    for (std::size_t l = 1; l <= net.depth(); ++l) {
        const Layer& L = net.layer(l);
        if (L.bias.size() != L.out_width()) {
            std::ostringstream os;
            os << "bias length " << L.bias.size() << " != out width " << L.out_width();
            out.push_back({l, ViolationKind::shape, os.str()});
        }
        if (l > 1 && net.layer(l - 1).out_width() != L.in_width()) {
            std::ostringstream os;
            os << "layer " << l - 1 << " has width " << net.layer(l - 1).out_width() << " but layer " << l
               << " expects " << L.in_width();
            out.push_back({l, ViolationKind::chain, os.str()});
        }
        if (L.in_width() == 0 || L.out_width() == 0) {
            out.push_back({l, ViolationKind::shape, "zero-width layer"});
        }
        for (std::size_t i = 0; i < L.in_width(); ++i) {
            for (std::size_t j = 0; j < L.out_width(); ++j) {
                if (!std::isfinite(L.weights(i, j))) {
                    std::ostringstream os;
                    os << "weight (" << i << ", " << j << ") is not finite";
                    out.push_back({l, ViolationKind::non_finite, os.str()});
                }
            }
        }
        for (std::size_t j = 0; j < L.bias.size(); ++j) {
            if (!std::isfinite(L.bias[j])) {
                out.push_back({l, ViolationKind::non_finite, "bias " + std::to_string(j) + " is not finite"});
            }
        }
        if (L.activation.kind == ActivationKind::leaky_relu &&
            !(L.activation.alpha > 0.0 && std::isfinite(L.activation.alpha))) {
            out.push_back({l, ViolationKind::bad_alpha, "leaky_relu alpha must be finite and > 0"});
        }
    }
    return out;
}

inline void require_valid(const Network& net) {
    auto v = validate(net);
    if (!v.empty()) throw ShapeError("invalid network: layer " + std::to_string(v.front().layer) + ": " + v.front().message);
}

} // namespace lumpnn
