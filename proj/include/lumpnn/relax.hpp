#pragma once

/*
 * Linear-combination relaxation of neuron merging.
 *
 * A hidden neuron t whose signature [b(t); W(., t)] equals a positive
 * combination sum_i c_i sig(v_i) of other neurons of the same layer has
 * pre-activation y_t = sum_i c_i y_i. Removing t and adding c_i W(t, z) to every
 * outgoing edge (v_i, z) is exact for ReLU / LeakyReLU exactly when all donor
 * pre-activations y_i share a sign; otherwise act(sum c_i y_i) differs from
 * sum c_i act(y_i). sign_condition_rate measures how often that holds.
 */

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lumpnn/error.hpp"
#include "lumpnn/lump.hpp"
#include "lumpnn/nn.hpp"
#include "lumpnn/random.hpp"

namespace lumpnn {

struct Donor {
    std::size_t neuron;
    double coefficient;

    friend bool operator==(const Donor&, const Donor&) = default;
};

struct Elimination {
    std::size_t layer;
    std::size_t eliminated;
    std::vector<Donor> donors;
    double residual = 0.0; // max-norm relative fit error
};

struct RelaxOptions {
    /// Subsets of one size are enumerated exhaustively (lexicographic,
    /// first fit wins) while their number stays within this budget; larger
    /// sizes fall back to greedy forward selection.
    std::size_t subset_budget = 100000;
};

struct PositiveFit {
    std::vector<Donor> donors;
    double residual;
};

namespace detail {

inline double binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0.0;
    double r = 1.0;
    for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    return r;
}

inline double relative_residual(const Eigen::VectorXd& target, const Eigen::MatrixXd& A, const Eigen::VectorXd& c) {
    const double scale = target.cwiseAbs().maxCoeff();
    const double r = (target - A * c).cwiseAbs().maxCoeff();
    return scale > 0.0 ? r / scale : r;
}

inline Eigen::MatrixXd columns(const std::vector<Signature>& sigs, std::span<const std::size_t> cols) {
    Eigen::MatrixXd A(static_cast<Eigen::Index>(sigs.front().size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j)
        for (std::size_t i = 0; i < sigs[cols[j]].size(); ++i) A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = sigs[cols[j]][i];
    return A;
}

inline Eigen::VectorXd as_vector(const Signature& s) {
    return Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
}

} // namespace detail

/// Least squares restricted to positive coefficients, active-set style: solve
/// unconstrained, drop coefficients <= tol, re-solve until none is dropped.
/// Returns a fit only if every kept coefficient is > tol and the relative
/// residual is <= tol.
inline std::optional<PositiveFit> fit_positive_combination(const std::vector<Signature>& sigs, std::size_t target,
                                                           std::vector<std::size_t> donors, double tol) {
    const Eigen::VectorXd t = detail::as_vector(sigs[target]);
    while (!donors.empty()) {
        const Eigen::MatrixXd A = detail::columns(sigs, donors);
        const Eigen::VectorXd c = A.colPivHouseholderQr().solve(t);
        std::vector<std::size_t> kept;
        for (std::size_t j = 0; j < donors.size(); ++j)
            if (c(static_cast<Eigen::Index>(j)) > tol) kept.push_back(donors[j]);
        if (kept.size() == donors.size()) {
            const double res = detail::relative_residual(t, A, c);
            if (!(res <= tol)) return std::nullopt;
            PositiveFit fit{{}, res};
            for (std::size_t j = 0; j < donors.size(); ++j) fit.donors.push_back({donors[j], c(static_cast<Eigen::Index>(j))});
            return fit;
        }
        donors = std::move(kept);
    }
    return std::nullopt;
}

namespace detail {

inline std::optional<PositiveFit> first_fit_of_size(const std::vector<Signature>& sigs, std::size_t target,
                                                    const std::vector<std::size_t>& pool, std::size_t size,
                                                    double tol) {
    std::vector<std::size_t> idx(size);
    for (std::size_t i = 0; i < size; ++i) idx[i] = i;
    std::vector<std::size_t> subset(size);
    while (true) {
        for (std::size_t i = 0; i < size; ++i) subset[i] = pool[idx[i]];
        if (auto fit = fit_positive_combination(sigs, target, subset, tol); fit && fit->donors.size() == size) return fit;
        std::size_t i = size;
        while (i > 0 && idx[i - 1] == pool.size() - size + (i - 1)) --i;
        if (i == 0) return std::nullopt;
        ++idx[i - 1];
        for (std::size_t j = i; j < size; ++j) idx[j] = idx[j - 1] + 1;
    }
}

/// Forward selection: each step adds the pool member that minimises the
/// unconstrained least-squares residual (ties to the lower index).
inline std::vector<std::vector<std::size_t>> greedy_path(const std::vector<Signature>& sigs, std::size_t target,
                                                         const std::vector<std::size_t>& pool, std::size_t k_max) {
    const Eigen::VectorXd t = as_vector(sigs[target]);
    std::vector<std::vector<std::size_t>> path;
    std::vector<std::size_t> chosen;
    std::set<std::size_t> used;
    for (std::size_t step = 0; step < k_max && step < pool.size(); ++step) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_v = pool.front();
        for (std::size_t v : pool) {
            if (used.count(v)) continue;
            auto trial = chosen;
            trial.push_back(v);
            const Eigen::MatrixXd A = columns(sigs, trial);
            const Eigen::VectorXd c = A.colPivHouseholderQr().solve(t);
            const double r = (t - A * c).norm();
            if (r < best) {
                best = r;
                best_v = v;
            }
        }
        chosen.push_back(best_v);
        used.insert(best_v);
        path.push_back(chosen);
    }
    return path;
}

} // namespace detail

/// Scans layer l in ascending neuron order and emits an Elimination for every
/// neuron whose raw signature is a positive combination of at most k_max
/// earlier neurons that have not been eliminated. Donors are frozen: a neuron
/// used as a donor is never eliminated afterwards (donors always precede the
/// eliminated neuron, and scanning only moves forward).
inline std::vector<Elimination> find_linear_dependencies(const Network& net, std::size_t l, std::size_t k_max,
                                                         double tol = default_tolerance, RelaxOptions opts = {}) {
    require_valid(net);
    if (l < 1 || l + 1 > net.depth()) throw Error("find_linear_dependencies: layer must be hidden (1 <= l <= k-1)");
    if (k_max < 2) throw Error("find_linear_dependencies: k_max must be >= 2");
    const std::size_t in = net.width(l - 1);
    const auto sigs = signatures(net, l, Partition::identity(in), std::vector<double>(in, 1.0));
    double scale = 0.0;
    for (const auto& s : sigs) scale = std::max(scale, max_abs(s));
    const double zero = zero_threshold(tol, scale);

    std::vector<bool> eliminated(sigs.size(), false);
    std::vector<Elimination> out;
    for (std::size_t t = 0; t < sigs.size(); ++t) {
        if (max_abs(sigs[t]) <= zero) continue;
        std::vector<std::size_t> pool;
        for (std::size_t v = 0; v < t; ++v)
            if (!eliminated[v] && max_abs(sigs[v]) > zero) pool.push_back(v);
        if (pool.empty()) continue;

        std::optional<PositiveFit> found;
        std::vector<std::vector<std::size_t>> greedy;
        for (std::size_t s = 1; s <= std::min(k_max, pool.size()) && !found; ++s) {
            if (detail::binomial(pool.size(), s) <= static_cast<double>(opts.subset_budget)) {
                found = detail::first_fit_of_size(sigs, t, pool, s, tol);
            } else {
                if (greedy.empty()) greedy = detail::greedy_path(sigs, t, pool, k_max);
                if (s <= greedy.size()) {
                    auto fit = fit_positive_combination(sigs, t, greedy[s - 1], tol);
                    if (fit && fit->donors.size() == s) found = fit;
                }
            }
        }
        if (found) {
            eliminated[t] = true;
            out.push_back({l, t, std::move(found->donors), found->residual});
        }
    }
    return out;
}

/// Removes every eliminated neuron of one hidden layer, folding its outgoing
/// weights into its donors: W(v_i, z) += c_i * W(t, z). Contributions are
/// added in list order, donors in their listed order.
inline Network eliminate(const Network& net, const std::vector<Elimination>& elims) {
    require_valid(net);
    if (elims.empty()) return net;
    const std::size_t l = elims.front().layer;
    if (l < 1 || l + 1 > net.depth()) throw InvalidLumping("eliminate: layer must be hidden");
    const std::size_t width = net.width(l);
    std::vector<bool> removed(width, false);
    for (const auto& e : elims) {
        if (e.layer != l) throw InvalidLumping("eliminate: all eliminations must target one layer");
        if (e.eliminated >= width) throw InvalidLumping("eliminate: neuron index out of range");
        if (removed[e.eliminated]) throw InvalidLumping("eliminate: neuron " + std::to_string(e.eliminated) + " eliminated twice");
        removed[e.eliminated] = true;
    }
    for (const auto& e : elims) {
        if (e.donors.empty()) throw InvalidLumping("eliminate: elimination without donors");
        for (const auto& d : e.donors) {
            if (d.neuron >= width) throw InvalidLumping("eliminate: donor index out of range");
            if (removed[d.neuron]) {
                throw InvalidLumping("eliminate: donor " + std::to_string(d.neuron) + " is itself eliminated");
            }
            if (!(d.coefficient > 0.0)) throw InvalidLumping("eliminate: donor coefficients must be positive");
        }
    }

    const Layer& A = net.layer(l);
    const Layer& B = net.layer(l + 1);
    Matrix next = B.weights;
    for (const auto& e : elims) {
        auto src = B.weights.row(e.eliminated);
        for (const auto& d : e.donors) {
            auto dst = next.row(d.neuron);
            for (std::size_t z = 0; z < dst.size(); ++z) dst[z] += d.coefficient * src[z];
        }
    }

    std::vector<std::size_t> keep;
    for (std::size_t v = 0; v < width; ++v)
        if (!removed[v]) keep.push_back(v);

    Network out = net;
    Layer& NA = out.layer(l);
    NA.weights = Matrix(A.in_width(), keep.size());
    NA.bias.resize(keep.size());
    for (std::size_t j = 0; j < keep.size(); ++j) {
        NA.bias[j] = A.bias[keep[j]];
        for (std::size_t i = 0; i < A.in_width(); ++i) NA.weights(i, j) = A.weights(i, keep[j]);
    }
    Layer& NB = out.layer(l + 1);
    NB.weights = Matrix(keep.size(), B.out_width());
    for (std::size_t j = 0; j < keep.size(); ++j) {
        auto src = next.row(keep[j]);
        std::copy(src.begin(), src.end(), NB.weights.row(j).begin());
    }
    return out;
}

struct SignReport {
    double fraction = 0.0;
    std::size_t same_sign = 0;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
};

/// True when every listed pre-activation is >= 0, or every one is <= 0.
inline bool donors_share_sign(const Valuation& pre, const std::vector<Donor>& donors) {
    bool all_nonneg = true, all_nonpos = true;
    for (const auto& d : donors) {
        all_nonneg = all_nonneg && pre[d.neuron] >= 0.0;
        all_nonpos = all_nonpos && pre[d.neuron] <= 0.0;
    }
    return all_nonneg || all_nonpos;
}

/// Fraction of seeded uniform [-1, 1] inputs on which the elimination's donors
/// have pre-activations of one sign.
inline SignReport sign_condition_rate(const Network& net, const Elimination& elim, std::size_t samples,
                                      std::uint64_t seed) {
    if (elim.layer < 1 || elim.layer > net.depth()) throw Error("sign_condition_rate: layer out of range");
    for (const auto& d : elim.donors)
        if (d.neuron >= net.width(elim.layer)) throw Error("sign_condition_rate: donor out of range");
    SignReport rep;
    rep.samples = samples;
    rep.seed = seed;
    Rng rng(seed);
    for (std::size_t s = 0; s < samples; ++s) {
        const auto x = rng.uniform_vector(net.input_width(), -1.0, 1.0);
        const auto trace = forward_trace(net, x);
        if (donors_share_sign(trace.pre[elim.layer], elim.donors)) ++rep.same_sign;
    }
    rep.fraction = samples ? static_cast<double>(rep.same_sign) / static_cast<double>(samples) : 0.0;
    return rep;
}

} // namespace lumpnn
