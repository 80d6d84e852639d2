#pragma once

/*
 * Maximum proportional exact lumpability over a feed-forward network.
 *
 * Two neurons v, t of hidden layer l are related when there are positive
 * weights rho(v), rho(t) such that, for every block S' of layer l-1,
 *
 *     rho(v) * b(v)                        = rho(t) * b(t)
 *     rho(v) * sum_{u in S'} W(u,v)/rho(u) = rho(t) * sum_{u in S'} W(u,t)/rho(u)
 *
 * The class sums are weighted by the previous layer's rho. This is what makes
 * the quotient (see quotient.hpp) preserve the input-output function at every
 * depth; when rho is constant on each previous block the weighting cancels and
 * the plain-sum condition is recovered. ClassSums::plain evaluates the
 * unweighted condition for diagnostics.
 *
 * Layers are processed in order 1 .. k-1, each against the already fixed
 * partition of the layer below. Input and output layers always keep the
 * identity partition.
 */

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lumpnn/error.hpp"
#include "lumpnn/nn.hpp"
#include "lumpnn/partition.hpp"
#include "lumpnn/proportional.hpp"

namespace lumpnn {

enum class ClassSums { rho_weighted, plain };

/// Per-layer partitions and scaling factors for layers 0..k.
struct Lumping {
    LumpMode mode = LumpMode::proportional;
    std::vector<Partition> partitions;
    std::vector<std::vector<double>> rho;

    std::size_t depth() const noexcept { return partitions.empty() ? 0 : partitions.size() - 1; }

    static Lumping identity(const Network& net, LumpMode mode = LumpMode::proportional) {
        Lumping L;
        L.mode = mode;
        for (std::size_t l = 0; l <= net.depth(); ++l) {
            L.partitions.push_back(Partition::identity(net.width(l)));
            L.rho.emplace_back(net.width(l), 1.0);
        }
        return L;
    }

    /// Neurons removed by quotienting with this lumping.
    std::size_t merged_neurons() const noexcept {
        std::size_t n = 0;
        for (const auto& p : partitions) n += p.size() - p.block_count();
        return n;
    }
};

/// Signature of every neuron of layer l: [b(v); class sums over prev's blocks].
inline std::vector<Signature> signatures(const Network& net, std::size_t l, const Partition& prev,
                                         std::span<const double> prev_rho,
                                         ClassSums sums = ClassSums::rho_weighted) {
    if (l < 1 || l > net.depth()) throw ShapeError("signatures: layer index out of range");
    const Layer& L = net.layer(l);
    if (prev.size() != L.in_width() || prev_rho.size() != L.in_width()) {
        throw ShapeError("signatures: previous-layer partition does not match layer " + std::to_string(l));
    }
    const std::size_t out = L.out_width();
    const std::size_t nb = prev.block_count();
    // acc[b * out + v]; rows of W are visited in ascending source order, so each
    // class sum accumulates its members in ascending order.
    std::vector<double> acc(nb * out, 0.0);
    for (std::size_t u = 0; u < L.in_width(); ++u) {
        double* dst = acc.data() + prev.block_of(u) * out;
        auto row = L.weights.row(u);
        if (sums == ClassSums::plain) {
            for (std::size_t v = 0; v < out; ++v) dst[v] += row[v];
        } else {
            const double r = prev_rho[u];
            for (std::size_t v = 0; v < out; ++v) dst[v] += row[v] / r;
        }
    }
    std::vector<Signature> sigs(out, Signature(1 + nb));
    for (std::size_t v = 0; v < out; ++v) {
        sigs[v][0] = L.bias[v];
        for (std::size_t b = 0; b < nb; ++b) sigs[v][1 + b] = acc[b * out + v];
    }
    return sigs;
}

struct LayerLumping {
    Partition partition;
    std::vector<double> rho;
};

inline LayerLumping partition_layer(const std::vector<Signature>& sigs, LumpMode mode,
                                    double tol = default_tolerance) {
    if (!(tol >= 0.0)) throw Error("tolerance must be >= 0");
    double scale = 0.0;
    for (const auto& s : sigs) scale = std::max(scale, max_abs(s));
    const double zero = zero_threshold(tol, scale);

    std::vector<std::size_t> members(sigs.size());
    for (std::size_t i = 0; i < members.size(); ++i) members[i] = i;
    ProportionalGroups g;
    g.rho.assign(sigs.size(), 1.0);
    group_proportional(sigs, members, mode, tol, zero, g);
    return {Partition::from_blocks(sigs.size(), std::move(g.groups)), std::move(g.rho)};
}

inline Lumping max_lumpability(const Network& net, LumpMode mode, double tol = default_tolerance) {
    require_valid(net);
    const std::size_t k = net.depth();
    Lumping L;
    L.mode = mode;
    L.partitions.push_back(Partition::identity(net.width(0)));
    L.rho.emplace_back(net.width(0), 1.0);
    for (std::size_t l = 1; l < k; ++l) {
        auto sigs = signatures(net, l, L.partitions.back(), L.rho.back());
        auto layer = partition_layer(sigs, mode, tol);
        L.partitions.push_back(std::move(layer.partition));
        L.rho.push_back(std::move(layer.rho));
    }
    L.partitions.push_back(Partition::identity(net.width(k)));
    L.rho.emplace_back(net.width(k), 1.0);
    return L;
}

struct LumpViolation {
    std::size_t layer;
    std::size_t block;
    std::size_t representative;
    std::size_t member;
    std::size_t component; // 0 = bias, 1 + j = class sum over previous block j
    double lhs;            // rho(rep) * sig(rep)[component]
    double rhs;            // rho(member) * sig(member)[component]
};

struct LumpCheck {
    std::vector<std::string> shape_errors;
    std::vector<LumpViolation> violations;

    bool ok() const noexcept { return shape_errors.empty() && violations.empty(); }
};

/// Checks the defining equations of one layer, given the layer below.
inline std::vector<LumpViolation> check_layer(const Network& net, std::size_t l, const Partition& prev,
                                              std::span<const double> prev_rho, const Partition& part,
                                              std::span<const double> rho, double tol,
                                              ClassSums sums = ClassSums::rho_weighted) {
    std::vector<LumpViolation> out;
    const auto sigs = signatures(net, l, prev, prev_rho, sums);
    for (std::size_t b = 0; b < part.block_count(); ++b) {
        const std::size_t rep = part.representative(b);
        for (std::size_t t : part.block(b)) {
            if (t == rep) continue;
            const auto& sv = sigs[rep];
            const auto& st = sigs[t];
            const double na = rho[rep] * max_abs(sv);
            const double nb = rho[t] * max_abs(st);
            const double bound = tol * (1.0 + std::max(na, nb));
            for (std::size_t c = 0; c < sv.size(); ++c) {
                const double lhs = rho[rep] * sv[c];
                const double rhs = rho[t] * st[c];
                if (!(std::abs(lhs - rhs) <= bound)) out.push_back({l, b, rep, t, c, lhs, rhs});
            }
        }
    }
    return out;
}

inline LumpCheck check_lumpability(const Network& net, const Lumping& lump, double tol = default_tolerance,
                                   ClassSums sums = ClassSums::rho_weighted) {
    LumpCheck res;
    const std::size_t k = net.depth();
    if (lump.partitions.size() != k + 1 || lump.rho.size() != k + 1) {
        res.shape_errors.push_back("lumping covers " + std::to_string(lump.partitions.size()) +
                                   " layers, network has " + std::to_string(k + 1));
        return res;
    }
    for (std::size_t l = 0; l <= k; ++l) {
        const std::string at = "layer " + std::to_string(l) + ": ";
        if (lump.partitions[l].size() != net.width(l)) res.shape_errors.push_back(at + "partition size mismatch");
        if (lump.rho[l].size() != net.width(l)) res.shape_errors.push_back(at + "rho size mismatch");
    }
    if (!res.shape_errors.empty()) return res;
    if (!lump.partitions[0].is_identity()) res.shape_errors.push_back("layer 0: partition must be the identity");
    if (!lump.partitions[k].is_identity()) {
        res.shape_errors.push_back("layer " + std::to_string(k) + ": partition must be the identity");
    }
    for (std::size_t l = 0; l <= k; ++l) {
        for (std::size_t i = 0; i < lump.rho[l].size(); ++i) {
            const double r = lump.rho[l][i];
            const bool fixed_one = l == 0 || l == k || lump.mode == LumpMode::exact;
            if (!(r > 0.0) || !std::isfinite(r) || (fixed_one && r != 1.0)) {
                res.shape_errors.push_back("layer " + std::to_string(l) + ": bad rho for neuron " + std::to_string(i));
            }
        }
    }
    if (!res.shape_errors.empty()) return res;
    for (std::size_t l = 1; l < k; ++l) {
        auto v = check_layer(net, l, lump.partitions[l - 1], lump.rho[l - 1], lump.partitions[l], lump.rho[l], tol,
                             sums);
        res.violations.insert(res.violations.end(), v.begin(), v.end());
    }
    return res;
}

} // namespace lumpnn
