#pragma once

#include <cstddef>
#include <vector>

#include "lumpnn/error.hpp"
#include "lumpnn/lump.hpp"
#include "lumpnn/nn.hpp"

namespace lumpnn {

namespace detail {

/// Quotient construction without validation; callers must have checked the
/// lumping.
inline Network build_quotient(const Network& net, const Lumping& lump) {
    Network out;
    out.layers.reserve(net.depth());
    for (std::size_t l = 1; l <= net.depth(); ++l) {
        const Layer& L = net.layer(l);
        const Partition& src = lump.partitions[l - 1];
        const Partition& dst = lump.partitions[l];
        const auto& src_rho = lump.rho[l - 1];
        Layer R;
        R.activation = L.activation;
        R.weights = Matrix(src.block_count(), dst.block_count());
        R.bias.resize(dst.block_count());
        for (std::size_t bj = 0; bj < dst.block_count(); ++bj) {
            const std::size_t v = dst.representative(bj);
            R.bias[bj] = L.bias[v];
            for (std::size_t bi = 0; bi < src.block_count(); ++bi) {
                const auto& members = src.block(bi);
                double sum = L.weights(members[0], v) / src_rho[members[0]];
                for (std::size_t m = 1; m < members.size(); ++m) sum += L.weights(members[m], v) / src_rho[members[m]];
                R.weights(bi, bj) = src_rho[src.representative(bi)] * sum;
            }
        }
        out.layers.push_back(std::move(R));
    }
    return out;
}

} // namespace detail

/// Builds the reduced network with one neuron per block. For source block [u]
/// and target block [v] (u, v their representatives):
///
///     W'([u],[v]) = rho(u) * sum_{w in [u]} W(w, v) / rho(w)
///     b'([v])     = b(v)
///
/// Blocks keep the order of the lumping's partitions (ascending smallest
/// member). The lumping is re-checked first and rejected if invalid.
inline Network reduce(const Network& net, const Lumping& lump, double tol = default_tolerance) {
    require_valid(net);
    const auto check = check_lumpability(net, lump, tol);
    if (!check.ok()) {
        if (!check.shape_errors.empty()) throw InvalidLumping("lumping rejected: " + check.shape_errors.front());
        const auto& v = check.violations.front();
        throw InvalidLumping("lumping rejected: layer " + std::to_string(v.layer) + " block " + std::to_string(v.block) +
                             " neurons " + std::to_string(v.representative) + "/" + std::to_string(v.member) +
                             " (" + std::to_string(check.violations.size()) + " violations)");
    }
    return detail::build_quotient(net, lump);
}

struct ReductionReport {
    std::vector<std::size_t> neurons_before; // layers 0..k
    std::vector<std::size_t> neurons_after;
    std::vector<std::size_t> merged_blocks; // blocks with more than one member, per layer
    std::size_t parameters_before = 0;
    std::size_t parameters_after = 0;
    double detection_seconds = 0.0;
    double construction_seconds = 0.0;

    std::size_t neurons_removed() const noexcept {
        std::size_t n = 0;
        for (std::size_t l = 0; l < neurons_before.size(); ++l) n += neurons_before[l] - neurons_after[l];
        return n;
    }
};

inline ReductionReport reduction_report(const Network& before, const Network& after, const Lumping& lump,
                                        double detection_seconds = 0.0, double construction_seconds = 0.0) {
    if (before.depth() != after.depth() || lump.depth() != before.depth()) {
        throw ShapeError("reduction_report: depth mismatch");
    }
    ReductionReport r;
    for (std::size_t l = 0; l <= before.depth(); ++l) {
        if (after.width(l) != lump.partitions[l].block_count()) {
            throw ShapeError("reduction_report: reduced width does not match lumping at layer " + std::to_string(l));
        }
        r.neurons_before.push_back(before.width(l));
        r.neurons_after.push_back(after.width(l));
        std::size_t merged = 0;
        for (const auto& b : lump.partitions[l].blocks()) merged += b.size() > 1 ? 1 : 0;
        r.merged_blocks.push_back(merged);
    }
    r.parameters_before = before.parameter_count();
    r.parameters_after = after.parameter_count();
    r.detection_seconds = detection_seconds;
    r.construction_seconds = construction_seconds;
    return r;
}

} // namespace lumpnn
