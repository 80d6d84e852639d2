#pragma once

/*
 * Exact and proportional exact lumpability on continuous-time Markov chains
 * and on unconstrained labelled graphs.
 *
 * A partition with weights rho > 0 is a proportional exact lumpability when,
 * for every pair of blocks S, S' and every v, t in S,
 *
 *     rho(v) * sum_{u in S', u != v} Q(u, v) = rho(t) * sum_{u in S', u != t} Q(u, t)
 *
 * rho == 1 gives exact lumpability. Class sums run over off-diagonal rates
 * only: in chain mode the diagonal is derived from the row sums and is never
 * stored.
 *
 * The maximum relation is found by backward signature refinement: start from
 * one block, split every block by proportionality of its members' class-sum
 * vectors, repeat until stable.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "lumpnn/error.hpp"
#include "lumpnn/nn.hpp"
#include "lumpnn/partition.hpp"
#include "lumpnn/proportional.hpp"

namespace lumpnn {

enum class ChainMode { ctmc, graph };

struct Edge {
    std::size_t source;
    std::size_t target;
    double rate;

    friend bool operator==(const Edge&, const Edge&) = default;
};

class Ctmc {
public:
    Ctmc() = default;
    Ctmc(std::size_t n, ChainMode mode) : mode_(mode), q_(n, n) {}

    /// Throws Error on out-of-range indices, self-loops or repeated pairs.
    static Ctmc from_edges(std::size_t n, ChainMode mode, const std::vector<Edge>& edges) {
        Ctmc c(n, mode);
        std::vector<bool> seen(n * n, false);
        for (const auto& e : edges) {
            if (e.source >= n || e.target >= n) throw Error("edge index out of range");
            if (e.source == e.target) throw Error("self-loop on state " + std::to_string(e.source));
            if (seen[e.source * n + e.target]) {
                throw Error("duplicate edge " + std::to_string(e.source) + " -> " + std::to_string(e.target));
            }
            seen[e.source * n + e.target] = true;
            c.q_(e.source, e.target) = e.rate;
        }
        return c;
    }

    std::size_t size() const noexcept { return q_.rows(); }
    ChainMode mode() const noexcept { return mode_; }

    /// Off-diagonal rate; on the diagonal, the derived -(row sum) in chain mode
    /// and 0 in graph mode.
    double rate(std::size_t u, std::size_t v) const {
        if (u != v) return q_(u, v);
        if (mode_ == ChainMode::graph) return 0.0;
        double s = 0.0;
        for (std::size_t w = 0; w < size(); ++w)
            if (w != u) s += q_(u, w);
        return -s;
    }

    void set_rate(std::size_t u, std::size_t v, double r) {
        if (u == v) throw Error("diagonal rates are derived, not set");
        q_(u, v) = r;
    }

    /// Non-zero off-diagonal entries in row-major order.
    std::vector<Edge> edges() const {
        std::vector<Edge> out;
        for (std::size_t u = 0; u < size(); ++u)
            for (std::size_t v = 0; v < size(); ++v)
                if (u != v && q_(u, v) != 0.0) out.push_back({u, v, q_(u, v)});
        return out;
    }

    friend bool operator==(const Ctmc&, const Ctmc&) = default;

private:
    ChainMode mode_ = ChainMode::ctmc;
    Matrix q_;
};

struct StatePartitionWithRho {
    Partition partition;
    std::vector<double> rho;
};

/// Every broken constraint; graph mode only requires finite rates.
inline std::vector<std::string> validate_ctmc(const Ctmc& c) {
    std::vector<std::string> out;
    for (std::size_t u = 0; u < c.size(); ++u) {
        for (std::size_t v = 0; v < c.size(); ++v) {
            if (u == v) continue;
            const double q = c.rate(u, v);
            const std::string at = "rate (" + std::to_string(u) + ", " + std::to_string(v) + ")";
            if (!std::isfinite(q)) {
                out.push_back(at + " is not finite");
            } else if (c.mode() == ChainMode::ctmc && q < 0.0) {
                out.push_back(at + " is negative");
            }
        }
    }
    return out;
}

/// sig(v)[b] = sum over u in block b, u != v, of Q(u, v).
inline std::vector<Signature> chain_signatures(const Ctmc& c, const Partition& p) {
    const std::size_t n = c.size();
    std::vector<Signature> sigs(n, Signature(p.block_count(), 0.0));
    for (std::size_t u = 0; u < n; ++u) {
        const std::size_t b = p.block_of(u);
        for (std::size_t v = 0; v < n; ++v)
            if (u != v) sigs[v][b] += c.rate(u, v);
    }
    return sigs;
}

struct ChainViolation {
    std::size_t block;
    std::size_t source_block;
    std::size_t representative;
    std::size_t state;
    double lhs; // rho(rep) * class sum into rep
    double rhs; // rho(state) * class sum into state
};

struct ChainCheck {
    std::vector<std::string> shape_errors;
    std::vector<ChainViolation> violations;

    bool ok() const noexcept { return shape_errors.empty() && violations.empty(); }
};

inline ChainCheck check_prop_exact(const Ctmc& c, const StatePartitionWithRho& p, double tol = default_tolerance) {
    ChainCheck res;
    if (p.partition.size() != c.size()) res.shape_errors.push_back("partition size does not match state count");
    if (p.rho.size() != c.size()) res.shape_errors.push_back("rho size does not match state count");
    if (!res.shape_errors.empty()) return res;
    for (std::size_t i = 0; i < p.rho.size(); ++i) {
        if (!(p.rho[i] > 0.0) || !std::isfinite(p.rho[i])) {
            res.shape_errors.push_back("rho of state " + std::to_string(i) + " must be positive");
        }
    }
    if (!res.shape_errors.empty()) return res;
    const auto sigs = chain_signatures(c, p.partition);
    for (std::size_t b = 0; b < p.partition.block_count(); ++b) {
        const std::size_t rep = p.partition.representative(b);
        for (std::size_t t : p.partition.block(b)) {
            if (t == rep) continue;
            const double na = p.rho[rep] * max_abs(sigs[rep]);
            const double nb = p.rho[t] * max_abs(sigs[t]);
            const double bound = tol * (1.0 + std::max(na, nb));
            for (std::size_t s = 0; s < p.partition.block_count(); ++s) {
                const double lhs = p.rho[rep] * sigs[rep][s];
                const double rhs = p.rho[t] * sigs[t][s];
                if (!(std::abs(lhs - rhs) <= bound)) res.violations.push_back({b, s, rep, t, lhs, rhs});
            }
        }
    }
    return res;
}

struct RefinementResult {
    StatePartitionWithRho lumping;
    std::vector<Partition> history; // partition after each round, starting with the single block
};

inline RefinementResult refine_prop_exact(const Ctmc& c, LumpMode mode, double tol = default_tolerance) {
    if (auto v = validate_ctmc(c); !v.empty()) throw Error("invalid chain: " + v.front());
    const std::size_t n = c.size();
    RefinementResult res;
    Partition current = Partition::single_block(n);
    res.history.push_back(current);
    while (true) {
        const auto sigs = chain_signatures(c, current);
        double scale = 0.0;
        for (const auto& s : sigs) scale = std::max(scale, max_abs(s));
        const double zero = zero_threshold(tol, scale);
        ProportionalGroups g;
        g.rho.assign(n, 1.0);
        for (const auto& block : current.blocks()) group_proportional(sigs, block, mode, tol, zero, g);
        Partition next = Partition::from_blocks(n, std::move(g.groups));
        if (next.block_count() == current.block_count()) {
            res.lumping = {std::move(next), std::move(g.rho)};
            break;
        }
        if (res.history.size() > n) throw InternalError("partition refinement did not converge");
        current = std::move(next);
        res.history.push_back(current);
    }
    const auto check = check_prop_exact(c, res.lumping, tol);
    if (!check.ok()) throw InternalError("maximum lumping failed re-verification");
    return res;
}

inline StatePartitionWithRho max_prop_exact(const Ctmc& c, LumpMode mode, double tol = default_tolerance) {
    return refine_prop_exact(c, mode, tol).lumping;
}

/// One state per block, emitted in graph mode. For source block [u] and target
/// block [v] (representatives u, v), the rate is
///     rho(u) * sum_{w in [u]} Q(w, v) / rho(w).
/// Flows inside a block would become self-loops and are dropped.
inline Ctmc quotient_ctmc(const Ctmc& c, const StatePartitionWithRho& p, double tol = default_tolerance) {
    const auto check = check_prop_exact(c, p, tol);
    if (!check.ok()) throw InvalidLumping("state partition is not a proportional exact lumpability");
    const auto& P = p.partition;
    Ctmc out(P.block_count(), ChainMode::graph);
    for (std::size_t bj = 0; bj < P.block_count(); ++bj) {
        const std::size_t v = P.representative(bj);
        for (std::size_t bi = 0; bi < P.block_count(); ++bi) {
            if (bi == bj) continue;
            double sum = 0.0;
            for (std::size_t w : P.block(bi)) sum += c.rate(w, v) / p.rho[w];
            const double r = p.rho[P.representative(bi)] * sum;
            if (r != 0.0) out.set_rate(bi, bj, r);
        }
    }
    return out;
}

/// Exhaustive oracle: tries every set partition of the states (n <= 10) and
/// returns the coarsest valid one. Throws Error if the valid partitions do not
/// all refine a single coarsest one.
inline StatePartitionWithRho brute_force_max(const Ctmc& c, LumpMode mode, double tol = default_tolerance) {
    const std::size_t n = c.size();
    if (n > 10) throw Error("brute_force_max: at most 10 states");

    struct Candidate {
        Partition partition;
        std::vector<double> rho;
    };
    std::vector<Candidate> valid;

    for_each_set_partition(n, [&](std::span<const std::size_t> labels) {
        const Partition P = Partition::from_labels(labels);
        const std::size_t nb = P.block_count();
        // class sums computed directly, independent of chain_signatures
        std::vector<std::vector<double>> sums(n, std::vector<double>(nb, 0.0));
        for (std::size_t v = 0; v < n; ++v)
            for (std::size_t u = 0; u < n; ++u)
                if (u != v) sums[v][labels[u]] += c.rate(u, v);

        std::vector<double> rho(n, 1.0);
        for (const auto& block : P.blocks()) {
            const auto nonzero = [&](std::size_t s) {
                return std::any_of(sums[s].begin(), sums[s].end(), [&](double x) { return std::abs(x) > tol; });
            };
            // anchor: first member with a non-zero class sum
            std::size_t anchor = n;
            for (std::size_t s : block)
                if (nonzero(s)) {
                    anchor = s;
                    break;
                }
            if (anchor == n) continue; // all zero: rho free, left at 1
            std::size_t j = 0;
            while (std::abs(sums[anchor][j]) <= tol) ++j;
            for (std::size_t t : block) {
                if (!nonzero(t) || std::abs(sums[t][j]) <= tol) return;
                const double r = sums[anchor][j] / sums[t][j];
                if (!(r > 0.0)) return;
                if (mode == LumpMode::exact && std::abs(r - 1.0) > tol) return;
                rho[t] = mode == LumpMode::exact ? 1.0 : r;
                for (std::size_t i = 0; i < nb; ++i) {
                    const double scale = 1.0 + std::max(std::abs(sums[anchor][i]), std::abs(rho[t] * sums[t][i]));
                    if (std::abs(rho[t] * sums[t][i] - sums[anchor][i]) > tol * scale) return;
                }
            }
            const double r0 = rho[block.front()];
            for (std::size_t t : block) rho[t] /= r0;
        }
        valid.push_back({P, std::move(rho)});
    });

    std::size_t best = 0;
    for (std::size_t i = 1; i < valid.size(); ++i)
        if (valid[i].partition.block_count() < valid[best].partition.block_count()) best = i;
    for (const auto& cand : valid) {
        if (!cand.partition.refines(valid[best].partition)) {
            throw Error("brute_force_max: incomparable maximal partitions found");
        }
    }
    return {valid[best].partition, valid[best].rho};
}

} // namespace lumpnn
