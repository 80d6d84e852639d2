#pragma once

/*
 * Floating-point positive proportionality between signature vectors, shared by
 * the network lumping and the Markov-chain lumping code.
 *
 * Comparison is pivot based. A candidate `sig` matches a block representative
 * `rep` when
 *   - both are null (max-norm at or below the zero threshold), or
 *   - c = sig[p] / rep[p] > 0, where p is rep's largest-magnitude component,
 *     every component where rep is zero is also zero in sig, and
 *     max_i |sig_i - c rep_i| <= tol * max(|sig|_inf, c |rep|_inf).
 * In exact mode c is fixed to 1.
 *
 * Tolerance-based equality is not transitive, so grouping scans candidates in
 * ascending order and compares each one with existing representatives only;
 * the first matching block wins.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace lumpnn {

enum class LumpMode { exact, proportional };

inline constexpr double default_tolerance = 1e-9;

using Signature = std::vector<double>;

struct SignatureStats {
    double norm = 0.0;     // max-norm
    std::size_t pivot = 0; // first index of largest magnitude
    bool null = true;
};

inline double max_abs(std::span<const double> v) noexcept {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

/// Components with magnitude at or below this value count as zero.
inline double zero_threshold(double tol, double scale) noexcept { return tol * (1.0 + scale); }

inline SignatureStats signature_stats(std::span<const double> sig, double zero) noexcept {
    SignatureStats s;
    for (std::size_t i = 0; i < sig.size(); ++i) {
        const double a = std::abs(sig[i]);
        if (a > s.norm) {
            s.norm = a;
            s.pivot = i;
        }
    }
    s.null = s.norm <= zero;
    return s;
}

/// Returns c with sig ~= c * rep, or nothing.
inline std::optional<double> proportional_ratio(std::span<const double> rep, const SignatureStats& rs,
                                                std::span<const double> sig, const SignatureStats& ss, LumpMode mode,
                                                double tol, double zero) noexcept {
    if (rep.size() != sig.size()) return std::nullopt;
    if (rs.null || ss.null) {
        if (rs.null && ss.null) return 1.0;
        return std::nullopt;
    }
    double c = 1.0;
    if (mode == LumpMode::proportional) {
        c = sig[rs.pivot] / rep[rs.pivot];
        if (!(c > 0.0) || !std::isfinite(c)) return std::nullopt;
    }
    const double bound = tol * std::max(ss.norm, c * rs.norm);
    for (std::size_t i = 0; i < rep.size(); ++i) {
        if (std::abs(rep[i]) <= zero) {
            if (std::abs(sig[i]) > zero) return std::nullopt;
            continue;
        }
        if (std::abs(sig[i] - c * rep[i]) > bound) return std::nullopt;
    }
    return c;
}

struct ProportionalGroups {
    std::vector<std::vector<std::size_t>> groups; // each ascending; first member is the representative
    std::vector<double> rho;                      // indexed like the input signatures; 1 for representatives
};

/// Groups `members` (ascending indices into `sigs`) by positive proportionality.
/// rho[t] is set so that rho[t] * sig[t] = sig[rep] (i.e. rho = 1 / c). Entries of
/// rho outside `members` are left untouched.
inline void group_proportional(const std::vector<Signature>& sigs, std::span<const std::size_t> members, LumpMode mode,
                               double tol, double zero, ProportionalGroups& out) {
    struct Rep {
        std::size_t neuron;
        SignatureStats stats;
        std::size_t group;
    };
    std::vector<Rep> reps;
    for (std::size_t t : members) {
        const auto st = signature_stats(sigs[t], zero);
        bool placed = false;
        for (const auto& r : reps) {
            if (auto c = proportional_ratio(sigs[r.neuron], r.stats, sigs[t], st, mode, tol, zero)) {
                out.groups[r.group].push_back(t);
                out.rho[t] = 1.0 / *c;
                placed = true;
                break;
            }
        }
        if (!placed) {
            reps.push_back({t, st, out.groups.size()});
            out.groups.push_back({t});
            out.rho[t] = 1.0;
        }
    }
}

} // namespace lumpnn
