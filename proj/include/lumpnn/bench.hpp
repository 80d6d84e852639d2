#pragma once

/*
 * Synthetic networks with planted structure, output agreement metrics, and
 * the linear-combination pruning sweep.
 *
 * gen_planted draws every base parameter i.i.d. uniform in [-1, 1] (or from a
 * small integer grid) and then overwrites the incoming weights and bias of the
 * planted neurons of one hidden layer:
 *   proportional: column t := s * column(source), bias likewise, s > 0
 *   combo:        column t := sum_i c_i * column(v_i), c_i > 0
 * Base parameters come from their own stream, so two specs that differ only in
 * what is planted share the same base network.
 */

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lumpnn/error.hpp"
#include "lumpnn/nn.hpp"
#include "lumpnn/random.hpp"
#include "lumpnn/relax.hpp"

namespace lumpnn {

enum class PlantKind { proportional, combo };

struct PlantSpec {
    std::vector<std::size_t> widths; // layers 0..k
    std::size_t layer = 1;
    PlantKind kind = PlantKind::proportional;
    std::size_t count = 0;
    double scale_lo = 0.1; // proportional scales
    double scale_hi = 10.0;
    std::size_t donors = 2; // combo: donors per planted neuron
    double coef_lo = 0.1;
    double coef_hi = 1.0;
    bool integer_grid = false; // weights in {-3..3}, scales/coefficients in {1..3}
    Activation hidden = Activation::relu();
    Activation output = Activation::relu();
    std::uint64_t seed = 0;
};

struct PlantedDuplicate {
    std::size_t neuron;
    std::size_t source;
    double scale;
};

struct GroundTruth {
    std::size_t layer = 0;
    std::vector<PlantedDuplicate> duplicates;
    std::vector<Elimination> combos;

    /// Every planted neuron as an elimination (a duplicate is a one-donor
    /// combination with coefficient = its scale).
    std::vector<Elimination> eliminations() const {
        std::vector<Elimination> out = combos;
        for (const auto& d : duplicates) out.push_back({layer, d.neuron, {{d.source, d.scale}}, 0.0});
        std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.eliminated < b.eliminated; });
        return out;
    }
};

struct PlantedNetwork {
    Network net;
    GroundTruth truth;
};

inline void validate_plant_spec(const PlantSpec& s) {
    if (s.widths.size() < 2) throw Error("plant spec: need at least an input and an output width");
    for (auto w : s.widths)
        if (w == 0) throw Error("plant spec: widths must be positive");
    if (s.count == 0) return;
    const std::size_t k = s.widths.size() - 1;
    if (s.layer < 1 || s.layer >= k) throw Error("plant spec: planted layer must be hidden");
    const std::size_t width = s.widths[s.layer];
    if (s.count >= width) throw Error("plant spec: planted count must be below the layer width");
    if (s.kind == PlantKind::proportional) {
        if (!(s.scale_lo > 0.0) || !(s.scale_hi >= s.scale_lo)) throw Error("plant spec: scale range must lie in (0, inf)");
    } else {
        if (s.donors < 2) throw Error("plant spec: combos need at least two donors");
        if (width - s.count < s.donors) throw Error("plant spec: not enough fixed neurons for the donor count");
        if (!(s.coef_lo > 0.0) || !(s.coef_hi >= s.coef_lo)) {
            throw Error("plant spec: coefficient range must lie in (0, inf)");
        }
    }
}

inline PlantedNetwork gen_planted(const PlantSpec& spec) {
    validate_plant_spec(spec);
    const std::size_t k = spec.widths.size() - 1;
    Rng base(mix_seed(spec.seed, 0));
    auto draw = [&]() {
        return spec.integer_grid ? static_cast<double>(base.integer(-3, 3)) : base.uniform(-1.0, 1.0);
    };
    PlantedNetwork out;
    for (std::size_t l = 1; l <= k; ++l) {
        Layer L;
        L.weights = Matrix(spec.widths[l - 1], spec.widths[l]);
        for (double& w : L.weights.values()) w = draw();
        L.bias.resize(spec.widths[l]);
        for (double& b : L.bias) b = draw();
        L.activation = l == k ? spec.output : spec.hidden;
        out.net.layers.push_back(std::move(L));
    }
    out.truth.layer = spec.layer;
    if (spec.count == 0) return out;

    Rng plant(mix_seed(spec.seed, 1));
    Layer& L = out.net.layer(spec.layer);
    const std::size_t width = L.out_width();
    auto overwrite = [&](std::size_t t, const std::vector<Donor>& donors) {
        for (std::size_t i = 0; i < L.in_width(); ++i) {
            double acc = 0.0;
            for (const auto& d : donors) acc += d.coefficient * L.weights(i, d.neuron);
            L.weights(i, t) = acc;
        }
        double b = 0.0;
        for (const auto& d : donors) b += d.coefficient * L.bias[d.neuron];
        L.bias[t] = b;
    };
    auto grid_factor = [&](double lo, double hi) {
        const auto a = static_cast<std::int64_t>(std::max(1.0, std::ceil(lo)));
        const auto b = static_cast<std::int64_t>(std::max<double>(static_cast<double>(a), std::floor(std::min(hi, 3.0))));
        return static_cast<double>(plant.integer(a, b));
    };

    if (spec.kind == PlantKind::proportional) {
        std::vector<std::size_t> order(width);
        for (std::size_t i = 0; i < width; ++i) order[i] = i;
        plant.shuffle(order);
        std::vector<std::size_t> planted(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(spec.count));
        std::vector<std::size_t> sources(order.begin() + static_cast<std::ptrdiff_t>(spec.count), order.end());
        std::sort(planted.begin(), planted.end());
        std::sort(sources.begin(), sources.end());
        for (std::size_t t : planted) {
            const std::size_t s = sources[plant.index(sources.size())];
            const double scale =
                spec.integer_grid ? grid_factor(spec.scale_lo, spec.scale_hi) : plant.uniform(spec.scale_lo, spec.scale_hi);
            overwrite(t, {{s, scale}});
            out.truth.duplicates.push_back({t, s, scale});
        }
    } else {
        // Fixed neurons first, planted neurons after them, so every donor
        // precedes the neuron built from it.
        const std::size_t fixed = width - spec.count;
        std::vector<std::size_t> pool(fixed);
        for (std::size_t i = 0; i < fixed; ++i) pool[i] = i;
        for (std::size_t t = fixed; t < width; ++t) {
            plant.shuffle(pool);
            std::vector<std::size_t> chosen(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(spec.donors));
            std::sort(chosen.begin(), chosen.end());
            std::vector<Donor> donors;
            for (std::size_t v : chosen) {
                const double c =
                    spec.integer_grid ? grid_factor(spec.coef_lo, spec.coef_hi) : plant.uniform(spec.coef_lo, spec.coef_hi);
                donors.push_back({v, c});
            }
            overwrite(t, donors);
            out.truth.combos.push_back({spec.layer, t, std::move(donors), 0.0});
        }
    }
    return out;
}

struct AgreementMetrics {
    double max_deviation = 0.0;
    double agreement = 0.0;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
};

/// Index of the largest component; ties go to the smaller index.
inline std::size_t argmax(const Valuation& v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

inline AgreementMetrics agreement(const Network& a, const Network& b, std::size_t samples, std::uint64_t seed) {
    if (a.input_width() != b.input_width() || a.output_width() != b.output_width()) {
        throw ShapeError("agreement: networks differ in input or output width");
    }
    AgreementMetrics m;
    m.samples = samples;
    m.seed = seed;
    Rng rng(seed);
    std::size_t same = 0;
    for (std::size_t s = 0; s < samples; ++s) {
        const auto x = rng.uniform_vector(a.input_width(), -1.0, 1.0);
        const auto ya = forward(a, x);
        const auto yb = forward(b, x);
        for (std::size_t j = 0; j < ya.size(); ++j) m.max_deviation = std::max(m.max_deviation, std::abs(ya[j] - yb[j]));
        if (argmax(ya) == argmax(yb)) ++same;
    }
    m.agreement = samples ? static_cast<double>(same) / static_cast<double>(samples) : 1.0;
    return m;
}

struct Fig3Config {
    std::vector<std::size_t> widths{16, 128, 10};
    std::size_t layer = 1;
    std::vector<std::size_t> ks{2, 3, 4};
    std::vector<double> fractions{0.0, 0.1, 0.25, 0.5, 0.75};
    std::size_t seeds = 10;
    std::uint64_t base_seed = 0;
    std::size_t samples = 2000;
    double coef_lo = 0.1;
    double coef_hi = 1.0;
    Activation hidden = Activation::relu();
    // monotone output, so argmax follows the affine output as a softmax would
    Activation output = Activation::leaky_relu(0.01);
};

struct Fig3Row {
    std::size_t k;
    double fraction;
    std::uint64_t seed;
    double agreement;
    double max_deviation;
};

/// For each (k, fraction, seed): plant round(fraction * width) neurons, each a
/// positive combination of k fixed neurons (k = 1 plants scaled duplicates),
/// eliminate all of them, and compare against the original. Rows come out in
/// (k, fraction, seed) order. The base network and the evaluation inputs depend
/// only on the seed, so every k is measured on the same networks and inputs.
inline std::vector<Fig3Row> fig3_experiment(const Fig3Config& cfg) {
    if (cfg.widths.size() < 3) throw Error("fig3: need at least one hidden layer");
    if (cfg.layer < 1 || cfg.layer + 1 >= cfg.widths.size()) throw Error("fig3: planted layer must be hidden");
    std::vector<Fig3Row> rows;
    const std::size_t width = cfg.widths[cfg.layer];
    for (std::size_t k : cfg.ks) {
        if (k == 0) throw Error("fig3: k must be >= 1");
        for (double fraction : cfg.fractions) {
            if (!(fraction >= 0.0 && fraction < 1.0)) throw Error("fig3: fractions must lie in [0, 1)");
            const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(width)));
            for (std::size_t s = 0; s < cfg.seeds; ++s) {
                const std::uint64_t seed = cfg.base_seed + s;
                PlantSpec spec;
                spec.widths = cfg.widths;
                spec.layer = cfg.layer;
                spec.count = count;
                spec.kind = k == 1 ? PlantKind::proportional : PlantKind::combo;
                spec.donors = k;
                spec.scale_lo = cfg.coef_lo;
                spec.scale_hi = cfg.coef_hi;
                spec.coef_lo = cfg.coef_lo;
                spec.coef_hi = cfg.coef_hi;
                spec.hidden = cfg.hidden;
                spec.output = cfg.output;
                spec.seed = seed;
                const auto planted = gen_planted(spec);
                const Network pruned = eliminate(planted.net, planted.truth.eliminations());
                const auto m = agreement(planted.net, pruned, cfg.samples, mix_seed(seed, 2));
                rows.push_back({k, fraction, seed, m.agreement, m.max_deviation});
            }
        }
    }
    return rows;
}

/// Mean agreement per (k, fraction).
inline std::map<std::pair<std::size_t, double>, double> mean_agreement(const std::vector<Fig3Row>& rows) {
    std::map<std::pair<std::size_t, double>, std::pair<double, std::size_t>> acc;
    for (const auto& r : rows) {
        auto& [sum, n] = acc[{r.k, r.fraction}];
        sum += r.agreement;
        ++n;
    }
    std::map<std::pair<std::size_t, double>, double> out;
    for (const auto& [key, v] : acc) out[key] = v.first / static_cast<double>(v.second);
    return out;
}

/// Shortest fixed-notation decimal that reads back to the same double.
inline std::string plain_decimal(double x) {
    char buf[400];
    auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::fixed);
    return std::string(buf, res.ptr);
}

inline std::string fig3_csv(const std::vector<Fig3Row>& rows) {
    std::string out = "k,fraction,seed,agreement,max_deviation\n";
    for (const auto& r : rows) {
        out += std::to_string(r.k) + "," + plain_decimal(r.fraction) + "," + std::to_string(r.seed) + "," +
               plain_decimal(r.agreement) + "," + plain_decimal(r.max_deviation) + "\n";
    }
    return out;
}

} // namespace lumpnn
