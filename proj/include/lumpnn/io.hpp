#pragma once

/*
 * JSON interchange documents.
 *
 *   network   {"layers": [{"weights": [[...], ...], "bias": [...],
 *                          "activation": {"kind": "relu" | "leaky_relu", "alpha": a}}]}
 *             weights are row-major, rows = source neurons, cols = target neurons
 *   chain     {"n": N, "mode": "ctmc" | "graph", "edges": [[source, target, rate], ...]}
 *   lumping   {"mode": ..., "layers": [{"blocks": [{"representative": r, "members": [...], "rho": [...]}]}]}
 *   partition {"blocks": [[...], ...], "rho": [...]}      (chain states)
 *
 * All indices are 0-based. Doubles are written as the shortest decimal that
 * round-trips, so save followed by load reproduces every value bitwise.
 */

#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "lumpnn/ctmc.hpp"
#include "lumpnn/error.hpp"
#include "lumpnn/lump.hpp"
#include "lumpnn/nn.hpp"
#include "lumpnn/quotient.hpp"
#include "lumpnn/relax.hpp"

namespace lumpnn {

using json = nlohmann::json;

enum class DocumentErrorCode { io, malformed, missing_field, invalid_value, non_finite, shape_chain };

inline const char* to_string(DocumentErrorCode c) {
    switch (c) {
    case DocumentErrorCode::io: return "io";
    case DocumentErrorCode::malformed: return "malformed";
    case DocumentErrorCode::missing_field: return "missing_field";
    case DocumentErrorCode::invalid_value: return "invalid_value";
    case DocumentErrorCode::non_finite: return "non_finite";
    case DocumentErrorCode::shape_chain: return "shape_chain";
    }
    return "unknown";
}

class DocumentError : public Error {
public:
    DocumentError(DocumentErrorCode code, std::string field, const std::string& what)
        : Error(std::string(to_string(code)) + " at " + field + ": " + what), code_(code), field_(std::move(field)) {}

    DocumentErrorCode code() const noexcept { return code_; }
    const std::string& field() const noexcept { return field_; }

private:
    DocumentErrorCode code_;
    std::string field_;
};

namespace io_detail {

inline const json& field(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object()) throw DocumentError(DocumentErrorCode::malformed, path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw DocumentError(DocumentErrorCode::missing_field, path + "." + key, "field is required");
    return *it;
}

inline double number(const json& j, const std::string& path) {
    if (j.is_null()) throw DocumentError(DocumentErrorCode::non_finite, path, "null is not a finite number");
    if (!j.is_number()) throw DocumentError(DocumentErrorCode::malformed, path, "expected a number");
    const double x = j.get<double>();
    if (!std::isfinite(x)) throw DocumentError(DocumentErrorCode::non_finite, path, "number is not finite");
    return x;
}

inline std::size_t index(const json& j, const std::string& path) {
    if (!j.is_number_integer() || j.get<long long>() < 0) {
        throw DocumentError(DocumentErrorCode::invalid_value, path, "expected a non-negative integer");
    }
    return j.get<std::size_t>();
}

inline std::vector<double> numbers(const json& j, const std::string& path) {
    if (!j.is_array()) throw DocumentError(DocumentErrorCode::malformed, path, "expected an array");
    std::vector<double> out;
    out.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

inline std::vector<std::size_t> indices(const json& j, const std::string& path) {
    if (!j.is_array()) throw DocumentError(DocumentErrorCode::malformed, path, "expected an array");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(index(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

inline const char* mode_name(LumpMode m) { return m == LumpMode::exact ? "exact" : "proportional"; }

inline LumpMode parse_mode(const json& j, const std::string& path) {
    if (j == "exact") return LumpMode::exact;
    if (j == "proportional") return LumpMode::proportional;
    throw DocumentError(DocumentErrorCode::invalid_value, path, "mode must be \"exact\" or \"proportional\"");
}

} // namespace io_detail

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DocumentError(DocumentErrorCode::io, path, "cannot open file");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw DocumentError(DocumentErrorCode::malformed, path, e.what());
    }
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DocumentError(DocumentErrorCode::io, path, "cannot open file for writing");
    out << text;
    if (!out) throw DocumentError(DocumentErrorCode::io, path, "write failed");
}

inline void write_json_file(const std::string& path, const json& doc) { write_text_file(path, doc.dump(2) + "\n"); }

// ---- network ---------------------------------------------------------------

inline json activation_to_json(const Activation& a) {
    if (a.kind == ActivationKind::relu) return {{"kind", "relu"}};
    return {{"kind", "leaky_relu"}, {"alpha", a.alpha}};
}

inline json network_to_json(const Network& net) {
    json layers = json::array();
    for (const auto& L : net.layers) {
        json w = json::array();
        for (std::size_t i = 0; i < L.in_width(); ++i) {
            auto row = L.weights.row(i);
            w.push_back(std::vector<double>(row.begin(), row.end()));
        }
        layers.push_back({{"weights", std::move(w)}, {"bias", L.bias}, {"activation", activation_to_json(L.activation)}});
    }
    return {{"layers", std::move(layers)}};
}

/// Parses and validates; every failure names the offending field.
inline Network network_from_json(const json& doc) {
    using namespace io_detail;
    const json& layers = field(doc, "layers", "$");
    if (!layers.is_array() || layers.empty()) {
        throw DocumentError(DocumentErrorCode::malformed, "$.layers", "expected a non-empty array");
    }
    Network net;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const std::string at = "layers[" + std::to_string(l) + "]";
        const json& jl = layers[l];
        const json& jw = field(jl, "weights", at);
        if (!jw.is_array() || jw.empty()) {
            throw DocumentError(DocumentErrorCode::malformed, at + ".weights", "expected a non-empty 2-D array");
        }
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < jw.size(); ++i) rows.push_back(numbers(jw[i], at + ".weights[" + std::to_string(i) + "]"));
        const std::size_t cols = rows.front().size();
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != cols) {
                throw DocumentError(DocumentErrorCode::shape_chain, at + ".weights[" + std::to_string(i) + "]",
                                    "ragged weight matrix");
            }
        }
        Layer L;
        L.weights = Matrix(rows.size(), cols);
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = 0; j < cols; ++j) L.weights(i, j) = rows[i][j];
        L.bias = numbers(field(jl, "bias", at), at + ".bias");
        if (L.bias.size() != cols) {
            throw DocumentError(DocumentErrorCode::shape_chain, at + ".bias",
                                "length " + std::to_string(L.bias.size()) + " != " + std::to_string(cols) + " columns");
        }
        const json& ja = field(jl, "activation", at);
        const json& kind = field(ja, "kind", at + ".activation");
        if (kind == "relu") {
            L.activation = Activation::relu();
        } else if (kind == "leaky_relu") {
            const double alpha = number(field(ja, "alpha", at + ".activation"), at + ".activation.alpha");
            if (!(alpha > 0.0)) throw DocumentError(DocumentErrorCode::invalid_value, at + ".activation.alpha", "must be > 0");
            L.activation = Activation::leaky_relu(alpha);
        } else {
            throw DocumentError(DocumentErrorCode::invalid_value, at + ".activation.kind",
                                "unsupported activation " + kind.dump() + " (relu and leaky_relu only)");
        }
        if (!net.layers.empty() && net.layers.back().out_width() != L.in_width()) {
            throw DocumentError(DocumentErrorCode::shape_chain, at + ".weights",
                                "has " + std::to_string(L.in_width()) + " rows but the previous layer has width " +
                                    std::to_string(net.layers.back().out_width()));
        }
        net.layers.push_back(std::move(L));
    }
    return net;
}

inline Network load_network(const std::string& path) { return network_from_json(read_json_file(path)); }

inline void save_network(const Network& net, const std::string& path) { write_json_file(path, network_to_json(net)); }

// ---- valuations ------------------------------------------------------------

/// A single 1-D array, or a 2-D array of several valuations.
inline std::vector<Valuation> valuations_from_json(const json& doc) {
    if (!doc.is_array()) throw DocumentError(DocumentErrorCode::malformed, "$", "expected an array");
    if (!doc.empty() && doc.front().is_array()) {
        std::vector<Valuation> out;
        for (std::size_t i = 0; i < doc.size(); ++i) out.push_back(io_detail::numbers(doc[i], "$[" + std::to_string(i) + "]"));
        return out;
    }
    return {io_detail::numbers(doc, "$")};
}

// ---- lumping ---------------------------------------------------------------

inline json lumping_to_json(const Lumping& lump) {
    json layers = json::array();
    for (std::size_t l = 0; l < lump.partitions.size(); ++l) {
        const auto& P = lump.partitions[l];
        json blocks = json::array();
        for (std::size_t b = 0; b < P.block_count(); ++b) {
            std::vector<double> rho;
            for (auto m : P.block(b)) rho.push_back(lump.rho[l][m]);
            blocks.push_back({{"representative", P.representative(b)}, {"members", P.block(b)}, {"rho", rho}});
        }
        layers.push_back({{"layer", l}, {"blocks", std::move(blocks)}});
    }
    return {{"mode", io_detail::mode_name(lump.mode)}, {"layers", std::move(layers)}};
}

/// Accepts a lumping document, or any document with a "lumping" member (such
/// as the report written by `reduce`).
inline Lumping lumping_from_json(const json& doc) {
    using namespace io_detail;
    if (doc.is_object() && doc.contains("lumping")) return lumping_from_json(doc.at("lumping"));
    Lumping L;
    L.mode = parse_mode(field(doc, "mode", "$"), "$.mode");
    const json& layers = field(doc, "layers", "$");
    if (!layers.is_array()) throw DocumentError(DocumentErrorCode::malformed, "$.layers", "expected an array");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const std::string at = "layers[" + std::to_string(l) + "]";
        const json& jb = field(layers[l], "blocks", at);
        if (!jb.is_array()) throw DocumentError(DocumentErrorCode::malformed, at + ".blocks", "expected an array");
        std::vector<std::vector<std::size_t>> blocks;
        std::vector<std::size_t> reps;
        std::vector<std::pair<std::size_t, double>> rho_entries;
        std::size_t n = 0;
        for (std::size_t b = 0; b < jb.size(); ++b) {
            const std::string bat = at + ".blocks[" + std::to_string(b) + "]";
            auto members = indices(field(jb[b], "members", bat), bat + ".members");
            auto rho = numbers(field(jb[b], "rho", bat), bat + ".rho");
            if (rho.size() != members.size()) {
                throw DocumentError(DocumentErrorCode::shape_chain, bat + ".rho", "one rho per member required");
            }
            for (std::size_t i = 0; i < members.size(); ++i) rho_entries.emplace_back(members[i], rho[i]);
            for (auto m : members) n = std::max(n, m + 1);
            reps.push_back(index(field(jb[b], "representative", bat), bat + ".representative"));
            blocks.push_back(std::move(members));
        }
        Partition P;
        try {
            P = Partition::from_blocks(n, blocks);
            for (std::size_t b = 0; b < reps.size(); ++b) P.set_representative(P.block_of(blocks[b].front()), reps[b]);
        } catch (const DocumentError&) {
            throw;
        } catch (const Error& e) {
            throw DocumentError(DocumentErrorCode::invalid_value, at + ".blocks", e.what());
        }
        std::vector<double> rho(n, 1.0);
        for (auto [m, r] : rho_entries) rho[m] = r;
        L.partitions.push_back(std::move(P));
        L.rho.push_back(std::move(rho));
    }
    return L;
}

inline json report_to_json(const ReductionReport& r, const Lumping& lump, double tol, bool with_timings) {
    json doc = {{"mode", io_detail::mode_name(lump.mode)},
                {"tol", tol},
                {"neurons_before", r.neurons_before},
                {"neurons_after", r.neurons_after},
                {"merged_blocks", r.merged_blocks},
                {"neurons_removed", r.neurons_removed()},
                {"parameters_before", r.parameters_before},
                {"parameters_after", r.parameters_after},
                {"lumping", lumping_to_json(lump)}};
    if (with_timings) {
        doc["detection_seconds"] = r.detection_seconds;
        doc["construction_seconds"] = r.construction_seconds;
    }
    return doc;
}

// ---- chains ----------------------------------------------------------------

inline json chain_to_json(const Ctmc& c) {
    json edges = json::array();
    for (const auto& e : c.edges()) edges.push_back(json::array({e.source, e.target, e.rate}));
    return {{"n", c.size()}, {"mode", c.mode() == ChainMode::ctmc ? "ctmc" : "graph"}, {"edges", std::move(edges)}};
}

inline Ctmc chain_from_json(const json& doc) {
    using namespace io_detail;
    const std::size_t n = index(field(doc, "n", "$"), "$.n");
    const json& jm = field(doc, "mode", "$");
    ChainMode mode;
    if (jm == "ctmc") {
        mode = ChainMode::ctmc;
    } else if (jm == "graph") {
        mode = ChainMode::graph;
    } else {
        throw DocumentError(DocumentErrorCode::invalid_value, "$.mode", "mode must be \"ctmc\" or \"graph\"");
    }
    const json& je = field(doc, "edges", "$");
    if (!je.is_array()) throw DocumentError(DocumentErrorCode::malformed, "$.edges", "expected an array");
    std::vector<Edge> edges;
    std::vector<bool> seen(n * n, false);
    for (std::size_t i = 0; i < je.size(); ++i) {
        const std::string at = "$.edges[" + std::to_string(i) + "]";
        if (!je[i].is_array() || je[i].size() != 3) {
            throw DocumentError(DocumentErrorCode::malformed, at, "expected [source, target, rate]");
        }
        Edge e{index(je[i][0], at + "[0]"), index(je[i][1], at + "[1]"), number(je[i][2], at + "[2]")};
        if (e.source >= n || e.target >= n) throw DocumentError(DocumentErrorCode::invalid_value, at, "state index >= n");
        if (e.source == e.target) throw DocumentError(DocumentErrorCode::invalid_value, at, "self-loops are not listed");
        if (seen[e.source * n + e.target]) throw DocumentError(DocumentErrorCode::invalid_value, at, "duplicate edge");
        seen[e.source * n + e.target] = true;
        if (mode == ChainMode::ctmc && e.rate < 0.0) {
            throw DocumentError(DocumentErrorCode::invalid_value, at + "[2]", "ctmc rates must be >= 0");
        }
        edges.push_back(e);
    }
    return Ctmc::from_edges(n, mode, edges);
}

inline json state_partition_to_json(const StatePartitionWithRho& p) {
    return {{"blocks", p.partition.blocks()}, {"rho", p.rho}};
}

/// When "rho" is absent every state gets rho = 1 (plain exact lumpability).
inline StatePartitionWithRho state_partition_from_json(const json& doc, std::size_t n) {
    using namespace io_detail;
    const json& jb = field(doc, "blocks", "$");
    if (!jb.is_array()) throw DocumentError(DocumentErrorCode::malformed, "$.blocks", "expected an array");
    std::vector<std::vector<std::size_t>> blocks;
    for (std::size_t b = 0; b < jb.size(); ++b) blocks.push_back(indices(jb[b], "$.blocks[" + std::to_string(b) + "]"));
    StatePartitionWithRho p;
    try {
        p.partition = Partition::from_blocks(n, std::move(blocks));
    } catch (const Error& e) {
        throw DocumentError(DocumentErrorCode::invalid_value, "$.blocks", e.what());
    }
    if (doc.contains("rho")) {
        p.rho = numbers(doc.at("rho"), "$.rho");
        if (p.rho.size() != n) throw DocumentError(DocumentErrorCode::shape_chain, "$.rho", "one rho per state required");
    } else {
        p.rho.assign(n, 1.0);
    }
    return p;
}

// ---- relaxation ------------------------------------------------------------

inline json elimination_to_json(const Elimination& e) {
    json donors = json::array();
    for (const auto& d : e.donors) donors.push_back({{"neuron", d.neuron}, {"coefficient", d.coefficient}});
    return {{"layer", e.layer}, {"eliminated", e.eliminated}, {"donors", std::move(donors)}, {"residual", e.residual}};
}

inline json sign_report_to_json(const SignReport& s) {
    return {{"fraction", s.fraction}, {"same_sign", s.same_sign}, {"samples", s.samples}, {"seed", s.seed}};
}

} // namespace lumpnn
