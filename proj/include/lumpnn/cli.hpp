#pragma once

// Command-line front end. Exit codes: 0 success, 1 verification failed,
// 2 input error, 3 internal invariant failure.

#include <chrono>
#include <cstdint>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "lumpnn/bench.hpp"
#include "lumpnn/ctmc.hpp"
#include "lumpnn/io.hpp"
#include "lumpnn/lump.hpp"
#include "lumpnn/nn.hpp"
#include "lumpnn/quotient.hpp"
#include "lumpnn/relax.hpp"

namespace lumpnn::cli {

enum ExitCode : int { ok = 0, verification_failed = 1, input_error = 2, internal_error = 3 };

namespace detail {

inline LumpMode parse_lump_mode(const std::string& s) {
    if (s == "exact") return LumpMode::exact;
    if (s == "proportional") return LumpMode::proportional;
    throw Error("--mode must be exact or proportional");
}

/// "relu" or "leaky_relu:ALPHA".
inline Activation parse_activation(const std::string& s) {
    if (s == "relu") return Activation::relu();
    const std::string prefix = "leaky_relu:";
    if (s.rfind(prefix, 0) == 0) {
        const double a = std::stod(s.substr(prefix.size()));
        if (!(a > 0.0)) throw Error("leaky_relu alpha must be > 0");
        return Activation::leaky_relu(a);
    }
    throw Error("activation must be relu or leaky_relu:ALPHA");
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace detail

struct ReduceArgs {
    std::string input, output, report, mode = "proportional";
    double tol = default_tolerance;
    bool timings = false;
};

inline int cmd_reduce(const ReduceArgs& a, std::ostream& out) {
    const Network net = load_network(a.input);
    const LumpMode mode = detail::parse_lump_mode(a.mode);
    auto t0 = std::chrono::steady_clock::now();
    const Lumping lump = max_lumpability(net, mode, a.tol);
    const double detect = detail::seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    const Network reduced = reduce(net, lump, a.tol);
    const double build = detail::seconds_since(t0);
    const auto report = reduction_report(net, reduced, lump, detect, build);
    save_network(reduced, a.output);
    if (!a.report.empty()) write_json_file(a.report, report_to_json(report, lump, a.tol, a.timings));
    out << "merged " << report.neurons_removed() << " neurons; parameters " << report.parameters_before << " -> "
        << report.parameters_after << "; detection " << detect << " s, construction " << build << " s\n";
    return ok;
}

struct CheckArgs {
    std::string input, lumping;
    double tol = default_tolerance;
    bool plain = false;
};

inline int cmd_check(const CheckArgs& a, std::ostream& out) {
    const Network net = load_network(a.input);
    const Lumping lump = lumping_from_json(read_json_file(a.lumping));
    const auto res = check_lumpability(net, lump, a.tol, a.plain ? ClassSums::plain : ClassSums::rho_weighted);
    for (const auto& s : res.shape_errors) out << "shape error: " << s << "\n";
    if (!res.shape_errors.empty()) return input_error;
    for (const auto& v : res.violations) {
        out << "violation: layer " << v.layer << " block " << v.block << " neurons " << v.representative << "/"
            << v.member << " component " << v.component << ": " << v.lhs << " != " << v.rhs << "\n";
    }
    out << (res.ok() ? "ok" : "invalid") << " (" << res.violations.size() << " violations)\n";
    return res.ok() ? ok : verification_failed;
}

struct EvalArgs {
    std::string input, x, output;
    bool trace = false;
};

inline int cmd_eval(const EvalArgs& a, std::ostream& out) {
    const Network net = load_network(a.input);
    const json xdoc = read_json_file(a.x);
    const bool batch = xdoc.is_array() && !xdoc.empty() && xdoc.front().is_array();
    const auto xs = valuations_from_json(xdoc);
    json result = json::array();
    for (const auto& x : xs) {
        if (a.trace) {
            const auto t = forward_trace(net, x);
            result.push_back({{"values", t.values}, {"pre", t.pre}});
        } else {
            result.push_back(forward(net, x));
        }
    }
    const json doc = batch ? result : result.front();
    if (a.output.empty()) {
        out << doc.dump() << "\n";
    } else {
        write_json_file(a.output, doc);
    }
    return ok;
}

struct VerifyArgs {
    std::string a, b;
    std::size_t samples = 1000;
    std::uint64_t seed = 0;
    double tol = 1e-6;
};

inline int cmd_verify(const VerifyArgs& a, std::ostream& out) {
    const Network na = load_network(a.a);
    const Network nb = load_network(a.b);
    const auto m = agreement(na, nb, a.samples, a.seed);
    out << "max_deviation " << m.max_deviation << "\nagreement " << m.agreement << "\nsamples " << m.samples << "\n";
    return m.max_deviation <= a.tol ? ok : verification_failed;
}

struct RelaxArgs {
    std::string input, output, report;
    std::size_t layer = 1, k = 2, sign_samples = 1000;
    std::uint64_t seed = 0;
    double tol = default_tolerance;
};

inline int cmd_relax(const RelaxArgs& a, std::ostream& out) {
    const Network net = load_network(a.input);
    const auto elims = find_linear_dependencies(net, a.layer, a.k, a.tol);
    const Network pruned = eliminate(net, elims);
    save_network(pruned, a.output);
    json list = json::array();
    for (std::size_t i = 0; i < elims.size(); ++i) {
        json e = elimination_to_json(elims[i]);
        e["sign"] = sign_report_to_json(sign_condition_rate(net, elims[i], a.sign_samples, mix_seed(a.seed, i)));
        list.push_back(std::move(e));
    }
    if (!a.report.empty()) {
        write_json_file(a.report, {{"layer", a.layer}, {"k", a.k}, {"tol", a.tol}, {"seed", a.seed}, {"eliminations", list}});
    }
    out << "eliminated " << elims.size() << " neurons from layer " << a.layer << "\n";
    return ok;
}

struct CtmcArgs {
    std::string input, output, partition, mode = "proportional";
    double tol = default_tolerance;
};

inline int cmd_ctmc_reduce(const CtmcArgs& a, std::ostream& out) {
    const Ctmc c = chain_from_json(read_json_file(a.input));
    if (auto v = validate_ctmc(c); !v.empty()) throw DocumentError(DocumentErrorCode::invalid_value, a.input, v.front());
    const auto p = max_prop_exact(c, detail::parse_lump_mode(a.mode), a.tol);
    if (!a.partition.empty()) write_json_file(a.partition, state_partition_to_json(p));
    if (!a.output.empty()) write_json_file(a.output, chain_to_json(quotient_ctmc(c, p, a.tol)));
    out << c.size() << " states -> " << p.partition.block_count() << " blocks\n";
    return ok;
}

inline int cmd_ctmc_check(const CtmcArgs& a, std::ostream& out) {
    const Ctmc c = chain_from_json(read_json_file(a.input));
    if (auto v = validate_ctmc(c); !v.empty()) {
        for (const auto& s : v) out << "chain error: " << s << "\n";
        return input_error;
    }
    auto p = state_partition_from_json(read_json_file(a.partition), c.size());
    if (detail::parse_lump_mode(a.mode) == LumpMode::exact) p.rho.assign(c.size(), 1.0);
    const auto res = check_prop_exact(c, p, a.tol);
    for (const auto& s : res.shape_errors) out << "shape error: " << s << "\n";
    if (!res.shape_errors.empty()) return input_error;
    for (const auto& v : res.violations) {
        out << "violation: block " << v.block << " from block " << v.source_block << " states " << v.representative
            << "/" << v.state << ": " << v.lhs << " != " << v.rhs << "\n";
    }
    out << (res.ok() ? "ok" : "invalid") << " (" << res.violations.size() << " violations)\n";
    return res.ok() ? ok : verification_failed;
}

struct GenArgs {
    std::vector<std::size_t> widths;
    std::size_t layer = 1, count = 0, k = 2;
    std::string kind = "proportional", output, truth, hidden = "relu", output_activation = "relu";
    double scale_lo = 0.1, scale_hi = 10.0, coef_lo = 0.1, coef_hi = 1.0;
    bool integer_grid = false;
    std::uint64_t seed = 0;
};

inline int cmd_gen(const GenArgs& a, std::ostream& out) {
    PlantSpec s;
    s.widths = a.widths;
    s.layer = a.layer;
    s.count = a.count;
    if (a.kind == "proportional") {
        s.kind = PlantKind::proportional;
    } else if (a.kind == "combo") {
        s.kind = PlantKind::combo;
    } else {
        throw Error("--kind must be proportional or combo");
    }
    s.donors = a.k;
    s.scale_lo = a.scale_lo;
    s.scale_hi = a.scale_hi;
    s.coef_lo = a.coef_lo;
    s.coef_hi = a.coef_hi;
    s.integer_grid = a.integer_grid;
    s.hidden = detail::parse_activation(a.hidden);
    s.output = detail::parse_activation(a.output_activation);
    s.seed = a.seed;
    const auto planted = gen_planted(s);
    save_network(planted.net, a.output);
    if (!a.truth.empty()) {
        json dups = json::array();
        for (const auto& d : planted.truth.duplicates) {
            dups.push_back({{"neuron", d.neuron}, {"source", d.source}, {"scale", d.scale}});
        }
        json combos = json::array();
        for (const auto& e : planted.truth.combos) combos.push_back(elimination_to_json(e));
        write_json_file(a.truth, {{"layer", planted.truth.layer}, {"duplicates", dups}, {"combos", combos}});
    }
    out << "generated network with " << planted.net.parameter_count() << " parameters\n";
    return ok;
}

struct Fig3Args {
    Fig3Config cfg;
    std::string output, output_activation = "leaky_relu:0.01";
};

inline int cmd_fig3(Fig3Args a, std::ostream& out) {
    a.cfg.output = detail::parse_activation(a.output_activation);
    const auto rows = fig3_experiment(a.cfg);
    const std::string csv = fig3_csv(rows);
    if (a.output.empty()) {
        out << csv;
    } else {
        write_text_file(a.output, csv);
        for (const auto& [key, mean] : mean_agreement(rows)) {
            out << "k=" << key.first << " fraction=" << key.second << " mean_agreement=" << mean << "\n";
        }
    }
    return ok;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Exact neuron lumping for ReLU / LeakyReLU networks"};
    app.require_subcommand(1);

    ReduceArgs reduce_args;
    auto* reduce_cmd = app.add_subcommand("reduce", "compute the maximum lumping and write the reduced network");
    reduce_cmd->add_option("--input", reduce_args.input, "network document")->required();
    reduce_cmd->add_option("--output", reduce_args.output, "reduced network document")->required();
    reduce_cmd->add_option("--mode", reduce_args.mode, "exact | proportional")->check(CLI::IsMember({"exact", "proportional"}));
    reduce_cmd->add_option("--tol", reduce_args.tol, "relative tolerance");
    reduce_cmd->add_option("--report", reduce_args.report, "reduction report document");
    reduce_cmd->add_flag("--timings", reduce_args.timings, "include wall times in the report");

    CheckArgs check_args;
    auto* check_cmd = app.add_subcommand("check", "check a lumping against a network");
    check_cmd->add_option("--input", check_args.input)->required();
    check_cmd->add_option("--lumping", check_args.lumping, "lumping or reduce-report document")->required();
    check_cmd->add_option("--tol", check_args.tol);
    check_cmd->add_flag("--plain-sums", check_args.plain, "evaluate the unweighted class-sum condition instead");

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "forward pass on a valuation document");
    eval_cmd->add_option("--input", eval_args.input)->required();
    eval_cmd->add_option("--x", eval_args.x, "1-D array, or 2-D array of inputs")->required();
    eval_cmd->add_option("--output", eval_args.output);
    eval_cmd->add_flag("--trace", eval_args.trace, "emit every layer's values and pre-activations");

    VerifyArgs verify_args;
    auto* verify_cmd = app.add_subcommand("verify", "compare two networks on random inputs");
    verify_cmd->add_option("--a", verify_args.a)->required();
    verify_cmd->add_option("--b", verify_args.b)->required();
    verify_cmd->add_option("--samples", verify_args.samples);
    verify_cmd->add_option("--seed", verify_args.seed)->required();
    verify_cmd->add_option("--tol", verify_args.tol, "maximum allowed absolute output deviation");

    RelaxArgs relax_args;
    auto* relax_cmd = app.add_subcommand("relax", "eliminate neurons that are positive combinations of others");
    relax_cmd->add_option("--input", relax_args.input)->required();
    relax_cmd->add_option("--layer", relax_args.layer)->required();
    relax_cmd->add_option("--k", relax_args.k, "maximum donors per elimination");
    relax_cmd->add_option("--tol", relax_args.tol);
    relax_cmd->add_option("--output", relax_args.output)->required();
    relax_cmd->add_option("--sign-samples", relax_args.sign_samples);
    relax_cmd->add_option("--seed", relax_args.seed)->required();
    relax_cmd->add_option("--report", relax_args.report);

    CtmcArgs ctmc_args;
    auto* ctmc_cmd = app.add_subcommand("ctmc", "Markov chain / labelled graph lumping");
    ctmc_cmd->require_subcommand(1);
    auto* ctmc_reduce = ctmc_cmd->add_subcommand("reduce", "maximum lumping and quotient");
    ctmc_reduce->add_option("--input", ctmc_args.input)->required();
    ctmc_reduce->add_option("--mode", ctmc_args.mode)->check(CLI::IsMember({"exact", "proportional"}));
    ctmc_reduce->add_option("--tol", ctmc_args.tol);
    ctmc_reduce->add_option("--output", ctmc_args.output, "quotient graph document");
    ctmc_reduce->add_option("--partition", ctmc_args.partition, "partition document to write");
    auto* ctmc_check = ctmc_cmd->add_subcommand("check", "check a partition with rho");
    ctmc_check->add_option("--input", ctmc_args.input)->required();
    ctmc_check->add_option("--partition", ctmc_args.partition)->required();
    ctmc_check->add_option("--mode", ctmc_args.mode)->check(CLI::IsMember({"exact", "proportional"}));
    ctmc_check->add_option("--tol", ctmc_args.tol);

    GenArgs gen_args;
    auto* gen_cmd = app.add_subcommand("gen", "generate a random network with planted structure");
    gen_cmd->add_option("--widths", gen_args.widths, "layer widths, input first")->delimiter(',')->required();
    gen_cmd->add_option("--layer", gen_args.layer);
    gen_cmd->add_option("--kind", gen_args.kind)->check(CLI::IsMember({"proportional", "combo"}));
    gen_cmd->add_option("--count", gen_args.count);
    gen_cmd->add_option("--k", gen_args.k, "donors per combo");
    gen_cmd->add_option("--scale-lo", gen_args.scale_lo);
    gen_cmd->add_option("--scale-hi", gen_args.scale_hi);
    gen_cmd->add_option("--coef-lo", gen_args.coef_lo);
    gen_cmd->add_option("--coef-hi", gen_args.coef_hi);
    gen_cmd->add_flag("--integer-grid", gen_args.integer_grid);
    gen_cmd->add_option("--hidden-activation", gen_args.hidden);
    gen_cmd->add_option("--output-activation", gen_args.output_activation);
    gen_cmd->add_option("--seed", gen_args.seed)->required();
    gen_cmd->add_option("--output", gen_args.output)->required();
    gen_cmd->add_option("--truth", gen_args.truth, "ground-truth document");

    Fig3Args fig3_args;
    auto* bench_cmd = app.add_subcommand("bench", "experiments");
    bench_cmd->require_subcommand(1);
    auto* fig3_cmd = bench_cmd->add_subcommand("fig3", "pruning linear combinations of k neurons");
    fig3_cmd->add_option("--widths", fig3_args.cfg.widths)->delimiter(',');
    fig3_cmd->add_option("--layer", fig3_args.cfg.layer);
    fig3_cmd->add_option("--ks", fig3_args.cfg.ks)->delimiter(',');
    fig3_cmd->add_option("--fractions", fig3_args.cfg.fractions)->delimiter(',');
    fig3_cmd->add_option("--seeds", fig3_args.cfg.seeds, "number of seeds per cell");
    fig3_cmd->add_option("--samples", fig3_args.cfg.samples);
    fig3_cmd->add_option("--coef-lo", fig3_args.cfg.coef_lo);
    fig3_cmd->add_option("--coef-hi", fig3_args.cfg.coef_hi);
    fig3_cmd->add_option("--output-activation", fig3_args.output_activation);
    fig3_cmd->add_option("--seed", fig3_args.cfg.base_seed, "base seed")->required();
    fig3_cmd->add_option("--output", fig3_args.output, "CSV path (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return input_error;
    }

    try {
        if (*reduce_cmd) return cmd_reduce(reduce_args, out);
        if (*check_cmd) return cmd_check(check_args, out);
        if (*eval_cmd) return cmd_eval(eval_args, out);
        if (*verify_cmd) return cmd_verify(verify_args, out);
        if (*relax_cmd) return cmd_relax(relax_args, out);
        if (*ctmc_reduce) return cmd_ctmc_reduce(ctmc_args, out);
        if (*ctmc_check) return cmd_ctmc_check(ctmc_args, out);
        if (*gen_cmd) return cmd_gen(gen_args, out);
        if (*fig3_cmd) return cmd_fig3(fig3_args, out);
    } catch (const InternalError& e) {
        err << "internal error: " << e.what() << "\n";
        return internal_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return input_error;
    }
    return input_error;
}

/// Convenience overload: args excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    std::vector<const char*> argv{"lumpnn"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

} // namespace lumpnn::cli
