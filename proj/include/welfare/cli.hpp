#ifndef WELFARE_CLI_HPP
#define WELFARE_CLI_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "welfare/config.hpp"
#include "welfare/csv.hpp"
#include "welfare/cv.hpp"
#include "welfare/errors.hpp"
#include "welfare/json_writer.hpp"
#include "welfare/policy.hpp"
#include "welfare/pum.hpp"
#include "welfare/report.hpp"
#include "welfare/roy.hpp"
#include "welfare/superquantile.hpp"
#include "welfare/variational_lp.hpp"
#include "welfare/version.hpp"

namespace welfare {

inline const char* tail_label(Tail t) { return t == Tail::Lower ? "lower" : "upper"; }

// Run identity serialized into every report.  Thread count is deliberately
// absent: reports must be byte-identical across thread counts.
struct RunMeta {
    std::string command;
    std::uint64_t seed = 0;
    std::uint64_t n = 0;
    std::string digest;
    bool simulated = true; // data commands have no seed or draw count
};

namespace detail {

inline void write_metadata(JsonWriter& w, const RunMeta& meta) {
    w.key("metadata").begin_object();
    w.key("schema_version").value(report_schema_version);
    w.key("tool").value(tool_name);
    w.key("version").value(tool_version);
    w.key("command").value(meta.command);
    if (meta.simulated) {
        w.key("seed").value(meta.seed);
        w.key("n").value(meta.n);
    }
    if (!meta.digest.empty()) w.key("scenario_digest").value(meta.digest);
    w.end_object();
}

inline void write_record(JsonWriter& w, const BoundRecord& r) {
    w.begin_object();
    w.key("check").value(r.check);
    w.key("level").value(r.level);
    w.key("tail").value(tail_label(r.tail));
    w.key("lhs").value(r.lhs);
    w.key("rhs").begin_array();
    for (double v : r.rhs) w.value(v);
    w.end_array();
    w.key("slack").begin_array();
    for (double v : r.slack) w.value(v);
    w.end_array();
    w.key("mc_standard_error").value(r.mc_standard_error);
    w.key("two_sided").value(r.two_sided);
    w.key("violated").value(r.violated);
    w.end_object();
}

} // namespace detail

// Full JSON report: metadata, the per-level check records under "results",
// warnings, any extra top-level sections written by `extra`, and the
// overall violation flag.
inline std::string render_report(const RunMeta& meta, const BoundReport& report,
                                 const std::function<void(JsonWriter&)>& extra = {}) {
    JsonWriter w;
    w.begin_object();
    detail::write_metadata(w, meta);
    w.key("results").begin_array();
    for (const auto& r : report.records) detail::write_record(w, r);
    w.end_array();
    w.key("warnings").begin_array();
    for (const auto& s : report.warnings) w.value(s);
    w.end_array();
    if (extra) extra(w);
    w.key("violated").value(report.any_violated());
    w.end_object();
    std::string out = w.take();
    out.push_back('\n');
    return out;
}

inline std::string render_report_text(const RunMeta& meta, const BoundReport& report) {
    std::string out = "# " + meta.command;
    if (meta.simulated) {
        out += " seed=" + std::to_string(meta.seed) + " n=" + std::to_string(meta.n);
    }
    if (!meta.digest.empty()) out += " scenario=" + meta.digest;
    out += "\n";
    for (const auto& r : report.records) {
        out += r.check + " level=" + format_full_precision(r.level) + " tail=" +
               tail_label(r.tail) + " lhs=" + format_full_precision(r.lhs);
        out += " rhs=";
        for (std::size_t i = 0; i < r.rhs.size(); ++i) {
            if (i) out += ";";
            out += format_full_precision(r.rhs[i]);
        }
        out += " slack=";
        for (std::size_t i = 0; i < r.slack.size(); ++i) {
            if (i) out += ";";
            out += format_full_precision(r.slack[i]);
        }
        out += " se=" + format_full_precision(r.mc_standard_error);
        out += r.violated ? " VIOLATED" : " ok";
        out += "\n";
    }
    for (const auto& s : report.warnings) out += "warning: " + s + "\n";
    out += std::string("violated: ") + (report.any_violated() ? "true" : "false") + "\n";
    return out;
}

namespace detail {

inline void emit_output(const std::string& path, const std::string& content) {
    if (path.empty()) {
        std::cout << content;
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << content;
    if (!out) throw IoError("failed while writing '" + path + "'");
}

inline std::vector<double> sorted_unique(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

inline BoundReport suffix_checks(BoundReport r, const std::string& suffix) {
    for (auto& rec : r.records) rec.check += ":" + suffix;
    return r;
}

} // namespace detail

// One resolved invocation: which subcommand to run and with what inputs.
struct RunConfig {
    std::string command;
    std::string input;
    std::string config;
    std::string output;
    std::string format = "json";
    std::vector<double> betas;
    std::vector<double> alphas;
    std::uint64_t n = 10000;
    std::uint64_t seed = 42;
    int threads = 1;
    double gamma = std::numeric_limits<double>::quiet_NaN();
    std::string method = "sort";
};

namespace detail {

using CommonArgs = RunConfig;

inline void require_kind(const ScenarioConfig& cfg, const std::string& kind) {
    if (cfg.kind != kind) {
        throw BadConfig("config kind '" + cfg.kind + "' does not match command (need '" +
                        kind + "')");
    }
}

inline int finish(const CommonArgs& a, const RunMeta& meta, const BoundReport& report,
                  const std::function<void(JsonWriter&)>& extra = {}) {
    if (a.format == "text") {
        emit_output(a.output, render_report_text(meta, report));
    } else {
        emit_output(a.output, render_report(meta, report, extra));
    }
    return report.any_violated() ? 2 : 0;
}

inline int cmd_superquantile(const CommonArgs& a) {
    if (a.betas.empty() && a.alphas.empty()) {
        throw BadConfig("give at least one --betas or --alphas level");
    }
    CateTable table = ingest_cate_csv(a.input);
    std::vector<double> vals, wts;
    vals.reserve(table.rows.size());
    wts.reserve(table.rows.size());
    for (const auto& r : table.rows) {
        vals.push_back(r.tau_hat);
        wts.push_back(r.weight);
    }
    WeightedSample sample = WeightedSample::from_weighted(vals, wts);

    struct Row {
        double level;
        Tail tail;
        double value;
        double tail_start;
        std::size_t n_binding = 0;
    };
    std::vector<Row> rows;
    for (double b : a.betas) {
        Row row{b, Tail::Lower, 0.0, 0.0, 0};
        if (a.method == "lp") {
            PluginProgram prog{vals, b, table.has_weight ? wts : std::vector<double>{}};
            LpSolution sol = solve_simplex_lp(prog);
            InterpretedSolution is = interpret_solution(sol, prog);
            row.value = is.superquantile_estimate;
            row.tail_start = is.beta_quantile_estimate;
            row.n_binding = is.n_binding;
        } else {
            auto r = lower_superquantile(sample, BetaLevel{b});
            row.value = r.value;
            row.tail_start = r.lambda_star;
        }
        rows.push_back(row);
    }
    for (double al : a.alphas) {
        auto r = upper_superquantile(sample, AlphaLevel{al});
        rows.push_back(Row{al, Tail::Upper, r.value, r.lambda_star, 0});
    }

    RunMeta meta;
    meta.command = "superquantile";
    meta.simulated = false;
    if (a.format == "text") {
        std::string out = "# superquantile method=" + a.method + "\n";
        for (const auto& r : rows) {
            out += std::string(tail_label(r.tail)) + " level=" +
                   format_full_precision(r.level) + " value=" +
                   format_full_precision(r.value) + " tail_start=" +
                   format_full_precision(r.tail_start) + "\n";
        }
        emit_output(a.output, out);
        return 0;
    }
    JsonWriter w;
    w.begin_object();
    write_metadata(w, meta);
    w.key("method").value(a.method);
    w.key("results").begin_array();
    for (const auto& r : rows) {
        w.begin_object();
        w.key("level").value(r.level);
        w.key("tail").value(tail_label(r.tail));
        w.key("value").value(r.value);
        w.key("tail_start").value(r.tail_start);
        if (a.method == "lp" && r.tail == Tail::Lower) {
            w.key("n_binding").value(static_cast<std::uint64_t>(r.n_binding));
        }
        w.end_object();
    }
    w.end_array();
    w.key("violated").value(false);
    w.end_object();
    emit_output(a.output, w.take() + "\n");
    return 0;
}

inline int cmd_bound(const CommonArgs& a) {
    if (a.betas.empty()) throw BadConfig("--betas is required");
    CateTable table = ingest_cate_csv(a.input, true);
    GroupedCate grouped = group_by_id(table);

    std::vector<double> vals, wts;
    for (const auto& r : table.rows) {
        vals.push_back(r.tau_hat);
        wts.push_back(r.weight);
    }
    WeightedSample individual = WeightedSample::from_weighted(vals, wts);
    std::vector<double> means;
    means.reserve(grouped.ids.size());
    for (std::size_t g = 0; g < grouped.ids.size(); ++g) means.push_back(grouped.group_mean(g));
    WeightedSample aggregate = WeightedSample::from_weighted(means, grouped.mass);

    bool use_gamma = std::isfinite(a.gamma);
    if (use_gamma) {
        if (!(a.gamma >= 0.0)) throw InvalidSlackBound("gamma must be nonnegative");
        for (std::size_t g = 0; g < grouped.ids.size(); ++g) {
            for (double tau : grouped.draws[g]) {
                if (means[g] - tau > a.gamma + 1e-12 * (1.0 + std::abs(a.gamma))) {
                    throw InvalidSlackBound("group '" + grouped.ids[g] +
                                            "' has a draw below its mean by more than gamma");
                }
            }
        }
    }

    BoundReport report;
    for (double b : a.betas) {
        double lhs = lower_superquantile(individual, BetaLevel{b}).value;
        double rhs = lower_superquantile(aggregate, BetaLevel{b}).value;
        report.records.push_back(make_bound_record("individual_le_group_mean_tail", b,
                                                   Tail::Lower, lhs, {rhs}, 0.0));
        if (use_gamma) {
            report.records.push_back(
                make_bound_record("group_mean_tail_minus_gamma_le_individual", b, Tail::Lower,
                                  rhs - a.gamma, {lhs}, 0.0));
        }
    }
    RunMeta meta;
    meta.command = "bound";
    meta.simulated = false;
    return finish(a, meta, report);
}

inline int cmd_curve(const CommonArgs& a) {
    if (a.betas.empty()) throw BadConfig("--betas is required");
    CateTable table = ingest_cate_csv(a.input);
    std::vector<double> vals, wts;
    for (const auto& r : table.rows) {
        vals.push_back(r.tau_hat);
        wts.push_back(r.weight);
    }
    WeightedSample sample = WeightedSample::from_weighted(vals, wts);
    std::vector<double> levels = sorted_unique(a.betas);
    auto curve = superquantile_curve(sample, levels);

    if (a.format == "json") {
        RunMeta meta;
        meta.command = "curve";
        meta.simulated = false;
        JsonWriter w;
        w.begin_object();
        write_metadata(w, meta);
        w.key("results").begin_array();
        for (const auto& r : curve) {
            w.begin_object();
            w.key("level").value(r.level);
            w.key("value").value(r.value);
            w.end_object();
        }
        w.end_array();
        w.key("violated").value(false);
        w.end_object();
        emit_output(a.output, w.take() + "\n");
        return 0;
    }
    // csv
    std::string out = "level,value\n";
    for (const auto& r : curve) {
        out += format_full_precision(r.level) + "," + format_full_precision(r.value) + "\n";
    }
    emit_output(a.output, out);
    return 0;
}

inline int cmd_simulate_pum(const CommonArgs& a) {
    ScenarioConfig cfg = load_scenario(a.config);
    require_kind(cfg, "pum");
    std::vector<double> betas = a.betas.empty()
                                    ? std::vector<double>{0.05, 0.1, 0.25, 0.5, 0.75, 1.0}
                                    : a.betas;
    BoundReport report = check_theorem1(cfg.pum, a.n, betas, a.seed, a.threads);
    double gamma = std::isfinite(a.gamma) ? a.gamma : cfg.gamma;
    if (std::isfinite(gamma)) {
        report.append(check_theorem2(cfg.pum, gamma, a.n, betas, a.seed, a.threads));
    }
    std::size_t gb = cfg.pum.groups.size() > 1 ? 1 : 0;
    report.append(check_appendix_properties(cfg.pum, 0, gb, PolicyState::After,
                                            sorted_unique(betas), a.n, a.seed, a.threads));
    RunMeta meta{"simulate-pum", a.seed, a.n, cfg.digest, true};
    return finish(a, meta, report);
}

inline int cmd_simulate_cv(const CommonArgs& a) {
    ScenarioConfig cfg = load_scenario(a.config);
    require_kind(cfg, "cv");
    std::vector<double> betas =
        a.betas.empty() ? std::vector<double>{0.05, 0.1, 0.25, 0.5} : a.betas;
    BoundReport report = check_prop3(cfg.cv, a.n, betas, a.seed, a.threads);
    RunMeta meta{"simulate-cv", a.seed, a.n, cfg.digest, true};
    return finish(a, meta, report);
}

inline int cmd_simulate_policy(const CommonArgs& a) {
    ScenarioConfig cfg = load_scenario(a.config);
    require_kind(cfg, "policy");
    if (cfg.rules.empty()) throw BadConfig("policy config needs at least one rule");
    std::vector<double> betas =
        a.betas.empty() ? std::vector<double>{0.1, 0.25, 0.5} : a.betas;
    BoundReport report;
    for (const auto& rule : cfg.rules) {
        report.append(suffix_checks(
            check_theorem3(cfg.policy, rule, a.n, betas, a.seed, a.threads), rule.name));
    }
    for (std::size_t i = 0; i < cfg.rules.size(); ++i) {
        for (std::size_t j = 0; j < cfg.rules.size(); ++j) {
            if (i == j) continue;
            report.append(suffix_checks(check_prop4(cfg.policy, cfg.rules[i], cfg.rules[j],
                                                    a.n, betas, a.seed, a.threads),
                                        cfg.rules[i].name + "->" + cfg.rules[j].name));
        }
    }
    report.append(check_selection_consistency(cfg.policy, a.n, a.seed, a.threads));

    std::vector<RegretReport> regrets;
    for (double b : betas) {
        regrets.push_back(regret_report(cfg.policy, cfg.rules, BetaLevel{b}, a.n, a.seed,
                                        a.threads));
    }
    auto extra = [&](JsonWriter& w) {
        w.key("regret").begin_array();
        for (const auto& rr : regrets) {
            w.begin_object();
            w.key("beta").value(rr.beta);
            w.key("rules").begin_array();
            for (const auto& e : rr.entries) {
                w.begin_object();
                w.key("rule").value(e.rule_name);
                w.key("conditional_tail_welfare").value(e.conditional_tail_welfare);
                w.key("realized_tail_welfare").value(e.realized_tail_welfare);
                w.key("regret_bound_vs_best").value(e.regret_bound_vs_best);
                w.end_object();
            }
            w.end_array();
            w.end_object();
        }
        w.end_array();
    };
    RunMeta meta{"simulate-policy", a.seed, a.n, cfg.digest, true};
    return finish(a, meta, report, extra);
}

inline int cmd_simulate_roy(const CommonArgs& a) {
    ScenarioConfig cfg = load_scenario(a.config);
    require_kind(cfg, "roy");
    std::vector<double> betas =
        a.betas.empty() ? std::vector<double>{0.1, 0.25, 0.5} : a.betas;
    std::vector<double> alphas =
        a.alphas.empty() ? std::vector<double>{0.5, 0.75, 0.9} : a.alphas;
    RoyDraws rd = simulate_roy(cfg.roy, a.n, a.seed, a.threads);
    BoundReport report = check_prop5(cfg.roy, rd, betas);
    report.append(check_prop6(cfg.roy, rd, alphas));
    report.append(check_theorem5(cfg.roy, rd, betas, alphas));
    report.append(check_roy_diagnostics(cfg.roy, rd));

    std::vector<double> u_grid;
    for (int k = 1; k <= 9; ++k) u_grid.push_back(k / 10.0);
    RoyParameters params = compute_parameters(cfg.roy, rd, u_grid);
    auto extra = [&](JsonWriter& w) {
        w.key("parameters").begin_object();
        w.key("u_grid").begin_array();
        for (double u : params.u_grid) w.value(u);
        w.end_array();
        w.key("analytic_mte").value(params.analytic_mte);
        w.key("cells").begin_array();
        for (const auto& c : params.cells) {
            w.begin_object();
            w.key("b_ate").value(c.b_ate);
            w.key("c_ate").value(c.c_ate);
            w.key("w_ate").value(c.w_ate);
            w.key("b_tt").value(c.b_tt);
            w.key("c_tt").value(c.c_tt);
            w.key("w_tt").value(c.w_tt);
            w.key("n_treated").value(static_cast<std::uint64_t>(c.n_treated));
            w.key("b_mte").begin_array();
            for (double v : c.b_mte) w.value(v);
            w.end_array();
            w.key("c_mte").begin_array();
            for (double v : c.c_mte) w.value(v);
            w.end_array();
            w.key("w_mte").begin_array();
            for (double v : c.w_mte) w.value(v);
            w.end_array();
            w.end_object();
        }
        w.end_array();
        w.end_object();
    };
    RunMeta meta{"simulate-roy", a.seed, a.n, cfg.digest, true};
    return finish(a, meta, report, extra);
}

} // namespace detail

/*!
 * Dispatches one resolved invocation and writes its report.  Returns 0
 * when all checks pass, 2 when any bound is flagged as violated; input,
 * configuration, and I/O problems surface as exceptions.
 */
inline int run_command(const RunConfig& cfg) {
    if (cfg.command == "superquantile") return detail::cmd_superquantile(cfg);
    if (cfg.command == "bound") return detail::cmd_bound(cfg);
    if (cfg.command == "curve") {
        if (cfg.format != "json" && cfg.format != "csv") {
            throw BadConfig("curve format must be csv or json");
        }
        return detail::cmd_curve(cfg);
    }
    if (cfg.command == "simulate-pum") return detail::cmd_simulate_pum(cfg);
    if (cfg.command == "simulate-cv") return detail::cmd_simulate_cv(cfg);
    if (cfg.command == "simulate-policy") return detail::cmd_simulate_policy(cfg);
    if (cfg.command == "simulate-roy") return detail::cmd_simulate_roy(cfg);
    throw BadConfig("unknown command '" + cfg.command + "'");
}

/*!
 * Command line entry point.  Returns 0 when all checks pass, 2 when any
 * bound is flagged as violated, 1 on input or configuration errors.
 */
inline int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Tail welfare bounds: superquantile computation, bound checks, and "
                 "simulation-based verification"};
    app.require_subcommand(1);
    detail::CommonArgs a;

    auto add_levels = [&](CLI::App* cmd, bool betas, bool alphas) {
        if (betas) {
            cmd->add_option("--betas,--beta", a.betas, "lower-tail levels in (0, 1]")
                ->delimiter(',');
        }
        if (alphas) {
            cmd->add_option("--alphas,--alpha", a.alphas, "upper-tail levels in [0, 1)")
                ->delimiter(',');
        }
    };
    auto add_io = [&](CLI::App* cmd, const char* formats) {
        cmd->add_option("--output,-o", a.output, "write the report here (default stdout)");
        cmd->add_option("--format", a.format, formats);
    };
    auto add_sim = [&](CLI::App* cmd) {
        cmd->add_option("--config,-c", a.config, "scenario JSON file")->required();
        cmd->add_option("--n", a.n, "draws per group");
        cmd->add_option("--seed", a.seed, "random seed");
        cmd->add_option("--threads", a.threads, "worker threads");
        add_io(cmd, "json or text");
    };

    auto* sq = app.add_subcommand("superquantile", "tail means of a CSV sample");
    sq->add_option("--input,-i", a.input, "CSV with group_id,tau_hat[,weight]")->required();
    add_levels(sq, true, true);
    sq->add_option("--method", a.method, "sort or lp")
        ->check(CLI::IsMember({"sort", "lp"}));
    add_io(sq, "json or text");

    auto* bd = app.add_subcommand("bound", "aggregation bound checks on micro data");
    bd->add_option("--input,-i", a.input, "CSV with group_id,tau_hat[,weight]")->required();
    add_levels(bd, true, false);
    bd->add_option("--gamma", a.gamma, "uniform slack for the lower sandwich");
    add_io(bd, "json or text");

    auto* cv = app.add_subcommand("curve", "superquantile curve over levels");
    cv->add_option("--input,-i", a.input, "CSV with group_id,tau_hat[,weight]")->required();
    add_levels(cv, true, false);
    add_io(cv, "csv or json");

    auto* sp = app.add_subcommand("simulate-pum", "choice-model tail bound checks");
    add_sim(sp);
    add_levels(sp, true, false);
    sp->add_option("--gamma", a.gamma, "uniform slack for the lower sandwich");

    auto* sc = app.add_subcommand("simulate-cv", "compensating-variation tail bound checks");
    add_sim(sc);
    add_levels(sc, true, false);

    auto* so = app.add_subcommand("simulate-policy", "policy-rule tail bound checks");
    add_sim(so);
    add_levels(so, true, false);

    auto* sr = app.add_subcommand("simulate-roy", "selection-model tail bound checks");
    add_sim(sr);
    add_levels(sr, true, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        a.command = app.get_subcommands().front()->get_name();
        return run_command(a);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace welfare

#endif
