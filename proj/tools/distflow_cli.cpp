#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "distflow/distflow.hpp"

namespace {

using namespace distflow;
using nlohmann::json;

struct CommonArgs {
    std::string network_path;
    std::string dataset;
    std::string variant = "socpm";
    double eps = 0.0;
    double eta = 1.0;
    std::optional<double> tol;
    std::uint64_t seed = 1;
    std::size_t samples = 1000;
    unsigned threads = 0;
    std::string state_path;
    std::string out_path;
    std::string csv_path;
    bool strict = false;
};

/// Thrown for outcomes that are valid but negative, so --strict can map them to exit code 1.
struct NegativeResult {};

void add_common(CLI::App* cmd, CommonArgs& a) {
    auto* net = cmd->add_option("--network", a.network_path, "Network file");
    auto* ds = cmd->add_option("--dataset", a.dataset, "Embedded dataset name (sce47, sce56)");
    net->excludes(ds);
    cmd->add_option("--variant", a.variant, "Relaxation: socp, socpm or opfeps")
        ->check(CLI::IsMember({"socp", "socpm", "opfeps"}));
    cmd->add_option("--eps", a.eps, "Voltage tightening for opfeps (pu^2)");
    cmd->add_option("--eta", a.eta, "Scale applied to PV and capacitor ratings");
    cmd->add_option("--tol", a.tol, "Tolerance for the subcommand's main computation");
    cmd->add_option("--seed", a.seed, "Sampling seed");
    cmd->add_option("--out", a.out_path, "Write a JSON report to this path");
    cmd->add_option("--csv", a.csv_path, "Write a CSV table to this path");
    cmd->add_flag("--strict", a.strict, "Exit with status 1 on a negative analysis result");
}

io::LoadedNetwork load(const CommonArgs& a) {
    if (!a.network_path.empty()) return io::load_network_file(a.network_path);
    if (!a.dataset.empty()) return io::embedded_dataset(a.dataset);
    throw Error(Errc::InvalidArgument, "one of --network or --dataset is required");
}

FlowState read_state(const std::string& path) {
    if (path.empty()) throw Error(Errc::InvalidArgument, "--state is required");
    std::ifstream in(path);
    if (!in) throw Error(Errc::Io, "cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, path + ": " + e.what());
    }
    if (j.contains("results") && j["results"].contains("solve")) return state_from_json(j["results"]["solve"]["state"]);
    if (j.contains("results") && j["results"].contains("state")) return state_from_json(j["results"]["state"]);
    return state_from_json(j);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::Io, "cannot write " + path);
    out << text;
    if (!out) throw Error(Errc::Io, "failed writing " + path);
}

void emit(const CommonArgs& a, const json& doc, const ExperimentReport* rep = nullptr) {
    if (!a.out_path.empty()) write_text(a.out_path, doc.dump(2) + "\n");
    if (!a.csv_path.empty()) {
        if (rep == nullptr) throw Error(Errc::InvalidArgument, "this subcommand has no CSV table");
        std::ostringstream csv;
        write_csv(csv, *rep);
        write_text(a.csv_path, csv.str());
    }
}

void print_margin(const MarginResult& m) {
    switch (m.kind) {
        case MarginKind::Infinite: std::printf("C1 margin: infinite (no DG or capacitors)\n"); break;
        case MarginKind::AboveCap: std::printf("C1 margin: above %.6g\n", m.cap); break;
        case MarginKind::Finite: std::printf("C1 margin: %.6f (+/- %.1e)\n", m.eta_star, m.bracket_width); break;
    }
}

int cmd_check_c1(const CommonArgs& a) {
    const auto data = load(a);
    const auto bounds = injection_bounds(data.portfolio, a.eta);
    const auto rep = check_c1(data.network, bounds);
    const auto cond = check_sufficient_conditions(data.network, bounds);
    std::printf("%s: C1 %s at eta=%g (%zu products, min entry %.6g)\n", data.name.c_str(),
                rep.holds ? "holds" : "fails", a.eta, rep.tested_pairs, rep.min_entry);
    if (rep.witness) {
        std::printf("  witness: leaf %s, s=%zu, t=%zu, product=(%.6g, %.6g)\n",
                    data.network.label(rep.witness->leaf.value).c_str(), rep.witness->s, rep.witness->t,
                    rep.witness->product[0], rep.witness->product[1]);
    }
    std::printf("  sufficient conditions: i=%d ii=%d iii=%d iv=%d v=%d\n", cond.i, cond.ii, cond.iii, cond.iv, cond.v);
    auto doc = report_envelope(data.name, "check-c1");
    doc["results"] = {{"eta", a.eta}, {"c1", to_json(rep)}, {"sufficient_conditions", to_json(cond)}};
    emit(a, doc);
    if (!rep.holds) throw NegativeResult{};
    return 0;
}

int cmd_margin(const CommonArgs& a) {
    const auto data = load(a);
    const auto rep = run_margin_experiment(data, a.tol.value_or(1e-4));
    std::printf("%s: ", data.name.c_str());
    print_margin(rep.margin->margin);
    emit(a, to_json(rep), &rep);
    if (!rep.margin->c1_at_nominal.holds) throw NegativeResult{};
    return 0;
}

int cmd_solve(const CommonArgs& a) {
    const auto data = load(a);
    socp::SolverOptions options;
    if (a.tol) options.tol = *a.tol;
    const auto rep = run_exactness_experiment(data, parse_variant(a.variant, a.eps), a.eta, options);
    const auto& e = *rep.exactness;
    std::printf("%s %s eta=%g: %s after %d iterations, objective %.10g\n", data.name.c_str(), e.variant.c_str(), e.eta,
                socp::to_string(e.status), e.iterations, e.objective);
    std::printf("  residuals: primal %.2e dual %.2e gap %.2e\n", e.residuals.primal, e.residuals.dual,
                e.residuals.gap);
    if (e.exactness) {
        std::printf("  exact: %s (max gap %.3e on line into bus %s)\n", e.exactness->exact ? "yes" : "no",
                    e.exactness->max_gap, data.network.label(e.exactness->worst_line.value).c_str());
    }
    if (e.roundtrip_voltage_error) std::printf("  power-flow round trip |dv| = %.3e\n", *e.roundtrip_voltage_error);
    emit(a, to_json(rep), &rep);
    if (e.status != socp::SolveStatus::Optimal || !e.exactness || !e.exactness->exact) throw NegativeResult{};
    return 0;
}

int cmd_powerflow(const CommonArgs& a) {
    const auto data = load(a);
    SweepOptions options;
    if (a.tol) options.tol = *a.tol;
    const auto s = a.state_path.empty() ? nominal_injections(data.portfolio, a.eta) : read_state(a.state_path).s;
    const auto st = sweep_solve(data.network, s, options);
    const auto res = residuals(data.network, st);
    double vmin = st.v[0], vmax = st.v[0];
    for (double v : st.v) {
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
    }
    std::printf("%s: s0 = %.8f %+.8fi, losses %.8f, v in [%.6f, %.6f], residual %.2e\n", data.name.c_str(),
                st.s0.real(), st.s0.imag(), line_losses(data.network, st), vmin, vmax, res.overall);
    auto doc = report_envelope(data.name, "powerflow");
    doc["results"] = {{"state", state_to_json(st)}, {"residuals", to_json(res)}};
    emit(a, doc);
    return 0;
}

int cmd_verify(const CommonArgs& a) {
    const auto data = load(a);
    const auto st = read_state(a.state_path);
    const auto rep = verify(data.network, st, a.tol.value_or(1e-6));
    std::printf("%s: %s (max gap %.3e on line into bus %s)\n", data.name.c_str(), rep.exact ? "exact" : "not exact",
                rep.max_gap, data.network.label(rep.worst_line.value).c_str());
    auto doc = report_envelope(data.name, "verify");
    doc["results"] = {{"exactness", to_json(rep)}};
    emit(a, doc);
    if (!rep.exact) throw NegativeResult{};
    return 0;
}

int cmd_construct(const CommonArgs& a) {
    const auto data = load(a);
    const auto st = read_state(a.state_path);
    ConstructOptions options;
    if (a.tol) options.equality_tol = *a.tol;
    const auto tr = construct_point(data.network, st, options);
    std::printf("%s: leaf %s, m=%zu, objective %.10g -> %.10g\n", data.name.c_str(),
                data.network.label(tr.leaf.value).c_str(), tr.m, tr.objective_before, tr.objective_after);
    auto doc = report_envelope(data.name, "construct");
    doc["results"] = {{"trace", to_json(tr)}};
    emit(a, doc);
    return 0;
}

int cmd_gap(const CommonArgs& a) {
    const auto data = load(a);
    ExperimentReport rep;
    rep.network = data.name;
    rep.experiment = "gap";
    rep.bus_labels = data.network.labels();
    rep.seed = a.seed;
    const auto start = std::chrono::steady_clock::now();
    rep.gap = run_gap_experiment(data, a.samples, a.seed, a.eta, a.threads);
    rep.runtimes["gap"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s: modification gap estimate %.6f over %zu of %zu feasible samples (seed %llu)\n",
                data.name.c_str(), rep.gap->eps_estimate, rep.gap->feasible_samples, rep.gap->samples,
                static_cast<unsigned long long>(a.seed));
    emit(a, to_json(rep), &rep);
    return 0;
}

int cmd_report(const CommonArgs& a) {
    const auto data = load(a);
    socp::SolverOptions options;
    if (a.tol) options.tol = *a.tol;
    auto rep = run_margin_experiment(data);
    auto solved = run_exactness_experiment(data, parse_variant(a.variant, a.eps), a.eta, options);
    rep.experiment = "report";
    rep.exactness = std::move(solved.exactness);
    for (const auto& [k, v] : solved.runtimes) rep.runtimes["solve." + k] = v;
    const auto start = std::chrono::steady_clock::now();
    rep.gap = run_gap_experiment(data, a.samples, a.seed, a.eta, a.threads);
    rep.runtimes["gap"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rep.seed = a.seed;
    const auto& e = *rep.exactness;
    std::printf("%s\n  ", data.name.c_str());
    print_margin(rep.margin->margin);
    std::printf("  %s: %s, exact %s, objective %.10g\n", e.variant.c_str(), socp::to_string(e.status),
                e.exactness && e.exactness->exact ? "yes" : "no", e.objective);
    std::printf("  modification gap estimate %.6f (%zu samples, seed %llu)\n", rep.gap->eps_estimate,
                rep.gap->samples, static_cast<unsigned long long>(a.seed));
    json doc = to_json(rep);
    if (!a.out_path.empty()) write_text(a.out_path, doc.dump(2) + "\n");
    if (!a.csv_path.empty()) {
        ExperimentReport summary = rep;
        summary.exactness.reset();
        summary.gap.reset();
        std::ostringstream csv;
        write_csv(csv, summary);
        write_text(a.csv_path, csv.str());
    }
    if (!rep.margin->c1_at_nominal.holds || e.status != socp::SolveStatus::Optimal || !e.exactness ||
        !e.exactness->exact) {
        throw NegativeResult{};
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exactness analysis for convex relaxations of optimal power flow on radial feeders"};
    app.set_version_flag("--version", std::string(distflow::version));
    app.require_subcommand(1);

    CommonArgs args;
    auto* check = app.add_subcommand("check-c1", "Check condition C1 at the given device scale");
    auto* margin = app.add_subcommand("margin", "Largest device scale for which C1 holds");
    auto* solve = app.add_subcommand("solve", "Solve the loss-minimizing relaxation and check exactness");
    auto* pf = app.add_subcommand("powerflow", "Forward-backward sweep at nominal or given injections");
    auto* ver = app.add_subcommand("verify", "Check a saved flow state for exactness");
    auto* con = app.add_subcommand("construct", "Run the feasible-point construction on a saved state");
    auto* gap = app.add_subcommand("gap", "Monte Carlo estimate of the modification gap");
    auto* rep = app.add_subcommand("report", "Margin, solve and gap in one report");
    for (auto* cmd : {check, margin, solve, pf, ver, con, gap, rep}) add_common(cmd, args);
    for (auto* cmd : {pf, ver, con}) cmd->add_option("--state", args.state_path, "Flow state JSON (or a solve report)");
    for (auto* cmd : {gap, rep}) {
        cmd->add_option("--samples", args.samples, "Number of samples")->check(CLI::PositiveNumber);
        cmd->add_option("--threads", args.threads, "Worker threads (default: DISTFLOW_THREADS or all cores)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*check) return cmd_check_c1(args);
        if (*margin) return cmd_margin(args);
        if (*solve) return cmd_solve(args);
        if (*pf) return cmd_powerflow(args);
        if (*ver) return cmd_verify(args);
        if (*con) return cmd_construct(args);
        if (*gap) return cmd_gap(args);
        if (*rep) return cmd_report(args);
    } catch (const NegativeResult&) {
        return args.strict ? 1 : 0;
    } catch (const distflow::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 2;
}
