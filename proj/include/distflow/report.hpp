#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <iomanip>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "distflow/c1.hpp"
#include "distflow/error.hpp"
#include "distflow/exactness.hpp"
#include "distflow/experiments.hpp"
#include "distflow/powerflow.hpp"
#include "distflow/version.hpp"

namespace distflow {

inline constexpr const char* report_schema = "distflow-report/1";

namespace detail {

/// Non-finite doubles have no JSON literal; they are written as the strings "inf", "-inf" and "nan".
inline nlohmann::json number(double x) {
    if (std::isfinite(x)) return x;
    if (std::isnan(x)) return "nan";
    return x > 0 ? "inf" : "-inf";
}

inline double read_number(const nlohmann::json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    throw Error(Errc::ParseError, "expected a number in flow state JSON");
}

inline nlohmann::json complex_array(const std::vector<Complex>& v) {
    auto out = nlohmann::json::array();
    for (const auto& c : v) out.push_back({c.real(), c.imag()});
    return out;
}

inline std::vector<Complex> read_complex_array(const nlohmann::json& j) {
    std::vector<Complex> out;
    for (const auto& e : j) {
        if (!e.is_array() || e.size() != 2) throw Error(Errc::ParseError, "complex entries are [re, im] pairs");
        out.emplace_back(read_number(e[0]), read_number(e[1]));
    }
    return out;
}

inline const char* margin_kind_name(MarginKind k) {
    switch (k) {
        case MarginKind::Finite: return "finite";
        case MarginKind::Infinite: return "infinite";
        case MarginKind::AboveCap: return "above_cap";
    }
    return "finite";
}

}  // namespace detail

[[nodiscard]] inline nlohmann::json state_to_json(const FlowState& st) {
    return {{"s", detail::complex_array(st.s)},
            {"S", detail::complex_array(st.S)},
            {"v", st.v},
            {"ell", st.ell},
            {"s0", {st.s0.real(), st.s0.imag()}}};
}

[[nodiscard]] inline FlowState state_from_json(const nlohmann::json& j) {
    try {
        FlowState st;
        st.s = detail::read_complex_array(j.at("s"));
        st.S = detail::read_complex_array(j.at("S"));
        for (const auto& x : j.at("v")) st.v.push_back(detail::read_number(x));
        for (const auto& x : j.at("ell")) st.ell.push_back(detail::read_number(x));
        const auto& s0 = j.at("s0");
        st.s0 = {detail::read_number(s0.at(0)), detail::read_number(s0.at(1))};
        return st;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::ParseError, std::string("flow state JSON: ") + e.what());
    }
}

[[nodiscard]] inline nlohmann::json to_json(const C1Report& r) {
    nlohmann::json j{{"holds", r.holds}, {"tested_pairs", r.tested_pairs}, {"min_entry", detail::number(r.min_entry)}};
    if (r.witness) {
        j["witness"] = {{"leaf", r.witness->leaf.value},
                        {"s", r.witness->s},
                        {"t", r.witness->t},
                        {"product", {r.witness->product[0], r.witness->product[1]}}};
    }
    return j;
}

[[nodiscard]] inline nlohmann::json to_json(const SufficientConditions& c) {
    return {{"i", c.i}, {"ii", c.ii}, {"iii", c.iii}, {"iv", c.iv}, {"v", c.v}, {"any", c.any()}};
}

[[nodiscard]] inline nlohmann::json to_json(const MarginResult& m) {
    return {{"kind", detail::margin_kind_name(m.kind)},
            {"eta_star", detail::number(m.eta_star)},
            {"bracket_width", m.bracket_width},
            {"cap", m.cap},
            {"evaluations", m.evaluations}};
}

[[nodiscard]] inline nlohmann::json to_json(const ExactnessReport& r) {
    nlohmann::json violations = nlohmann::json::array();
    for (const auto& v : r.first_violation) violations.push_back(v ? nlohmann::json(v->value) : nlohmann::json());
    return {{"exact", r.exact},
            {"tolerance", r.tolerance},
            {"max_gap", r.max_gap},
            {"worst_line", r.worst_line.value},
            {"gaps", r.gaps},
            {"first_violation", violations}};
}

[[nodiscard]] inline nlohmann::json to_json(const socp::SolverResiduals& r) {
    return {{"primal", r.primal},
            {"dual", r.dual},
            {"gap", r.gap},
            {"complementarity", r.complementarity},
            {"duality_gap", r.duality_gap}};
}

[[nodiscard]] inline nlohmann::json to_json(const GapReport& g, bool include_records = true) {
    nlohmann::json j{{"samples", g.samples},
                     {"feasible_samples", g.feasible_samples},
                     {"eps_estimate", g.eps_estimate},
                     {"seed", g.seed},
                     {"eta", g.eta}};
    if (include_records) {
        auto rec = nlohmann::json::array();
        for (const auto& r : g.records) {
            rec.push_back({{"index", r.index}, {"converged", r.converged}, {"feasible", r.feasible}, {"eps", r.eps}});
        }
        j["records"] = std::move(rec);
    }
    return j;
}

[[nodiscard]] inline nlohmann::json to_json(const ResidualReport& r) {
    return {{"flow", r.flow},
            {"substation", r.substation},
            {"voltage", r.voltage},
            {"current", r.current},
            {"overall", r.overall}};
}

[[nodiscard]] inline nlohmann::json to_json(const ConstructionTrace& t) {
    nlohmann::json dS = nlohmann::json::array();
    for (const auto& c : t.delta_S) dS.push_back({c.real(), c.imag()});
    nlohmann::json B = nlohmann::json::array();
    for (const auto& b : t.B) B.push_back({{b(0, 0), b(0, 1)}, {b(1, 0), b(1, 1)}});
    return {{"leaf", t.leaf.value},
            {"m", t.m},
            {"path", t.path},
            {"delta_S", dS},
            {"delta_v", t.delta_v},
            {"objective_before", t.objective_before},
            {"objective_after", t.objective_after},
            {"B", B},
            {"output", state_to_json(t.output)}};
}

/// Report skeleton shared by every document this library writes.
[[nodiscard]] inline nlohmann::json report_envelope(const std::string& network, const std::string& experiment) {
    return {{"schema", report_schema},
            {"tool_version", std::string(version)},
            {"network", network},
            {"experiment", experiment},
            {"seed", nullptr},
            {"results", nlohmann::json::object()},
            {"runtimes", nlohmann::json::object()}};
}

/// Full report document. Everything except "runtimes" is a pure function of the inputs.
[[nodiscard]] inline nlohmann::json to_json(const ExperimentReport& rep) {
    nlohmann::json j{{"schema", report_schema},
                     {"tool_version", rep.tool_version},
                     {"network", rep.network},
                     {"experiment", rep.experiment}};
    j["seed"] = rep.seed ? nlohmann::json(*rep.seed) : nlohmann::json();
    j["bus_labels"] = rep.bus_labels;
    nlohmann::json results = nlohmann::json::object();
    if (rep.margin) {
        results["c1_margin"] = to_json(rep.margin->margin);
        results["c1_at_nominal"] = to_json(rep.margin->c1_at_nominal);
        results["sufficient_conditions"] = to_json(rep.margin->conditions);
    }
    if (rep.exactness) {
        const auto& e = *rep.exactness;
        nlohmann::json x{{"variant", e.variant},
                         {"eta", e.eta},
                         {"status", socp::to_string(e.status)},
                         {"iterations", e.iterations},
                         {"residuals", to_json(e.residuals)},
                         {"objective", e.objective},
                         {"line_losses", e.line_losses}};
        x["exactness"] = e.exactness ? to_json(*e.exactness) : nlohmann::json();
        x["roundtrip_voltage_error"] = e.roundtrip_voltage_error ? nlohmann::json(*e.roundtrip_voltage_error)
                                                                 : nlohmann::json();
        x["state"] = state_to_json(e.state);
        results["solve"] = std::move(x);
    }
    if (rep.gap) results["modification_gap"] = to_json(*rep.gap);
    j["results"] = std::move(results);
    j["runtimes"] = rep.runtimes;
    return j;
}

/// CSV writer printing doubles with 17 significant digits so they read back exactly.
class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) { out_ << std::setprecision(17); }

    template <class... Ts>
    void row(const Ts&... cells) {
        bool first = true;
        ((out_ << (first ? "" : ",") << cells, first = false), ...);
        out_ << '\n';
    }

private:
    std::ostream& out_;
};

/// Flat table for a report: one row per network summary, per line for solves, per sample for gap runs.
inline void write_csv(std::ostream& out, const ExperimentReport& rep) {
    CsvWriter csv(out);
    if (rep.margin) {
        const auto& m = *rep.margin;
        csv.row("network", "kind", "eta_star", "c1_at_nominal", "cond_i", "cond_ii", "cond_iii", "cond_iv", "cond_v");
        csv.row(rep.network, detail::margin_kind_name(m.margin.kind), m.margin.eta_star, int(m.c1_at_nominal.holds),
                int(m.conditions.i), int(m.conditions.ii), int(m.conditions.iii), int(m.conditions.iv),
                int(m.conditions.v));
    }
    if (rep.exactness) {
        const auto& e = *rep.exactness;
        const auto& st = e.state;
        csv.row("bus", "label", "p", "q", "v", "P", "Q", "ell", "gap");
        for (std::size_t i = 1; i < st.v.size(); ++i) {
            const double gap = e.exactness && i < e.exactness->gaps.size() ? e.exactness->gaps[i] : 0.0;
            const std::string label = i < rep.bus_labels.size() ? rep.bus_labels[i] : std::to_string(i);
            csv.row(i, label, st.s[i].real(), st.s[i].imag(), st.v[i], st.S[i].real(), st.S[i].imag(), st.ell[i], gap);
        }
    }
    if (rep.gap) {
        csv.row("index", "converged", "feasible", "eps");
        for (const auto& r : rep.gap->records) csv.row(r.index, int(r.converged), int(r.feasible), r.eps);
    }
}

}  // namespace distflow
