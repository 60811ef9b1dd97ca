#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "distflow/devices.hpp"
#include "distflow/error.hpp"
#include "distflow/exactness.hpp"
#include "distflow/lindistflow.hpp"
#include "distflow/network.hpp"
#include "distflow/objective.hpp"
#include "distflow/powerflow.hpp"
#include "distflow/socp/problem.hpp"
#include "distflow/socp/solver.hpp"

namespace distflow {

/// Which voltage upper-bound rows the relaxation carries.
struct Variant {
    enum class Kind { Socp, SocpM, OpfEps };
    Kind kind = Kind::Socp;
    double eps = 0.0;

    [[nodiscard]] static Variant socp() { return {Kind::Socp, 0.0}; }
    [[nodiscard]] static Variant socp_m() { return {Kind::SocpM, 0.0}; }
    [[nodiscard]] static Variant opf_eps(double eps) {
        if (eps < 0.0) throw Error(Errc::InvalidArgument, "eps must be nonnegative");
        return {Kind::OpfEps, eps};
    }

    [[nodiscard]] std::string name() const {
        switch (kind) {
            case Kind::Socp: return "socp";
            case Kind::SocpM: return "socpm";
            case Kind::OpfEps: return "opfeps";
        }
        return "unknown";
    }
};

[[nodiscard]] inline Variant parse_variant(const std::string& name, double eps = 0.0) {
    if (name == "socp") return Variant::socp();
    if (name == "socpm") return Variant::socp_m();
    if (name == "opfeps") return Variant::opf_eps(eps);
    throw Error(Errc::InvalidArgument, "unknown variant '" + name + "'");
}

/// Builds the relaxed OPF as a conic problem.
///
/// Variables, in order: p, q (buses 1..n), P, Q, v, ell (lines by child bus),
/// p0, q0, capacitor outputs, PV real and reactive outputs, and one epigraph
/// variable per quadratic cost. Buses without controllable devices have their
/// injections fixed through equal lower and upper bounds.
[[nodiscard]] inline socp::ConicProblem build_problem(const RadialNetwork& net, const DevicePortfolio& portfolio,
                                                      const Objective& objective, const Variant& variant) {
    using socp::AffineExpr;
    using socp::LinearRow;
    using socp::Term;
    const std::size_t count = net.bus_count();
    const std::size_t n = count - 1;
    if (portfolio.bus_count() != count) throw Error(Errc::InvalidArgument, "portfolio does not match network");
    objective.validate(count);

    std::size_t caps = 0, pvs = 0, quads = 0;
    for (std::size_t i = 1; i < count; ++i) {
        for (const auto& d : portfolio.at(i)) {
            if (const auto* c = std::get_if<Capacitor>(&d)) {
                if (c->discrete) throw Error(Errc::NonconvexDevice, "switched capacitor at bus " + std::to_string(i));
                ++caps;
            }
            if (std::holds_alternative<Photovoltaic>(d)) ++pvs;
        }
    }
    for (const auto& f : objective.costs) {
        if (const auto* q = std::get_if<QuadraticCost>(&f); q && q->a > 0.0) ++quads;
    }

    socp::ConicProblem prob;
    auto& L = prob.layout;
    const auto p = L.add("p", n), q = L.add("q", n), P = L.add("P", n), Q = L.add("Q", n);
    const auto v = L.add("v", n), ell = L.add("ell", n);
    const auto p0 = L.add("p0", 1), q0 = L.add("q0", 1);
    const auto cap_q = L.add("cap_q", caps);
    const auto pv_p = L.add("pv_p", pvs), pv_q = L.add("pv_q", pvs);
    const auto epi = L.add("epigraph", quads);
    prob.resize_to_layout();
    auto bus = [](const socp::Slice& s, std::size_t i) { return s[i - 1]; };

    // objective
    std::size_t next_epi = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t var = i == 0 ? p0[0] : bus(p, i);
        const auto& f = objective.costs[i];
        if (const auto* lin = std::get_if<LinearCost>(&f)) {
            prob.objective[var] += lin->slope;
            continue;
        }
        const auto& quad = std::get<QuadraticCost>(f);
        if (quad.a == 0.0) {
            prob.objective[var] += quad.b;
            continue;
        }
        // (t - b x) * (1 / a) >= x^2
        const auto t = epi[next_epi++];
        prob.objective[t] += 1.0;
        prob.rotated_cones.push_back({AffineExpr{{{t, 1.0}, {var, -quad.b}}, 0.0}, AffineExpr::constant_value(1.0 / quad.a),
                                      {AffineExpr::variable(var)}});
    }

    // power balance on each line and at the substation
    for (std::size_t i = 0; i < count; ++i) {
        LinearRow rp, rq;
        if (i == 0) {
            rp.terms.push_back({p0[0], 1.0});
            rq.terms.push_back({q0[0], 1.0});
        } else {
            rp.terms = {{bus(P, i), 1.0}, {bus(p, i), -1.0}};
            rq.terms = {{bus(Q, i), 1.0}, {bus(q, i), -1.0}};
        }
        const double sign = i == 0 ? 1.0 : -1.0;
        for (auto h : net.children(i)) {
            rp.terms.push_back({bus(P, h), sign});
            rp.terms.push_back({bus(ell, h), -sign * net.r(h)});
            rq.terms.push_back({bus(Q, h), sign});
            rq.terms.push_back({bus(ell, h), -sign * net.x(h)});
        }
        if (i == 0) {
            prob.equalities.push_back(std::move(rp));
            prob.equalities.push_back(std::move(rq));
        } else {
            prob.equalities.push_back(std::move(rp));
            prob.equalities.push_back(std::move(rq));
        }
    }
    // voltage drop
    for (std::size_t i = 1; i < count; ++i) {
        const auto j = net.parent(i);
        const double r = net.r(i), x = net.x(i);
        LinearRow row;
        row.terms = {{bus(v, i), 1.0}, {bus(P, i), -2.0 * r}, {bus(Q, i), -2.0 * x}, {bus(ell, i), r * r + x * x}};
        if (j == 0) {
            row.rhs = net.v0();
        } else {
            row.terms.push_back({bus(v, j), -1.0});
        }
        prob.equalities.push_back(std::move(row));
    }

    // injections
    std::size_t next_cap = 0, next_pv = 0;
    for (std::size_t i = 1; i < count; ++i) {
        const auto devices = portfolio.at(i);
        const Complex fixed = fixed_injection(devices);
        const bool controllable = std::any_of(devices.begin(), devices.end(), is_controllable);
        if (!controllable) {
            prob.lower[bus(p, i)] = prob.upper[bus(p, i)] = fixed.real();
            prob.lower[bus(q, i)] = prob.upper[bus(q, i)] = fixed.imag();
            continue;
        }
        LinearRow rp{{{bus(p, i), 1.0}}, fixed.real()};
        LinearRow rq{{{bus(q, i), 1.0}}, fixed.imag()};
        for (const auto& d : devices) {
            if (const auto* c = std::get_if<Capacitor>(&d)) {
                const auto k = cap_q[next_cap++];
                prob.lower[k] = 0.0;
                prob.upper[k] = c->q_cap;
                rq.terms.push_back({k, -1.0});
            } else if (const auto* pv = std::get_if<Photovoltaic>(&d)) {
                const auto kp = pv_p[next_pv];
                const auto kq = pv_q[next_pv];
                ++next_pv;
                prob.lower[kp] = 0.0;
                rp.terms.push_back({kp, -1.0});
                rq.terms.push_back({kq, -1.0});
                prob.norm_cones.push_back({AffineExpr::constant_value(pv->s_nameplate),
                                           {AffineExpr::variable(kp), AffineExpr::variable(kq)}});
            }
        }
        prob.equalities.push_back(std::move(rp));
        prob.equalities.push_back(std::move(rq));
    }

    // voltage bounds
    for (std::size_t i = 1; i < count; ++i) prob.lower[bus(v, i)] = net.vmin(i);
    if (variant.kind == Variant::Kind::SocpM) {
        for (const auto& row : svolt_rows(net)) {
            LinearRow r;
            for (std::size_t j = 1; j < count; ++j) {
                if (row.coef_p[j] != 0.0) r.terms.push_back({bus(p, j), row.coef_p[j]});
                if (row.coef_q[j] != 0.0) r.terms.push_back({bus(q, j), row.coef_q[j]});
            }
            r.rhs = row.rhs - row.constant;
            prob.inequalities.push_back(std::move(r));
        }
    } else {
        const double eps = variant.kind == Variant::Kind::OpfEps ? variant.eps : 0.0;
        for (std::size_t i = 1; i < count; ++i) {
            prob.inequalities.push_back(LinearRow{{{bus(v, i), 1.0}}, net.vmax(i) - eps});
        }
    }

    // v_i ell_i >= P_i^2 + Q_i^2
    for (std::size_t i = 1; i < count; ++i) {
        prob.rotated_cones.push_back({AffineExpr::variable(bus(v, i)), AffineExpr::variable(bus(ell, i)),
                                      {AffineExpr::variable(bus(P, i)), AffineExpr::variable(bus(Q, i))}});
    }
    return prob;
}

/// Reads the branch flow variables out of a solver primal vector.
[[nodiscard]] inline FlowState extract_state(const RadialNetwork& net, const socp::ConicProblem& prob,
                                             const std::vector<double>& x) {
    FlowState st = FlowState::zero(net);
    if (x.size() != prob.variable_count()) return st;
    const auto& L = prob.layout;
    const auto p = L.at("p"), q = L.at("q"), P = L.at("P"), Q = L.at("Q"), v = L.at("v"), ell = L.at("ell");
    for (std::size_t i = 1; i < net.bus_count(); ++i) {
        st.s[i] = {x[p[i - 1]], x[q[i - 1]]};
        st.S[i] = {x[P[i - 1]], x[Q[i - 1]]};
        st.v[i] = x[v[i - 1]];
        st.ell[i] = x[ell[i - 1]];
    }
    st.v[0] = net.v0();
    st.s0 = {x[L.at("p0")[0]], x[L.at("q0")[0]]};
    return st;
}

struct OpfResult {
    FlowState state;
    socp::ConicSolution solution;
    /// Present when the solver reached Optimal.
    std::optional<ExactnessReport> exactness;
};

[[nodiscard]] inline OpfResult solve_opf(const RadialNetwork& net, const DevicePortfolio& portfolio,
                                         const Objective& objective, const Variant& variant,
                                         const socp::SolverOptions& options = {}, double exactness_tol = 1e-6) {
    const auto prob = build_problem(net, portfolio, objective, variant);
    OpfResult out;
    out.solution = socp::solve(prob, options);
    out.state = extract_state(net, prob, out.solution.x);
    if (out.solution.status == socp::SolveStatus::Optimal) out.exactness = verify(net, out.state, exactness_tol);
    return out;
}

}  // namespace distflow
