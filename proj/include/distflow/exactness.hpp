#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "distflow/error.hpp"
#include "distflow/network.hpp"
#include "distflow/objective.hpp"
#include "distflow/powerflow.hpp"

namespace distflow {

struct ExactnessReport {
    bool exact = true;
    double tolerance = 1e-6;
    /// (v_i ell_i - |S_i|^2) / max(1, |S_i|^2), indexed by child bus.
    std::vector<double> gaps;
    double max_gap = 0.0;  ///< largest |gap|
    BusId worst_line{};
    /// Per leaf (in leaves() order): the first line from the root side whose gap exceeds the tolerance.
    std::vector<std::optional<BusId>> first_violation;
};

[[nodiscard]] inline ExactnessReport verify(const RadialNetwork& net, const FlowState& st, double tol = 1e-6) {
    if (!(tol > 0.0)) throw Error(Errc::NonpositiveTolerance, "exactness tolerance must be positive");
    if (st.v.size() != net.bus_count() || st.ell.size() != net.bus_count() || st.S.size() != net.bus_count()) {
        throw Error(Errc::InvalidArgument, "flow state does not match network size");
    }
    ExactnessReport rep;
    rep.tolerance = tol;
    rep.gaps.assign(net.bus_count(), 0.0);
    for (std::size_t i = 1; i < net.bus_count(); ++i) {
        if (!(st.v[i] > 0.0)) throw Error(Errc::NonpositiveVoltage, "bus " + std::to_string(i));
        const double flow2 = std::norm(st.S[i]);
        rep.gaps[i] = (st.v[i] * st.ell[i] - flow2) / std::max(1.0, flow2);
        if (std::abs(rep.gaps[i]) > rep.max_gap) {
            rep.max_gap = std::abs(rep.gaps[i]);
            rep.worst_line = BusId{i};
        }
    }
    rep.exact = rep.max_gap <= tol;
    for (auto leaf : net.leaves()) {
        std::optional<BusId> first;
        const auto path = net.path(leaf);
        for (auto k = path.rbegin(); k != path.rend(); ++k) {
            if (std::abs(rep.gaps[*k]) > tol) {
                first = BusId{*k};
                break;
            }
        }
        rep.first_violation.push_back(first);
    }
    return rep;
}

/// Record of one run of the feasible-point construction.
///
/// `path` lists the buses l_1, ..., l_m from the root side. `delta_S[k]` is the
/// change of the flow on line (l_k, l_{k-1}) for k >= 1 and, for k = 0, the
/// change of -s0. `B[k - 1]` is I - (2 / v_k) u_k (mean P, mean Q) on line k.
struct ConstructionTrace {
    FlowState input;
    FlowState output;
    BusId leaf{};
    std::size_t m = 0;
    std::vector<std::size_t> path;
    std::vector<Complex> delta_S;
    std::vector<double> delta_v;
    double objective_before = 0.0;
    double objective_after = 0.0;
    std::vector<Eigen::Matrix2d> B;
};

struct ConstructOptions {
    double equality_tol = 1e-8;
};

[[nodiscard]] inline ConstructionTrace construct_point(const RadialNetwork& net, const FlowState& st,
                                                       const Objective& objective,
                                                       const ConstructOptions& options = {}) {
    const auto rep = verify(net, st, options.equality_tol);
    if (rep.exact) throw Error(Errc::NoViolation, "state already satisfies the current equality on every line");

    std::optional<std::size_t> chosen_leaf;
    std::vector<std::size_t> chosen_path;
    for (auto leaf : net.leaves()) {
        const auto path = net.path(leaf);
        std::vector<std::size_t> from_root(path.rbegin(), path.rend());
        for (std::size_t k = 0; k < from_root.size(); ++k) {
            const double g = rep.gaps[from_root[k]];
            if (g > options.equality_tol) {
                chosen_leaf = leaf;
                chosen_path.assign(from_root.begin(), from_root.begin() + static_cast<std::ptrdiff_t>(k + 1));
                break;
            }
            if (g < -options.equality_tol) break;
        }
        if (chosen_leaf) break;
    }
    if (!chosen_leaf) {
        throw Error(Errc::NoEligiblePath, "no leaf path has equality up to a strictly relaxed line");
    }

    ConstructionTrace tr;
    tr.input = st;
    tr.leaf = BusId{*chosen_leaf};
    tr.m = chosen_path.size();
    tr.path = chosen_path;
    FlowState w = st;
    auto z = [&](std::size_t i) { return Complex{net.r(i), net.x(i)}; };

    for (std::size_t k = tr.m; k >= 1; --k) {
        const auto lk = chosen_path[k - 1];
        w.ell[lk] = std::norm(w.S[lk]) / st.v[lk];
        const std::size_t up = k >= 2 ? chosen_path[k - 2] : 0;
        Complex sum{0.0, 0.0};
        for (auto h : net.children(up)) sum += w.S[h] - z(h) * w.ell[h];
        if (k >= 2) {
            w.S[up] = w.s[up] + sum;
        } else {
            w.s0 = -sum;
        }
    }
    for (auto i : net.order()) {
        if (i == 0) continue;
        const auto j = net.parent(i);
        const double r = net.r(i), x = net.x(i);
        w.v[i] = w.v[j] + 2.0 * (r * w.S[i].real() + x * w.S[i].imag()) - (r * r + x * x) * w.ell[i];
    }
    w.v[0] = net.v0();

    tr.delta_S.resize(tr.m);
    tr.delta_S[0] = -(w.s0 - st.s0);
    for (std::size_t k = 1; k < tr.m; ++k) {
        const auto lk = chosen_path[k - 1];
        tr.delta_S[k] = w.S[lk] - st.S[lk];
    }
    tr.delta_v.resize(net.bus_count());
    for (std::size_t i = 0; i < net.bus_count(); ++i) tr.delta_v[i] = w.v[i] - st.v[i];
    for (std::size_t k = 1; k <= tr.m; ++k) {
        const auto lk = chosen_path[k - 1];
        const Eigen::Vector2d u(net.r(lk), net.x(lk));
        const Eigen::RowVector2d mean(0.5 * (st.S[lk].real() + w.S[lk].real()), 0.5 * (st.S[lk].imag() + w.S[lk].imag()));
        tr.B.push_back(Eigen::Matrix2d::Identity() - (2.0 / st.v[lk]) * u * mean);
    }
    tr.objective_before = objective_value(st, objective);
    tr.objective_after = objective_value(w, objective);
    tr.output = std::move(w);
    return tr;
}

[[nodiscard]] inline ConstructionTrace construct_point(const RadialNetwork& net, const FlowState& st,
                                                       const ConstructOptions& options = {}) {
    return construct_point(net, st, Objective::losses(net), options);
}

/// Largest componentwise difference over s, S, v, ell and s0 (real and imaginary parts separately).
[[nodiscard]] inline double solution_distance(const FlowState& a, const FlowState& b) {
    if (a.s.size() != b.s.size() || a.S.size() != b.S.size() || a.v.size() != b.v.size() ||
        a.ell.size() != b.ell.size()) {
        throw Error(Errc::InvalidArgument, "states belong to different networks");
    }
    double d = 0.0;
    auto cplx = [&d](Complex x, Complex y) {
        d = std::max({d, std::abs(x.real() - y.real()), std::abs(x.imag() - y.imag())});
    };
    for (std::size_t i = 0; i < a.s.size(); ++i) cplx(a.s[i], b.s[i]);
    for (std::size_t i = 0; i < a.S.size(); ++i) cplx(a.S[i], b.S[i]);
    for (std::size_t i = 0; i < a.v.size(); ++i) d = std::max(d, std::abs(a.v[i] - b.v[i]));
    for (std::size_t i = 0; i < a.ell.size(); ++i) d = std::max(d, std::abs(a.ell[i] - b.ell[i]));
    cplx(a.s0, b.s0);
    return d;
}

}  // namespace distflow
