#pragma once

#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "distflow/devices.hpp"
#include "distflow/error.hpp"
#include "distflow/network.hpp"

namespace distflow {

/// Lossless linearized flows: per-line S_hat (indexed by child bus) and per-bus v_hat.
struct LinearFlowSolution {
    std::vector<Complex> S_hat;
    std::vector<double> v_hat;
};

struct SvoltVerdict {
    bool inside = true;
    BusId worst_bus{};
    double slack = std::numeric_limits<double>::infinity();
};

/// One row of v_hat_i(s) <= vmax_i written as coef_p . p + coef_q . q + constant <= rhs.
/// Coefficient vectors are indexed by bus; entry 0 is zero.
struct SvoltRow {
    BusId bus;
    std::vector<double> coef_p;
    std::vector<double> coef_q;
    double constant = 0.0;
    double rhs = 0.0;

    [[nodiscard]] double evaluate(std::span<const Complex> s) const {
        double value = constant;
        for (std::size_t j = 1; j < s.size(); ++j) value += coef_p[j] * s[j].real() + coef_q[j] * s[j].imag();
        return value;
    }
};

namespace detail {

inline void require_bus_vector(const RadialNetwork& net, std::size_t size) {
    if (size != net.bus_count()) throw Error(Errc::InvalidArgument, "injection vector must have one entry per bus");
}

}  // namespace detail

/// Subtree sums of s: S_hat_i is the total injection downstream of (and at) bus i.
[[nodiscard]] inline std::vector<Complex> hat_S(const RadialNetwork& net, std::span<const Complex> s) {
    detail::require_bus_vector(net, s.size());
    std::vector<Complex> S(net.bus_count(), Complex{});
    const auto order = net.order();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const auto i = *it;
        if (i == 0) continue;
        S[i] += s[i];
        const auto up = net.parent(i);
        if (up != 0) S[up] += S[i];
    }
    return S;
}

[[nodiscard]] inline std::vector<double> hat_v_from_flows(const RadialNetwork& net, std::span<const Complex> S_hat) {
    std::vector<double> v(net.bus_count(), net.v0());
    for (auto i : net.order()) {
        if (i == 0) continue;
        v[i] = v[net.parent(i)] + 2.0 * (net.r(i) * S_hat[i].real() + net.x(i) * S_hat[i].imag());
    }
    return v;
}

[[nodiscard]] inline std::vector<double> hat_v(const RadialNetwork& net, std::span<const Complex> s) {
    const auto S = hat_S(net, s);
    return hat_v_from_flows(net, S);
}

[[nodiscard]] inline LinearFlowSolution linear_flow(const RadialNetwork& net, std::span<const Complex> s) {
    LinearFlowSolution out;
    out.S_hat = hat_S(net, s);
    out.v_hat = hat_v_from_flows(net, out.S_hat);
    return out;
}

[[nodiscard]] inline SvoltVerdict in_svolt(const RadialNetwork& net, std::span<const Complex> s) {
    const auto v = hat_v(net, s);
    SvoltVerdict verdict;
    for (std::size_t i = 1; i < net.bus_count(); ++i) {
        const double slack = net.vmax(i) - v[i];
        if (slack < verdict.slack) {
            verdict.slack = slack;
            verdict.worst_bus = BusId{i};
        }
    }
    verdict.inside = verdict.slack >= 0.0;
    return verdict;
}

/// Affine rows of v_hat(s) <= vmax, one per non-root bus.
/// The coefficient of p_j in row i is twice the resistance shared by the two
/// root paths, which is the cumulative resistance down to their common ancestor.
[[nodiscard]] inline std::vector<SvoltRow> svolt_rows(const RadialNetwork& net) {
    const std::size_t count = net.bus_count();
    std::vector<double> cum_r(count, 0.0), cum_x(count, 0.0);
    std::vector<std::size_t> level(count, 0);
    for (auto i : net.order()) {
        if (i == 0) continue;
        const auto up = net.parent(i);
        cum_r[i] = cum_r[up] + net.r(i);
        cum_x[i] = cum_x[up] + net.x(i);
        level[i] = level[up] + 1;
    }
    auto common_ancestor = [&](std::size_t a, std::size_t b) {
        while (level[a] > level[b]) a = net.parent(a);
        while (level[b] > level[a]) b = net.parent(b);
        while (a != b) {
            a = net.parent(a);
            b = net.parent(b);
        }
        return a;
    };
    std::vector<SvoltRow> rows;
    rows.reserve(count - 1);
    for (std::size_t i = 1; i < count; ++i) {
        SvoltRow row{BusId{i}, std::vector<double>(count, 0.0), std::vector<double>(count, 0.0), net.v0(),
                     net.vmax(i)};
        for (std::size_t j = 1; j < count; ++j) {
            const auto a = common_ancestor(i, j);
            row.coef_p[j] = 2.0 * cum_r[a];
            row.coef_q[j] = 2.0 * cum_x[a];
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace distflow
