#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "distflow/devices.hpp"
#include "distflow/error.hpp"
#include "distflow/network.hpp"

namespace distflow {

/// One point of the branch flow variables.
/// s, v are per bus (v[0] = v0, s[0] unused); S, ell are per line indexed by child bus.
struct FlowState {
    std::vector<Complex> s;
    std::vector<Complex> S;
    std::vector<double> v;
    std::vector<double> ell;
    Complex s0{0.0, 0.0};

    [[nodiscard]] static FlowState zero(const RadialNetwork& net) {
        const auto n = net.bus_count();
        FlowState st{std::vector<Complex>(n), std::vector<Complex>(n), std::vector<double>(n, net.v0()),
                     std::vector<double>(n, 0.0), Complex{}};
        return st;
    }
};

struct SweepOptions {
    double tol = 1e-10;
    int max_iter = 200;
};

/// Largest absolute residual of each equation family.
struct ResidualReport {
    double flow = 0.0;        ///< S_i = s_i + sum over children (S_h - z_h ell_h)
    double substation = 0.0;  ///< 0 = s0 + sum over root children (S_h - z_h ell_h)
    double voltage = 0.0;     ///< v_i - v_j = 2 Re(conj(z) S) - |z|^2 ell
    double current = 0.0;     ///< v_i ell_i = |S_i|^2, multiplied form
    double overall = 0.0;
};

namespace detail {

inline Complex impedance(const RadialNetwork& net, std::size_t i) { return {net.r(i), net.x(i)}; }

inline void check_state_shape(const RadialNetwork& net, const FlowState& st) {
    const auto n = net.bus_count();
    if (st.s.size() != n || st.S.size() != n || st.v.size() != n || st.ell.size() != n) {
        throw Error(Errc::InvalidArgument, "flow state does not match network size");
    }
}

}  // namespace detail

[[nodiscard]] inline ResidualReport residuals(const RadialNetwork& net, const FlowState& st) {
    detail::check_state_shape(net, st);
    ResidualReport rep;
    const auto n = net.bus_count();
    std::vector<Complex> downstream(n, Complex{});
    for (std::size_t i = 1; i < n; ++i) {
        downstream[net.parent(i)] += st.S[i] - detail::impedance(net, i) * st.ell[i];
    }
    for (std::size_t i = 1; i < n; ++i) {
        const auto j = net.parent(i);
        const double r = net.r(i), x = net.x(i);
        rep.flow = std::max(rep.flow, std::abs(st.S[i] - st.s[i] - downstream[i]));
        const double vj = j == 0 ? net.v0() : st.v[j];
        const double dv = st.v[i] - vj - 2.0 * (r * st.S[i].real() + x * st.S[i].imag()) + (r * r + x * x) * st.ell[i];
        rep.voltage = std::max(rep.voltage, std::abs(dv));
        rep.current = std::max(rep.current, std::abs(st.v[i] * st.ell[i] - std::norm(st.S[i])));
    }
    rep.substation = std::abs(st.s0 + downstream[0]);
    rep.overall = std::max({rep.flow, rep.substation, rep.voltage, rep.current});
    return rep;
}

/// Forward-backward sweep for the branch flow equations at fixed injections.
///
/// `excess` (optional, per line) is added to every current: ell_i = |S_i|^2 / v_i + excess_i.
/// A nonzero excess yields a point that satisfies the linear equations and the
/// relaxed current inequality but not the equality.
[[nodiscard]] inline FlowState sweep_solve(const RadialNetwork& net, std::span<const Complex> s,
                                           const SweepOptions& options = {}, std::span<const double> excess = {}) {
    if (!(options.tol > 0.0)) throw Error(Errc::NonpositiveTolerance, "sweep tolerance must be positive");
    if (options.max_iter < 1) throw Error(Errc::InvalidArgument, "max_iter must be at least 1");
    const auto n = net.bus_count();
    if (s.size() != n) throw Error(Errc::InvalidArgument, "injection vector must have one entry per bus");
    if (!excess.empty() && excess.size() != n) throw Error(Errc::InvalidArgument, "excess vector must have one entry per bus");

    FlowState st = FlowState::zero(net);
    st.s.assign(s.begin(), s.end());
    st.s[0] = Complex{};
    const auto order = net.order();
    std::vector<Complex> downstream(n);
    double residual = 0.0;

    for (int iter = 1; iter <= options.max_iter; ++iter) {
        std::fill(downstream.begin(), downstream.end(), Complex{});
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            const auto i = *it;
            if (i == 0) continue;
            st.S[i] = st.s[i] + downstream[i];
            st.ell[i] = std::norm(st.S[i]) / st.v[i] + (excess.empty() ? 0.0 : excess[i]);
            downstream[net.parent(i)] += st.S[i] - detail::impedance(net, i) * st.ell[i];
        }
        st.s0 = -downstream[0];
        residual = 0.0;
        for (auto i : order) {
            if (i == 0) continue;
            const double r = net.r(i), x = net.x(i);
            const double updated = st.v[net.parent(i)] + 2.0 * (r * st.S[i].real() + x * st.S[i].imag()) -
                                   (r * r + x * x) * st.ell[i];
            const double extra = excess.empty() ? 0.0 : excess[i];
            residual = std::max(residual, std::abs(updated * (st.ell[i] - extra) - std::norm(st.S[i])));
            st.v[i] = updated;
            if (!std::isfinite(updated) || updated <= net.vmin(i) / 10.0) {
                throw NotConvergedError(iter, residual, "voltage collapse at bus " + std::to_string(i));
            }
        }
        if (residual <= options.tol) return st;
    }
    throw NotConvergedError(options.max_iter, residual, "sweep did not reach tolerance");
}

/// Sum of r_ij * ell_ij over all lines.
[[nodiscard]] inline double line_losses(const RadialNetwork& net, const FlowState& st) {
    double total = 0.0;
    for (std::size_t i = 1; i < net.bus_count(); ++i) total += net.r(i) * st.ell[i];
    return total;
}

}  // namespace distflow
