#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "distflow/devices.hpp"
#include "distflow/error.hpp"
#include "distflow/lindistflow.hpp"
#include "distflow/network.hpp"

namespace distflow {

/// The 2x2 gain matrix of a line together with its impedance vector u = (r, x).
struct LineGainMatrix {
    Eigen::Matrix2d A;
    Eigen::Vector2d u;
};

/// Location of the most negative product vector found by check_c1.
/// `s` and `t` index the leaf path from the root side: l_0 = 0, l_{n_l} = leaf.
struct C1Witness {
    BusId leaf;
    std::size_t s = 0;
    std::size_t t = 0;
    Eigen::Vector2d product = Eigen::Vector2d::Zero();
};

struct C1Report {
    bool holds = true;
    std::size_t tested_pairs = 0;
    std::optional<C1Witness> witness;
    double min_entry = std::numeric_limits<double>::infinity();
};

enum class MarginKind { Finite, Infinite, AboveCap };

struct MarginResult {
    MarginKind kind = MarginKind::Finite;
    double eta_star = 0.0;
    double bracket_width = 0.0;
    double cap = 0.0;
    std::size_t evaluations = 0;
};

/// Flags for the five sufficient conditions, in order (i) to (v).
struct SufficientConditions {
    bool i = false;
    bool ii = false;
    bool iii = false;
    bool iv = false;
    bool v = false;

    [[nodiscard]] bool any() const noexcept { return i || ii || iii || iv || v; }
};

/// Linearized bound flows P_hat(p_up) and Q_hat(q_up), indexed by child bus.
struct BoundFlows {
    std::vector<double> P;
    std::vector<double> Q;
};

[[nodiscard]] inline BoundFlows bound_flows(const RadialNetwork& net, const InjectionBounds& bounds) {
    const auto s = bounds.as_complex();
    const auto S = hat_S(net, s);
    BoundFlows out{std::vector<double>(S.size()), std::vector<double>(S.size())};
    for (std::size_t i = 0; i < S.size(); ++i) {
        out.P[i] = S[i].real();
        out.Q[i] = S[i].imag();
    }
    return out;
}

[[nodiscard]] inline LineGainMatrix underline_A(const RadialNetwork& net, const BoundFlows& flows, std::size_t bus) {
    if (bus == 0 || bus >= net.bus_count()) throw Error(Errc::InvalidBus, "no line leaves bus " + std::to_string(bus));
    LineGainMatrix g;
    g.u = Eigen::Vector2d(net.r(bus), net.x(bus));
    const Eigen::RowVector2d flow(std::max(flows.P[bus], 0.0), std::max(flows.Q[bus], 0.0));
    g.A = Eigen::Matrix2d::Identity() - (2.0 / net.vmin(bus)) * g.u * flow;
    return g;
}

[[nodiscard]] inline LineGainMatrix underline_A(const RadialNetwork& net, const InjectionBounds& bounds, std::size_t bus) {
    return underline_A(net, bound_flows(net, bounds), bus);
}

[[nodiscard]] inline C1Report check_c1(const RadialNetwork& net, const BoundFlows& flows) {
    std::vector<LineGainMatrix> gains(net.bus_count());
    for (std::size_t i = 1; i < net.bus_count(); ++i) gains[i] = underline_A(net, flows, i);

    C1Report report;
    for (auto leaf : net.leaves()) {
        const auto path = net.path(leaf);
        const std::size_t n = path.size();
        // path[n - k] is l_k
        for (std::size_t t = 1; t <= n; ++t) {
            const auto& ut = gains[path[n - t]].u;
            const double threshold = 1e-12 * std::max(1.0, ut.norm());
            Eigen::Vector2d w = ut;
            for (std::size_t s = t;; --s) {
                if (s < t) w = gains[path[n - s]].A * w;
                ++report.tested_pairs;
                const double entry = w.minCoeff();
                const bool pass = entry > threshold;
                if (entry < report.min_entry) report.min_entry = entry;
                if (!pass) {
                    report.holds = false;
                    if (!report.witness || entry < report.witness->product.minCoeff()) {
                        report.witness = C1Witness{BusId{leaf}, s, t, w};
                    }
                }
                if (s == 1) break;
            }
        }
    }
    return report;
}

[[nodiscard]] inline C1Report check_c1(const RadialNetwork& net, const InjectionBounds& bounds) {
    return check_c1(net, bound_flows(net, bounds));
}

/// Largest eta for which C1 holds under injection_bounds(portfolio, eta).
/// Bisection relies on C1 being monotone in the bounds.
[[nodiscard]] inline MarginResult c1_margin(const RadialNetwork& net, const DevicePortfolio& portfolio,
                                            double tol = 1e-4, double cap = 1e4) {
    if (!(tol > 0.0)) throw Error(Errc::NonpositiveTolerance, "margin tolerance must be positive");
    if (!(cap >= 1.0)) throw Error(Errc::InvalidArgument, "margin cap must be at least 1");
    MarginResult result;
    result.cap = cap;
    if (portfolio.total_pv() == 0.0 && portfolio.total_capacitor() == 0.0) {
        result.kind = MarginKind::Infinite;
        result.eta_star = std::numeric_limits<double>::infinity();
        return result;
    }
    auto holds = [&](double eta) {
        ++result.evaluations;
        return check_c1(net, injection_bounds(portfolio, eta)).holds;
    };
    if (holds(cap)) {
        result.kind = MarginKind::AboveCap;
        result.eta_star = cap;
        return result;
    }
    double lo = 0.0;
    double hi = cap;
    if (!holds(0.0)) {
        return result;
    }
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (holds(mid) ? lo : hi) = mid;
    }
    result.eta_star = 0.5 * (lo + hi);
    result.bracket_width = 0.5 * (hi - lo);
    return result;
}

namespace detail {

inline bool ratio_relation(double lhs, double rhs, int direction) {
    const double slack = 1e-12 * std::max(std::abs(lhs), std::abs(rhs));
    if (direction == 0) return std::abs(lhs - rhs) <= slack;
    if (direction > 0) return lhs >= rhs - slack;
    return lhs <= rhs + slack;
}

}  // namespace detail

[[nodiscard]] inline SufficientConditions check_sufficient_conditions(const RadialNetwork& net,
                                                                      const InjectionBounds& bounds) {
    const auto flows = bound_flows(net, bounds);
    const std::size_t count = net.bus_count();
    auto pos = [](double a) { return std::max(a, 0.0); };

    // ratio comparisons over adjacent line pairs (i, j), (j, k)
    bool ratio_eq = true, ratio_ge = true, ratio_le = true;
    for (std::size_t i = 1; i < count; ++i) {
        const auto j = net.parent(i);
        if (j == 0) continue;
        const double child = net.r(i) / net.x(i);
        const double parent = net.r(j) / net.x(j);
        ratio_eq = ratio_eq && detail::ratio_relation(child, parent, 0);
        ratio_ge = ratio_ge && detail::ratio_relation(child, parent, 1);
        ratio_le = ratio_le && detail::ratio_relation(child, parent, -1);
    }

    SufficientConditions c;
    c.i = true;
    bool ii_rest = true, iii_rest = true, iv_rest = true;
    for (std::size_t i = 1; i < count; ++i) {
        if (net.is_leaf(i)) continue;
        const double P = flows.P[i], Q = flows.Q[i];
        const double vmin = net.vmin(i), r = net.r(i), x = net.x(i);
        c.i = c.i && P <= 0.0 && Q <= 0.0;
        ii_rest = ii_rest && (vmin - 2.0 * r * pos(P) - 2.0 * x * pos(Q) > 0.0);
        iii_rest = iii_rest && P <= 0.0 && (vmin - 2.0 * x * pos(Q) > 0.0);
        iv_rest = iv_rest && Q <= 0.0 && (vmin - 2.0 * r * pos(P) > 0.0);
    }
    c.ii = ratio_eq && ii_rest;
    c.iii = ratio_ge && iii_rest;
    c.iv = ratio_le && iv_rest;

    c.v = true;
    for (std::size_t i = 1; i < count && c.v; ++i) {
        const auto j = net.parent(i);
        double prod_p = 1.0, prod_q = 1.0, sum_rq = 0.0, sum_xp = 0.0;
        if (j != 0) {
            for (auto k : net.path(j)) {
                const double vk = net.vmin(k);
                prod_p *= 1.0 - 2.0 * net.r(k) * pos(flows.P[k]) / vk;
                prod_q *= 1.0 - 2.0 * net.x(k) * pos(flows.Q[k]) / vk;
                sum_rq += 2.0 * net.r(k) * pos(flows.Q[k]) / vk;
                sum_xp += 2.0 * net.x(k) * pos(flows.P[k]) / vk;
            }
        }
        const double e0 = prod_p * net.r(i) - sum_rq * net.x(i);
        const double e1 = -sum_xp * net.r(i) + prod_q * net.x(i);
        c.v = e0 > 0.0 && e1 > 0.0;
    }
    return c;
}

}  // namespace distflow
