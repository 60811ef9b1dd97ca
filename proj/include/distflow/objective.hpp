#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "distflow/error.hpp"
#include "distflow/network.hpp"
#include "distflow/powerflow.hpp"

namespace distflow {

struct LinearCost {
    double slope = 1.0;
};

/// a x^2 + b x with a >= 0.
struct QuadraticCost {
    double a = 0.0;
    double b = 0.0;
};

using CostFunction = std::variant<LinearCost, QuadraticCost>;

[[nodiscard]] inline double evaluate_cost(const CostFunction& f, double x) {
    if (const auto* l = std::get_if<LinearCost>(&f)) return l->slope * x;
    const auto& q = std::get<QuadraticCost>(f);
    return q.a * x * x + q.b * x;
}

/// Per-bus costs applied to real injections; entry 0 is the substation cost.
struct Objective {
    std::vector<CostFunction> costs;

    /// Every bus priced at slope 1: the objective equals total line losses.
    [[nodiscard]] static Objective losses(const RadialNetwork& net) {
        return Objective{std::vector<CostFunction>(net.bus_count(), LinearCost{1.0})};
    }

    void validate(std::size_t bus_count) const {
        if (costs.size() != bus_count) throw Error(Errc::InvalidArgument, "objective needs one cost per bus");
        for (const auto& f : costs) {
            if (const auto* q = std::get_if<QuadraticCost>(&f); q && q->a < 0.0) {
                throw Error(Errc::InvalidArgument, "quadratic costs must be convex");
            }
        }
        const auto& f0 = costs[0];
        const bool increasing = std::holds_alternative<LinearCost>(f0)
                                    ? std::get<LinearCost>(f0).slope > 0.0
                                    : std::get<QuadraticCost>(f0).a > 0.0 || std::get<QuadraticCost>(f0).b > 0.0;
        if (!increasing) throw Error(Errc::InvalidArgument, "substation cost must be strictly increasing");
    }
};

[[nodiscard]] inline double objective_value(const FlowState& st, const Objective& obj) {
    if (obj.costs.size() != st.s.size()) throw Error(Errc::InvalidArgument, "objective does not match state size");
    double total = evaluate_cost(obj.costs[0], st.s0.real());
    for (std::size_t i = 1; i < st.s.size(); ++i) total += evaluate_cost(obj.costs[i], st.s[i].real());
    return total;
}

}  // namespace distflow
