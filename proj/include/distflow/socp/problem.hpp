#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "distflow/error.hpp"

namespace distflow::socp {

inline constexpr double inf = std::numeric_limits<double>::infinity();

struct Term {
    std::size_t var = 0;
    double coef = 0.0;
};

/// sum coef * x[var] + constant
struct AffineExpr {
    std::vector<Term> terms;
    double constant = 0.0;

    [[nodiscard]] static AffineExpr variable(std::size_t var, double coef = 1.0) { return {{{var, coef}}, 0.0}; }
    [[nodiscard]] static AffineExpr constant_value(double c) { return {{}, c}; }

    template <class Vec>
    [[nodiscard]] double evaluate(const Vec& x) const {
        double value = constant;
        for (const auto& t : terms) value += t.coef * x[t.var];
        return value;
    }
};

/// terms . x = rhs (equality) or terms . x <= rhs (inequality).
struct LinearRow {
    std::vector<Term> terms;
    double rhs = 0.0;

    template <class Vec>
    [[nodiscard]] double evaluate(const Vec& x) const {
        double value = 0.0;
        for (const auto& t : terms) value += t.coef * x[t.var];
        return value;
    }
};

/// a * b >= sum_k rest_k^2 with a, b >= 0.
struct RotatedCone {
    AffineExpr a;
    AffineExpr b;
    std::vector<AffineExpr> rest;
};

/// ||rest|| <= t.
struct NormCone {
    AffineExpr t;
    std::vector<AffineExpr> rest;
};

struct Slice {
    std::string name;
    std::size_t offset = 0;
    std::size_t size = 0;

    [[nodiscard]] std::size_t operator[](std::size_t k) const {
        if (k >= size) throw Error(Errc::InvalidArgument, "index out of slice " + name);
        return offset + k;
    }
};

/// Named contiguous blocks of the variable vector, in creation order.
class VariableLayout {
public:
    Slice add(std::string name, std::size_t size) {
        Slice s{std::move(name), total_, size};
        total_ += size;
        slices_.push_back(s);
        return s;
    }

    [[nodiscard]] std::optional<Slice> find(const std::string& name) const {
        for (const auto& s : slices_) {
            if (s.name == name) return s;
        }
        return std::nullopt;
    }

    [[nodiscard]] Slice at(const std::string& name) const {
        auto s = find(name);
        if (!s) throw Error(Errc::InvalidArgument, "no variable slice named " + name);
        return *s;
    }

    [[nodiscard]] std::size_t total() const noexcept { return total_; }
    [[nodiscard]] const std::vector<Slice>& slices() const noexcept { return slices_; }

private:
    std::vector<Slice> slices_;
    std::size_t total_ = 0;
};

/// minimize objective . x + objective_constant
/// subject to equalities, inequalities, lower <= x <= upper and the cones.
struct ConicProblem {
    VariableLayout layout;
    std::vector<double> objective;
    double objective_constant = 0.0;
    std::vector<LinearRow> equalities;
    std::vector<LinearRow> inequalities;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<RotatedCone> rotated_cones;
    std::vector<NormCone> norm_cones;

    [[nodiscard]] std::size_t variable_count() const noexcept { return layout.total(); }

    /// Grows objective and bound vectors to the layout size.
    void resize_to_layout() {
        const auto n = layout.total();
        objective.resize(n, 0.0);
        lower.resize(n, -inf);
        upper.resize(n, inf);
    }
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, SlowProgress };

[[nodiscard]] constexpr const char* to_string(SolveStatus s) noexcept {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::Unbounded: return "unbounded";
        case SolveStatus::SlowProgress: return "slow_progress";
    }
    return "unknown";
}

struct SolverOptions {
    double tol = 1e-8;
    int max_iter = 200;
    double step_fraction = 0.99;
    /// Multiplier on the unit shift used to push the starting point into the cone interior.
    double initial_shift = 1.0;
    bool equilibrate = true;
    int ruiz_passes = 15;
    double regularization = 1e-9;
    /// Extra iterations taken after the tolerance is first met; the best iterate seen is returned.
    int polish_iterations = 8;
};

struct SolverResiduals {
    double primal = 0.0;           ///< relative primal infeasibility
    double dual = 0.0;             ///< relative dual infeasibility
    double gap = 0.0;              ///< relative duality gap
    double complementarity = 0.0;  ///< s . z
    double duality_gap = 0.0;      ///< primal objective minus dual objective
};

struct ConicSolution {
    SolveStatus status = SolveStatus::SlowProgress;
    std::vector<double> x;
    std::vector<double> eq_duals;
    std::vector<double> ineq_duals;
    SolverResiduals residuals;
    double objective = 0.0;
    int iterations = 0;
};

}  // namespace distflow::socp
