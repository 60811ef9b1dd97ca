#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "distflow/error.hpp"
#include "distflow/socp/cone.hpp"
#include "distflow/socp/problem.hpp"

namespace distflow::socp {

namespace detail {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;
using Vec = Eigen::VectorXd;

/// min c'x  s.t.  A x = b,  G x + s = h,  s in cones.
struct StandardForm {
    SpMat A;
    SpMat G;
    Vec b;
    Vec h;
    Vec c;
    ConeSet cones;
    std::size_t user_equalities = 0;
    std::size_t user_inequalities = 0;
    bool trivially_infeasible = false;
};

inline bool finite_terms(const std::vector<Term>& terms, std::size_t n) {
    return std::all_of(terms.begin(), terms.end(),
                       [n](const Term& t) { return t.var < n && std::isfinite(t.coef); });
}

inline void validate(const ConicProblem& p) {
    const auto n = p.variable_count();
    if (p.objective.size() != n || p.lower.size() != n || p.upper.size() != n) {
        throw Error(Errc::InvalidArgument, "objective and bound vectors must match the variable layout");
    }
    auto bad = [&](const char* what) { throw Error(Errc::NumericalBreakdown, std::string("non-finite data in ") + what); };
    if (!std::isfinite(p.objective_constant)) bad("objective");
    for (double v : p.objective) if (!std::isfinite(v)) bad("objective");
    for (double v : p.lower) if (std::isnan(v) || v == inf) bad("lower bounds");
    for (double v : p.upper) if (std::isnan(v) || v == -inf) bad("upper bounds");
    for (const auto& rows : {&p.equalities, &p.inequalities}) {
        for (const auto& r : *rows) {
            if (!finite_terms(r.terms, n) || !std::isfinite(r.rhs)) bad("linear rows");
        }
    }
    auto check_expr = [&](const AffineExpr& e) {
        if (!finite_terms(e.terms, n) || !std::isfinite(e.constant)) bad("cone expressions");
    };
    for (const auto& k : p.rotated_cones) {
        check_expr(k.a);
        check_expr(k.b);
        for (const auto& e : k.rest) check_expr(e);
    }
    for (const auto& k : p.norm_cones) {
        check_expr(k.t);
        for (const auto& e : k.rest) check_expr(e);
    }
}

inline StandardForm lower_problem(const ConicProblem& p) {
    const auto n = p.variable_count();
    StandardForm sf;
    std::vector<Triplet> at, gt;
    std::vector<double> b, h;

    for (const auto& row : p.equalities) {
        for (const auto& t : row.terms) at.emplace_back(static_cast<int>(b.size()), static_cast<int>(t.var), t.coef);
        b.push_back(row.rhs);
    }
    sf.user_equalities = b.size();
    for (std::size_t j = 0; j < n; ++j) {
        if (p.lower[j] > p.upper[j]) sf.trivially_infeasible = true;
        if (p.lower[j] == p.upper[j]) {
            at.emplace_back(static_cast<int>(b.size()), static_cast<int>(j), 1.0);
            b.push_back(p.lower[j]);
        }
    }

    for (const auto& row : p.inequalities) {
        for (const auto& t : row.terms) gt.emplace_back(static_cast<int>(h.size()), static_cast<int>(t.var), t.coef);
        h.push_back(row.rhs);
    }
    sf.user_inequalities = h.size();
    for (std::size_t j = 0; j < n; ++j) {
        if (p.lower[j] == p.upper[j]) continue;
        if (std::isfinite(p.lower[j])) {
            gt.emplace_back(static_cast<int>(h.size()), static_cast<int>(j), -1.0);
            h.push_back(-p.lower[j]);
        }
        if (std::isfinite(p.upper[j])) {
            gt.emplace_back(static_cast<int>(h.size()), static_cast<int>(j), 1.0);
            h.push_back(p.upper[j]);
        }
    }
    const std::size_t orthant = h.size();

    // cone slack s = e(x) becomes the row -g with right-hand side equal to the constant
    auto push_expr = [&](const AffineExpr& e, double scale) {
        for (const auto& t : e.terms) gt.emplace_back(static_cast<int>(h.size()), static_cast<int>(t.var), -scale * t.coef);
        h.push_back(scale * e.constant);
    };
    auto push_sum = [&](const AffineExpr& a, double sa, const AffineExpr& b2, double sb) {
        for (const auto& t : a.terms) gt.emplace_back(static_cast<int>(h.size()), static_cast<int>(t.var), -sa * t.coef);
        for (const auto& t : b2.terms) gt.emplace_back(static_cast<int>(h.size()), static_cast<int>(t.var), -sb * t.coef);
        h.push_back(sa * a.constant + sb * b2.constant);
    };
    std::vector<std::size_t> dims;
    for (const auto& k : p.rotated_cones) {
        // a b >= ||w||^2  <=>  ||(a - b, 2 w)|| <= a + b
        push_sum(k.a, 1.0, k.b, 1.0);
        push_sum(k.a, 1.0, k.b, -1.0);
        for (const auto& e : k.rest) push_expr(e, 2.0);
        dims.push_back(2 + k.rest.size());
    }
    for (const auto& k : p.norm_cones) {
        push_expr(k.t, 1.0);
        for (const auto& e : k.rest) push_expr(e, 1.0);
        dims.push_back(1 + k.rest.size());
    }

    sf.A.resize(static_cast<Eigen::Index>(b.size()), static_cast<Eigen::Index>(n));
    sf.A.setFromTriplets(at.begin(), at.end());
    sf.G.resize(static_cast<Eigen::Index>(h.size()), static_cast<Eigen::Index>(n));
    sf.G.setFromTriplets(gt.begin(), gt.end());
    sf.b = Eigen::Map<const Vec>(b.data(), static_cast<Eigen::Index>(b.size()));
    sf.h = Eigen::Map<const Vec>(h.data(), static_cast<Eigen::Index>(h.size()));
    sf.c = Eigen::Map<const Vec>(p.objective.data(), static_cast<Eigen::Index>(n));
    sf.cones = ConeSet(orthant, std::move(dims));
    return sf;
}

/// Ruiz equilibration factors: scaled A = diag(ea) A diag(d), G likewise with eg.
/// Rows of one second-order cone share a factor so the cone is preserved.
struct Equilibration {
    Vec d;
    Vec ea;
    Vec eg;
};

inline Equilibration equilibrate(StandardForm& sf, int passes) {
    const auto n = sf.A.cols();
    Equilibration eq{Vec::Ones(n), Vec::Ones(sf.A.rows()), Vec::Ones(sf.G.rows())};
    for (int pass = 0; pass < passes; ++pass) {
        Vec col = Vec::Zero(n), ra = Vec::Zero(sf.A.rows()), rg = Vec::Zero(sf.G.rows());
        for (Eigen::Index j = 0; j < n; ++j) {
            for (SpMat::InnerIterator it(sf.A, j); it; ++it) {
                const double a = std::abs(it.value());
                col[j] = std::max(col[j], a);
                ra[it.row()] = std::max(ra[it.row()], a);
            }
            for (SpMat::InnerIterator it(sf.G, j); it; ++it) {
                const double a = std::abs(it.value());
                col[j] = std::max(col[j], a);
                rg[it.row()] = std::max(rg[it.row()], a);
            }
        }
        for (std::size_t k = 0; k < sf.cones.soc_count(); ++k) {
            const auto o = static_cast<Eigen::Index>(sf.cones.soc_offset(k));
            const auto m = static_cast<Eigen::Index>(sf.cones.soc_dim(k));
            rg.segment(o, m).setConstant(rg.segment(o, m).maxCoeff());
        }
        auto factor = [](double v) { return v > 0.0 ? 1.0 / std::sqrt(v) : 1.0; };
        const Vec fc = col.unaryExpr(factor), fa = ra.unaryExpr(factor), fg = rg.unaryExpr(factor);
        sf.A = fa.asDiagonal() * sf.A * fc.asDiagonal();
        sf.G = fg.asDiagonal() * sf.G * fc.asDiagonal();
        eq.d = eq.d.cwiseProduct(fc);
        eq.ea = eq.ea.cwiseProduct(fa);
        eq.eg = eq.eg.cwiseProduct(fg);
    }
    sf.b = eq.ea.cwiseProduct(sf.b);
    sf.h = eq.eg.cwiseProduct(sf.h);
    sf.c = eq.d.cwiseProduct(sf.c);
    return eq;
}

/// Regularized quasi-definite KKT system in scaled form
/// [0 A' G'W^{-1}; A 0 0; W^{-1}G 0 -I], solved with iterative refinement
/// against the unregularized matrix. Callers work with the unscaled
/// [0 A' G'; A 0 0; G 0 -W^2] system; the change of variables is internal.
class KktSystem {
public:
    KktSystem(const StandardForm& sf, double delta) : sf_(&sf), delta_(delta) {
        n_ = sf.A.cols();
        p_ = sf.A.rows();
        m_ = sf.G.rows();
    }

    /// Factors the scaled matrix. A failed factorization is retried with a
    /// larger regularization; refinement in solve() removes the perturbation.
    bool factor(const NtScaling& w) {
        scaling_ = &w;
        gs_ = scaled_g(w);
        for (double delta = delta_; delta <= 1e-2; delta *= 100.0) {
            if (factor_with(delta)) return true;
        }
        return false;
    }

    /// Solves the unscaled system for (x, y, z).
    [[nodiscard]] Vec solve(const Vec& rhs) const {
        Vec r = rhs;
        r.tail(m_) = scaling_->apply(rhs.tail(m_), true);
        Vec sol = ldlt_.solve(r);
        const double scale = 1.0 + r.lpNorm<Eigen::Infinity>();
        double last = inf;
        for (int it = 0; it < 8; ++it) {
            const Vec res = r - multiply(sol);
            const double err = res.lpNorm<Eigen::Infinity>();
            if (err <= 1e-15 * scale || err >= 0.5 * last) break;
            last = err;
            sol += ldlt_.solve(res);
        }
        sol.tail(m_) = scaling_->apply(Vec(sol.tail(m_)), true);
        return sol;
    }

    [[nodiscard]] Eigen::Index n() const noexcept { return n_; }
    [[nodiscard]] Eigen::Index p() const noexcept { return p_; }
    [[nodiscard]] Eigen::Index m() const noexcept { return m_; }

private:
    bool factor_with(double delta) {
        std::vector<Triplet> t;
        t.reserve(static_cast<std::size_t>(sf_->A.nonZeros() + gs_.nonZeros() + n_ + p_ + m_));
        for (Eigen::Index j = 0; j < n_; ++j) t.emplace_back(j, j, delta);
        for (Eigen::Index j = 0; j < n_; ++j) {
            for (SpMat::InnerIterator it(sf_->A, j); it; ++it) t.emplace_back(n_ + it.row(), j, it.value());
            for (SpMat::InnerIterator it(gs_, j); it; ++it) t.emplace_back(n_ + p_ + it.row(), j, it.value());
        }
        for (Eigen::Index i = 0; i < p_; ++i) t.emplace_back(n_ + i, n_ + i, -delta);
        for (Eigen::Index i = 0; i < m_; ++i) t.emplace_back(n_ + p_ + i, n_ + p_ + i, -1.0 - delta);
        SpMat k(n_ + p_ + m_, n_ + p_ + m_);
        k.setFromTriplets(t.begin(), t.end());
        if (!analyzed_) {
            ldlt_.analyzePattern(k);
            analyzed_ = true;
        }
        ldlt_.factorize(k);
        if (ldlt_.info() != Eigen::Success) return false;
        const auto d = ldlt_.vectorD();
        // quasi-definite: n positive pivots followed by p + m negative ones under the fill-reducing permutation
        return d.allFinite() && (d.array() != 0.0).all();
    }

    /// W^{-1} G with a structure that does not depend on the scaling values:
    /// every row of a cone block receives the union of the block's row patterns.
    [[nodiscard]] SpMat scaled_g(const NtScaling& w) const {
        const auto& cones = sf_->cones;
        const SpMat gr = sf_->G;  // column major; walk columns
        std::vector<Triplet> t;
        t.reserve(static_cast<std::size_t>(gr.nonZeros()) * 4);
        // block id per row
        std::vector<Eigen::Index> block_start(static_cast<std::size_t>(m_)), block_size(static_cast<std::size_t>(m_));
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(cones.orthant()); ++i) {
            block_start[static_cast<std::size_t>(i)] = i;
            block_size[static_cast<std::size_t>(i)] = 1;
        }
        for (std::size_t k = 0; k < cones.soc_count(); ++k) {
            const auto o = static_cast<Eigen::Index>(cones.soc_offset(k));
            const auto d = static_cast<Eigen::Index>(cones.soc_dim(k));
            for (Eigen::Index i = 0; i < d; ++i) {
                block_start[static_cast<std::size_t>(o + i)] = o;
                block_size[static_cast<std::size_t>(o + i)] = d;
            }
        }
        Vec col(m_);
        for (Eigen::Index j = 0; j < n_; ++j) {
            col.setZero();
            std::vector<Eigen::Index> touched;
            for (SpMat::InnerIterator it(gr, j); it; ++it) {
                col[it.row()] = it.value();
                const auto b = block_start[static_cast<std::size_t>(it.row())];
                if (touched.empty() || touched.back() != b) touched.push_back(b);
            }
            std::sort(touched.begin(), touched.end());
            touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
            for (auto b : touched) {
                const auto d = block_size[static_cast<std::size_t>(b)];
                const Vec seg = col.segment(b, d);
                const Vec out = apply_block_inverse(w, b, seg);
                for (Eigen::Index i = 0; i < d; ++i) t.emplace_back(b + i, j, out[i]);
            }
        }
        SpMat g(m_, n_);
        g.setFromTriplets(t.begin(), t.end());
        return g;
    }

    [[nodiscard]] Vec apply_block_inverse(const NtScaling& w, Eigen::Index start, const Vec& seg) const {
        Vec full = Vec::Zero(m_);
        full.segment(start, seg.size()) = seg;
        // apply() works on whole vectors; blocks are independent so embedding is exact
        return w.apply(full, true).segment(start, seg.size());
    }

    [[nodiscard]] Vec multiply(const Vec& v) const {
        const Vec vx = v.head(n_), vy = v.segment(n_, p_), vz = v.tail(m_);
        Vec out(n_ + p_ + m_);
        out.head(n_) = sf_->A.transpose() * vy + gs_.transpose() * vz;
        out.segment(n_, p_) = sf_->A * vx;
        out.tail(m_) = gs_ * vx - vz;
        return out;
    }

    const StandardForm* sf_;
    const NtScaling* scaling_ = nullptr;
    double delta_;
    Eigen::Index n_ = 0, p_ = 0, m_ = 0;
    bool analyzed_ = false;
    SpMat gs_;
    Eigen::SimplicialLDLT<SpMat, Eigen::Lower> ldlt_;
};

struct Iterate {
    Vec x, y, z, s;
    double tau = 1.0;
    double kappa = 1.0;
};

struct Direction {
    Vec x, y, z, s;
    double tau = 0.0;
    double kappa = 0.0;
};

}  // namespace detail

/// Primal-dual interior-point solver on the homogeneous self-dual embedding
/// with Nesterov-Todd scaling and Mehrotra predictor-corrector steps.
[[nodiscard]] inline ConicSolution solve(const ConicProblem& problem, const SolverOptions& options = {}) {
    using detail::Vec;
    detail::validate(problem);
    if (!(options.tol > 0.0)) throw Error(Errc::NonpositiveTolerance, "solver tolerance must be positive");

    ConicSolution out;
    detail::StandardForm sf = detail::lower_problem(problem);
    if (sf.trivially_infeasible) {
        out.status = SolveStatus::Infeasible;
        return out;
    }
    const detail::SpMat A0 = sf.A, G0 = sf.G;
    const Vec b0 = sf.b, h0 = sf.h, c0 = sf.c;
    detail::Equilibration eq{Vec::Ones(sf.A.cols()), Vec::Ones(sf.A.rows()), Vec::Ones(sf.G.rows())};
    if (options.equilibrate) eq = detail::equilibrate(sf, options.ruiz_passes);

    const ConeSet& K = sf.cones;
    const Vec e = K.identity();
    const double degree = static_cast<double>(K.degree());
    const double norm_b = b0.size() ? b0.lpNorm<Eigen::Infinity>() : 0.0;
    const double norm_h = h0.size() ? h0.lpNorm<Eigen::Infinity>() : 0.0;
    const double norm_c = c0.size() ? c0.lpNorm<Eigen::Infinity>() : 0.0;

    detail::KktSystem kkt(sf, options.regularization);
    const auto n = kkt.n(), p = kkt.p(), m = kkt.m();
    auto stack = [&](const Vec& a, const Vec& b, const Vec& c) {
        Vec v(n + p + m);
        v << a, b, c;
        return v;
    };

    detail::Iterate it;
    {
        const NtScaling unit(K, e, e);
        if (!kkt.factor(unit)) {
            out.status = SolveStatus::SlowProgress;
            return out;
        }
        const Vec primal = kkt.solve(stack(Vec::Zero(n), sf.b, sf.h));
        it.x = primal.head(n);
        it.s = -primal.tail(m);
        const Vec dual = kkt.solve(stack(-sf.c, Vec::Zero(p), Vec::Zero(m)));
        it.y = dual.segment(n, p);
        it.z = dual.tail(m);
        const double ap = K.infeasibility(it.s);
        if (ap >= 0.0 || options.initial_shift != 1.0) it.s += (options.initial_shift + std::max(ap, 0.0)) * e;
        const double ad = K.infeasibility(it.z);
        if (ad >= 0.0 || options.initial_shift != 1.0) it.z += (options.initial_shift + std::max(ad, 0.0)) * e;
    }

    auto finish = [&](SolveStatus status, const detail::Iterate& at, const SolverResiduals& res, double pcost) {
        out.status = status;
        const double t = status == SolveStatus::Optimal || status == SolveStatus::SlowProgress ? at.tau : 1.0;
        const Vec x = eq.d.cwiseProduct(at.x) / t;
        const Vec y = eq.ea.cwiseProduct(at.y) / t;
        const Vec z = eq.eg.cwiseProduct(at.z) / t;
        out.x.assign(x.data(), x.data() + x.size());
        out.eq_duals.assign(y.data(), y.data() + static_cast<Eigen::Index>(sf.user_equalities));
        out.ineq_duals.assign(z.data(), z.data() + static_cast<Eigen::Index>(sf.user_inequalities));
        out.residuals = res;
        out.objective = pcost + problem.objective_constant;
        return out;
    };

    std::vector<double> mu_history;
    detail::Iterate best = it;
    SolverResiduals best_res{inf, inf, inf, inf, inf};
    double best_pcost = 0.0;
    double best_score = inf;
    int polished = 0;

    for (int iter = 0; iter <= options.max_iter; ++iter) {
        out.iterations = iter;
        const Vec rx = sf.A.transpose() * it.y + sf.G.transpose() * it.z + sf.c * it.tau;
        const Vec ry = sf.A * it.x - sf.b * it.tau;
        const Vec rz = sf.G * it.x + it.s - sf.h * it.tau;
        const double rt = it.kappa + sf.c.dot(it.x) + sf.b.dot(it.y) + sf.h.dot(it.z);

        // termination tests in the original scaling
        const Vec xo = eq.d.cwiseProduct(it.x);
        const Vec yo = eq.ea.cwiseProduct(it.y);
        const Vec zo = eq.eg.cwiseProduct(it.z);
        const Vec so = it.s.cwiseQuotient(eq.eg);
        const Vec pres_a = A0 * xo - b0 * it.tau;
        const Vec pres_g = G0 * xo + so - h0 * it.tau;
        const Vec dres_v = A0.transpose() * yo + G0.transpose() * zo + c0 * it.tau;
        auto inorm = [](const Vec& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; };
        SolverResiduals res;
        res.primal = std::max(inorm(pres_a) / (1.0 + norm_b), inorm(pres_g) / (1.0 + norm_h)) / it.tau;
        res.dual = inorm(dres_v) / (1.0 + norm_c) / it.tau;
        const double pcost = c0.dot(xo) / it.tau;
        const double dcost = -(b0.dot(yo) + h0.dot(zo)) / it.tau;
        res.complementarity = so.dot(zo) / (it.tau * it.tau);
        res.duality_gap = pcost - dcost;
        res.gap = std::max(std::abs(res.duality_gap), std::abs(res.complementarity)) / std::max(1.0, std::abs(pcost));
        if (!std::isfinite(res.primal) || !std::isfinite(res.dual) || !std::isfinite(res.gap)) {
            break;
        }

        const double score = std::max({res.primal, res.dual, res.gap});
        if (score < best_score) {
            best_score = score;
            best = it;
            best_res = res;
            best_pcost = pcost;
        }
        const bool converged = res.primal <= options.tol && res.dual <= options.tol && res.gap <= options.tol;
        if (converged || polished > 0) {
            // a few extra steps past the tolerance tighten the complementary slackness
            if (polished >= options.polish_iterations) break;
            ++polished;
        }
        const double bh = b0.dot(yo) + h0.dot(zo);
        if (bh < 0.0 && inorm(A0.transpose() * yo + G0.transpose() * zo) / (1.0 + norm_c) <= options.tol * -bh) {
            out.status = SolveStatus::Infeasible;
            out.residuals = res;
            return out;
        }
        const double cx = c0.dot(xo);
        if (cx < 0.0 && std::max(inorm(A0 * xo), inorm(G0 * xo + so)) <= options.tol * -cx) {
            out.status = SolveStatus::Unbounded;
            out.residuals = res;
            return out;
        }

        const double mu = (it.s.dot(it.z) + it.tau * it.kappa) / (degree + 1.0);
        mu_history.push_back(mu);
        if (mu_history.size() > 10 && mu > (1.0 - 1e-2) * mu_history[mu_history.size() - 11]) break;
        if (iter == options.max_iter) break;

        const NtScaling W(K, it.s, it.z);
        const Vec lambda = W.apply(it.z);
        if (!kkt.factor(W)) {
            break;
        }
        const Vec sol1 = kkt.solve(stack(-sf.c, sf.b, sf.h));
        const Vec x1 = sol1.head(n), y1 = sol1.segment(n, p), z1 = sol1.tail(m);
        const double denom = sf.c.dot(x1) + sf.b.dot(y1) + sf.h.dot(z1) - it.kappa / it.tau;

        auto direction = [&](const Vec& ds, double dt, double eta) {
            const Vec u = K.divide(lambda, ds);
            const Vec wu = W.apply(u);
            const Vec sol2 = kkt.solve(stack(-eta * rx, -eta * ry, -eta * rz - wu));
            const Vec x2 = sol2.head(n), y2 = sol2.segment(n, p), z2 = sol2.tail(m);
            detail::Direction d;
            d.tau = (-eta * rt - dt / it.tau - sf.c.dot(x2) - sf.b.dot(y2) - sf.h.dot(z2)) / denom;
            d.x = x2 + d.tau * x1;
            d.y = y2 + d.tau * y1;
            d.z = z2 + d.tau * z1;
            d.s = -eta * rz - sf.G * d.x + sf.h * d.tau;
            d.kappa = (dt - it.kappa * d.tau) / it.tau;
            return d;
        };
        auto max_step = [&](const detail::Direction& d) {
            double a = std::min(K.max_step(it.s, d.s), K.max_step(it.z, d.z));
            if (d.tau < 0.0) a = std::min(a, -it.tau / d.tau);
            if (d.kappa < 0.0) a = std::min(a, -it.kappa / d.kappa);
            return a;
        };

        const Vec ll = K.product(lambda, lambda);
        const detail::Direction aff = direction(-ll, -it.kappa * it.tau, 1.0);
        const double alpha_aff = std::min(1.0, max_step(aff));
        const double sigma = std::pow(1.0 - alpha_aff, 3);

        const Vec corr = K.product(W.apply(aff.s, true), W.apply(aff.z));
        const Vec ds = -ll - corr + sigma * mu * e;
        const double dt = -it.kappa * it.tau - aff.tau * aff.kappa + sigma * mu;
        const detail::Direction d = direction(ds, dt, 1.0 - sigma);
        const double alpha = std::min(1.0, options.step_fraction * max_step(d));
        if (!(alpha > 0.0) || !std::isfinite(alpha)) break;

        it.x += alpha * d.x;
        it.y += alpha * d.y;
        it.z += alpha * d.z;
        it.s += alpha * d.s;
        it.tau += alpha * d.tau;
        it.kappa += alpha * d.kappa;
    }
    const bool reached = best_res.primal <= options.tol && best_res.dual <= options.tol && best_res.gap <= options.tol;
    return finish(reached ? SolveStatus::Optimal : SolveStatus::SlowProgress, best, best_res, best_pcost);
}

}  // namespace distflow::socp
