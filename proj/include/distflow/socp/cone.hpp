#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Core>

namespace distflow::socp {

/// Cartesian product of a nonnegative orthant and second-order cones
/// {(t, w) : ||w|| <= t}, laid out orthant first, then each cone in order.
class ConeSet {
public:
    ConeSet() = default;
    ConeSet(std::size_t orthant, std::vector<std::size_t> soc_dims) : orthant_(orthant), soc_(std::move(soc_dims)) {
        std::size_t off = orthant_;
        for (auto d : soc_) {
            offsets_.push_back(off);
            off += d;
        }
        dim_ = off;
    }

    [[nodiscard]] std::size_t orthant() const noexcept { return orthant_; }
    [[nodiscard]] std::size_t soc_count() const noexcept { return soc_.size(); }
    [[nodiscard]] std::size_t soc_dim(std::size_t k) const { return soc_[k]; }
    [[nodiscard]] std::size_t soc_offset(std::size_t k) const { return offsets_[k]; }
    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    /// Barrier degree: one per orthant entry plus one per cone.
    [[nodiscard]] std::size_t degree() const noexcept { return orthant_ + soc_.size(); }

    [[nodiscard]] Eigen::VectorXd identity() const {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
        e.head(static_cast<Eigen::Index>(orthant_)).setOnes();
        for (auto off : offsets_) e[static_cast<Eigen::Index>(off)] = 1.0;
        return e;
    }

    /// Jordan product u o v.
    [[nodiscard]] Eigen::VectorXd product(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
        Eigen::VectorXd w(u.size());
        const auto l = static_cast<Eigen::Index>(orthant_);
        w.head(l) = u.head(l).cwiseProduct(v.head(l));
        for (std::size_t k = 0; k < soc_.size(); ++k) {
            const auto o = static_cast<Eigen::Index>(offsets_[k]);
            const auto m = static_cast<Eigen::Index>(soc_[k]) - 1;
            w[o] = u.segment(o, m + 1).dot(v.segment(o, m + 1));
            w.segment(o + 1, m) = u[o] * v.segment(o + 1, m) + v[o] * u.segment(o + 1, m);
        }
        return w;
    }

    /// Solves lambda o x = d for x, lambda in the interior.
    [[nodiscard]] Eigen::VectorXd divide(const Eigen::VectorXd& lambda, const Eigen::VectorXd& d) const {
        Eigen::VectorXd x(d.size());
        const auto l = static_cast<Eigen::Index>(orthant_);
        x.head(l) = d.head(l).cwiseQuotient(lambda.head(l));
        for (std::size_t k = 0; k < soc_.size(); ++k) {
            const auto o = static_cast<Eigen::Index>(offsets_[k]);
            const auto m = static_cast<Eigen::Index>(soc_[k]) - 1;
            const double l0 = lambda[o];
            const auto l1 = lambda.segment(o + 1, m);
            const double det = l0 * l0 - l1.squaredNorm();
            const double x0 = (l0 * d[o] - l1.dot(d.segment(o + 1, m))) / det;
            x[o] = x0;
            x.segment(o + 1, m) = (d.segment(o + 1, m) - x0 * l1) / l0;
        }
        return x;
    }

    /// Largest alpha in [0, inf) with u + alpha d in the cone; infinity if unbounded.
    [[nodiscard]] double max_step(const Eigen::VectorXd& u, const Eigen::VectorXd& d) const {
        double alpha = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < orthant_; ++i) {
            const auto k = static_cast<Eigen::Index>(i);
            if (d[k] < 0.0) alpha = std::min(alpha, -u[k] / d[k]);
        }
        for (std::size_t k = 0; k < soc_.size(); ++k) {
            const auto o = static_cast<Eigen::Index>(offsets_[k]);
            const auto m = static_cast<Eigen::Index>(soc_[k]) - 1;
            alpha = std::min(alpha, soc_step(u[o], u.segment(o + 1, m), d[o], d.segment(o + 1, m)));
        }
        return alpha;
    }

    /// Largest per-block shortfall of u from the cone: -u_i on the orthant and
    /// ||u_1|| - u_0 on each second-order block. Nonpositive iff u is in the cone.
    [[nodiscard]] double infeasibility(const Eigen::VectorXd& u) const {
        double worst = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < orthant_; ++i) worst = std::max(worst, -u[static_cast<Eigen::Index>(i)]);
        for (std::size_t k = 0; k < soc_.size(); ++k) {
            const auto o = static_cast<Eigen::Index>(offsets_[k]);
            const auto m = static_cast<Eigen::Index>(soc_[k]) - 1;
            worst = std::max(worst, u.segment(o + 1, m).norm() - u[o]);
        }
        return worst;
    }

private:
    template <class Seg>
    static double soc_step(double u0, const Seg& u1, double d0, const Seg& d1) {
        // (u0 + a d0)^2 - ||u1 + a d1||^2 >= 0 and u0 + a d0 >= 0
        const double qa = d0 * d0 - d1.squaredNorm();
        const double qb = 2.0 * (u0 * d0 - u1.dot(d1));
        const double qc = u0 * u0 - u1.squaredNorm();
        double alpha = std::numeric_limits<double>::infinity();
        if (d0 < 0.0) alpha = -u0 / d0;
        const double scale = std::max({std::abs(qa), std::abs(qb), std::abs(qc)});
        if (scale == 0.0) return alpha;
        if (std::abs(qa) <= 1e-15 * scale) {
            if (qb < 0.0) alpha = std::min(alpha, -qc / qb);
            return alpha;
        }
        const double disc = qb * qb - 4.0 * qa * qc;
        if (disc < 0.0) return alpha;
        const double sq = std::sqrt(disc);
        const double t = -0.5 * (qb + (qb >= 0.0 ? sq : -sq));
        double r1 = t / qa;
        double r2 = t != 0.0 ? qc / t : r1;
        for (double root : {r1, r2}) {
            if (root > 0.0) alpha = std::min(alpha, root);
        }
        return alpha;
    }

    std::size_t orthant_ = 0;
    std::vector<std::size_t> soc_;
    std::vector<std::size_t> offsets_;
    std::size_t dim_ = 0;
};

/// Nesterov-Todd scaling W at a primal-dual pair (s, z) with W z = W^{-1} s.
/// W is symmetric: diagonal on the orthant and
/// eta [w0, w1'; w1, I + w1 w1' / (1 + w0)] on each cone.
class NtScaling {
public:
    NtScaling(const ConeSet& cones, const Eigen::VectorXd& s, const Eigen::VectorXd& z) : cones_(&cones) {
        const auto l = static_cast<Eigen::Index>(cones.orthant());
        diag_ = (s.head(l).cwiseQuotient(z.head(l))).cwiseSqrt();
        eta_.resize(cones.soc_count());
        wbar_.resize(cones.soc_count());
        for (std::size_t k = 0; k < cones.soc_count(); ++k) {
            const auto o = static_cast<Eigen::Index>(cones.soc_offset(k));
            const auto n = static_cast<Eigen::Index>(cones.soc_dim(k));
            const Eigen::VectorXd sk = s.segment(o, n);
            const Eigen::VectorXd zk = z.segment(o, n);
            const double sres = sk[0] * sk[0] - sk.tail(n - 1).squaredNorm();
            const double zres = zk[0] * zk[0] - zk.tail(n - 1).squaredNorm();
            const double sn = std::sqrt(std::max(sres, 1e-300));
            const double zn = std::sqrt(std::max(zres, 1e-300));
            const Eigen::VectorXd sb = sk / sn;
            const Eigen::VectorXd zb = zk / zn;
            const double gamma = std::sqrt(std::max(0.5 * (1.0 + sb.dot(zb)), 1e-300));
            Eigen::VectorXd w(n);
            w[0] = (sb[0] + zb[0]) / (2.0 * gamma);
            w.tail(n - 1) = (sb.tail(n - 1) - zb.tail(n - 1)) / (2.0 * gamma);
            eta_[k] = std::sqrt(sn / zn);
            wbar_[k] = std::move(w);
        }
    }

    /// y = W x, or W^{-1} x when `inverse`.
    [[nodiscard]] Eigen::VectorXd apply(const Eigen::VectorXd& x, bool inverse = false) const {
        Eigen::VectorXd y(x.size());
        const auto l = static_cast<Eigen::Index>(cones_->orthant());
        if (inverse) {
            y.head(l) = x.head(l).cwiseQuotient(diag_);
        } else {
            y.head(l) = x.head(l).cwiseProduct(diag_);
        }
        for (std::size_t k = 0; k < cones_->soc_count(); ++k) {
            const auto o = static_cast<Eigen::Index>(cones_->soc_offset(k));
            const auto n = static_cast<Eigen::Index>(cones_->soc_dim(k));
            const auto& w = wbar_[k];
            const double w0 = w[0];
            const auto w1 = w.tail(n - 1);
            const double x0 = x[o];
            const auto x1 = x.segment(o + 1, n - 1);
            const double sign = inverse ? -1.0 : 1.0;
            const double factor = inverse ? 1.0 / eta_[k] : eta_[k];
            const double w1x1 = w1.dot(x1);
            y[o] = factor * (w0 * x0 + sign * w1x1);
            y.segment(o + 1, n - 1) = factor * (sign * x0 * w1 + x1 + (w1x1 / (1.0 + w0)) * w1);
        }
        return y;
    }

    /// Dense block of W^2 for cone k: eta^2 (2 wbar wbar' - J).
    [[nodiscard]] Eigen::MatrixXd soc_square(std::size_t k) const {
        const auto& w = wbar_[k];
        const auto n = w.size();
        Eigen::MatrixXd m = 2.0 * w * w.transpose();
        m(0, 0) -= 1.0;
        for (Eigen::Index i = 1; i < n; ++i) m(i, i) += 1.0;
        return eta_[k] * eta_[k] * m;
    }

    [[nodiscard]] const Eigen::VectorXd& orthant_diag() const noexcept { return diag_; }

private:
    const ConeSet* cones_;
    Eigen::VectorXd diag_;
    std::vector<double> eta_;
    std::vector<Eigen::VectorXd> wbar_;
};

}  // namespace distflow::socp
