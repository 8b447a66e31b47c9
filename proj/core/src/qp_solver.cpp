#include "kmpc/qp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "kmpc/errors.hpp"

namespace kmpc {

const char* to_string(QpStatus s) {
    switch (s) {
        case QpStatus::Solved: return "solved";
        case QpStatus::MaxIterations: return "max_iter";
        case QpStatus::Infeasible: return "infeasible";
    }
    return "unknown";
}

KktResiduals kkt_residuals(const QpProblem& p, const Vector& x, const Vector& y) {
    KktResiduals r;
    const Vector Gx = p.G * x;
    for (Eigen::Index i = 0; i < Gx.size(); ++i) {
        r.primal = std::max({r.primal, p.lower[i] - Gx[i], Gx[i] - p.upper[i]});
    }
    const Vector stat = p.P * x + p.q + p.G.transpose() * y;
    r.dual = stat.size() > 0 ? stat.lpNorm<Eigen::Infinity>() : 0.0;
    return r;
}

namespace {

void check_dimensions(const QpProblem& p) {
    const Eigen::Index d = p.q.size();
    const Eigen::Index c = p.G.rows();
    if (p.P.rows() != d || p.P.cols() != d) throw InputError("qp: P must be d x d");
    if (p.G.cols() != d && c > 0) throw InputError("qp: G must have d columns");
    if (p.lower.size() != c || p.upper.size() != c) throw InputError("qp: bounds must have c entries");
}

constexpr std::size_t kFallbackScalingPasses = 10;

double clamp_scale(double norm) {
    if (!(norm > 1e-4)) return 1.0;
    return std::clamp(1.0 / std::sqrt(norm), 1e-2, 1e2);
}

}  // namespace

void QpSolver::refactor(const QpProblem& p, std::size_t passes) {
    const Eigen::Index d = p.q.size();
    const Eigen::Index c = p.G.rows();
    Ps_ = p.P;
    Gs_ = p.G;
    D_ = Vector::Ones(d);
    E_ = Vector::Ones(c);
    for (std::size_t it = 0; it < passes; ++it) {
        Vector dD(d), dE(c);
        for (Eigen::Index j = 0; j < d; ++j) {
            double norm = Ps_.col(j).lpNorm<Eigen::Infinity>();
            if (c > 0) norm = std::max(norm, Gs_.col(j).lpNorm<Eigen::Infinity>());
            dD[j] = clamp_scale(norm);
        }
        for (Eigen::Index i = 0; i < c; ++i) dE[i] = clamp_scale(Gs_.row(i).lpNorm<Eigen::Infinity>());
        Ps_ = dD.asDiagonal() * Ps_ * dD.asDiagonal();
        Gs_ = dE.asDiagonal() * Gs_ * dD.asDiagonal();
        D_ = D_.cwiseProduct(dD);
        E_ = E_.cwiseProduct(dE);
    }
    c_ = 1.0;
    if (passes > 0 && d > 0) {
        double mean_col = 0.0;
        for (Eigen::Index j = 0; j < d; ++j) mean_col += Ps_.col(j).lpNorm<Eigen::Infinity>();
        mean_col /= static_cast<double>(d);
        if (mean_col > 1e-4) c_ = std::clamp(1.0 / mean_col, 1e-4, 1e4);
    }
    Ps_ *= c_;

    Matrix K = Ps_;
    K.diagonal().array() += cfg_.sigma;
    if (c > 0) K.noalias() += cfg_.rho * Gs_.transpose() * Gs_;
    llt_.compute(K);
    if (llt_.info() != Eigen::Success && passes == 0) {
        refactor(p, kFallbackScalingPasses);
        return;
    }
    if (llt_.info() != Eigen::Success) throw NumericalError("qp: KKT factorization failed");
    cached_P_ = p.P;
    cached_G_ = p.G;
    have_factor_ = true;
    ++factorizations_;
}

QpSolution QpSolver::solve(const QpProblem& p, const std::optional<WarmStart>& warm) {
    check_dimensions(p);
    const Eigen::Index d = p.q.size();
    const Eigen::Index c = p.G.rows();

    QpSolution sol;
    for (Eigen::Index i = 0; i < c; ++i) {
        if (p.lower[i] > p.upper[i]) {
            sol.status = QpStatus::Infeasible;
            sol.x = Vector::Zero(d);
            sol.y = Vector::Zero(c);
            return sol;
        }
    }

    const bool same = have_factor_ && cached_P_.rows() == d && cached_G_.rows() == c &&
                      cached_G_.cols() == p.G.cols() && cached_P_ == p.P && cached_G_ == p.G;
    if (!same) refactor(p, cfg_.scaling_iterations);

    const Vector q = c_ * D_.cwiseProduct(p.q);
    const Vector lower = E_.cwiseProduct(p.lower);
    const Vector upper = E_.cwiseProduct(p.upper);
    const double rho = cfg_.rho;
    const double sigma = cfg_.sigma;
    const double alpha = cfg_.alpha;
    const Matrix& G = Gs_;

    Vector x = Vector::Zero(d);
    Vector y = Vector::Zero(c);
    if (warm) {
        if (warm->x.size() == d) x = warm->x.cwiseQuotient(D_);
        if (warm->y.size() == c) y = c_ * warm->y.cwiseQuotient(E_);
    }
    Vector z = (G * x).cwiseMax(lower).cwiseMin(upper);

    // Residuals of the original problem in terms of the scaled iterates.
    auto primal_res = [&](const Vector& xv, const Vector& zv) {
        return c > 0 ? (G * xv - zv).cwiseQuotient(E_).lpNorm<Eigen::Infinity>() : 0.0;
    };
    auto dual_res = [&](const Vector& xv, const Vector& yv) {
        Vector r = Ps_ * xv + q;
        if (c > 0) r.noalias() += G.transpose() * yv;
        return d > 0 ? (r.cwiseQuotient(D_) / c_).lpNorm<Eigen::Infinity>() : 0.0;
    };

    double best_merit = kInf;
    Vector best_x = x, best_y = y;
    Vector rhs(d), x_tilde(d), z_tilde(c), z_hat(c), z_next(c);

    const std::size_t check_every = std::max<std::size_t>(1, cfg_.check_every);
    std::size_t it = 0;
    for (; it < cfg_.max_iterations; ++it) {
        rhs = sigma * x - q;
        if (c > 0) rhs.noalias() += G.transpose() * (rho * z - y);
        x_tilde = llt_.solve(rhs);
        z_tilde.noalias() = G * x_tilde;

        x = alpha * x_tilde + (1.0 - alpha) * x;
        z_hat = alpha * z_tilde + (1.0 - alpha) * z;
        z_next = (z_hat + y / rho).cwiseMax(lower).cwiseMin(upper);
        y += rho * (z_hat - z_next);
        z = z_next;

        if ((it + 1) % check_every == 0 || it + 1 == cfg_.max_iterations) {
            const double rp = primal_res(x, z);
            const double rd = dual_res(x, y);
            const double merit = std::max(rp, rd);
            if (merit < best_merit) {
                best_merit = merit;
                best_x = x;
                best_y = y;
            }
            if (rp <= cfg_.eps_abs && rd <= cfg_.eps_abs) {
                sol.status = QpStatus::Solved;
                ++it;
                break;
            }
        }
    }

    if (sol.status != QpStatus::Solved) {
        sol.status = QpStatus::MaxIterations;
        x = best_x;
        y = best_y;
    }
    sol.x = D_.cwiseProduct(x);
    sol.y = E_.cwiseProduct(y) / c_;
    sol.iterations = it;
    const KktResiduals r = kkt_residuals(p, sol.x, sol.y);
    sol.primal_residual = r.primal;
    sol.dual_residual = r.dual;
    if (cfg_.polish) {
        sol.polished = polish(p, sol);
        if (sol.polished && sol.primal_residual <= cfg_.eps_abs && sol.dual_residual <= cfg_.eps_abs) {
            sol.status = QpStatus::Solved;
        }
    }
    return sol;
}

bool QpSolver::polish(const QpProblem& p, QpSolution& sol) const {
    const Eigen::Index d = p.q.size();
    const Eigen::Index c = p.G.rows();
    const Vector Gx = p.G * sol.x;
    // -1 lower active, +1 upper active, 0 inactive.
    std::vector<int> side(static_cast<std::size_t>(c), 0);
    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < c; ++i) {
        int s = 0;
        if (p.lower[i] == p.upper[i]) {
            s = sol.y[i] >= 0.0 ? 1 : -1;
        } else if (Gx[i] - p.lower[i] < -sol.y[i]) {
            s = -1;
        } else if (p.upper[i] - Gx[i] < sol.y[i]) {
            s = 1;
        }
        side[static_cast<std::size_t>(i)] = s;
        if (s != 0) active.push_back(i);
    }

    const auto a = static_cast<Eigen::Index>(active.size());
    Matrix K = Matrix::Zero(d + a, d + a);
    Vector rhs(d + a);
    K.topLeftCorner(d, d) = p.P;
    rhs.head(d) = -p.q;
    for (Eigen::Index k = 0; k < a; ++k) {
        const Eigen::Index i = active[static_cast<std::size_t>(k)];
        K.block(d + k, 0, 1, d) = p.G.row(i);
        K.block(0, d + k, d, 1) = p.G.row(i).transpose();
        rhs[d + k] = side[static_cast<std::size_t>(i)] < 0 ? p.lower[i] : p.upper[i];
    }
    // Quasi-definite regularization with iterative refinement on the exact system.
    constexpr double delta = 1e-10;
    Matrix Kreg = K;
    Kreg.diagonal().head(d).array() += delta;
    Kreg.diagonal().tail(a).array() -= delta;
    const Eigen::PartialPivLU<Matrix> lu(Kreg);
    Vector v = lu.solve(rhs);
    for (int refine = 0; refine < 5; ++refine) v += lu.solve(rhs - K * v);
    if (!v.allFinite()) return false;

    Vector x = v.head(d);
    Vector y = Vector::Zero(c);
    for (Eigen::Index k = 0; k < a; ++k) {
        const Eigen::Index i = active[static_cast<std::size_t>(k)];
        const double yi = v[d + k];
        const int s = side[static_cast<std::size_t>(i)];
        if (p.lower[i] != p.upper[i] && s * yi < -cfg_.eps_abs) return false;
        y[i] = yi;
    }
    const KktResiduals r = kkt_residuals(p, x, y);
    if (std::max(r.primal, r.dual) > std::max(sol.primal_residual, sol.dual_residual)) return false;
    sol.x = std::move(x);
    sol.y = std::move(y);
    sol.primal_residual = r.primal;
    sol.dual_residual = r.dual;
    return true;
}

QpSolution solve(const QpProblem& p, const SolverConfig& cfg, const std::optional<WarmStart>& warm) {
    QpSolver solver(cfg);
    return solver.solve(p, warm);
}

}  // namespace kmpc
