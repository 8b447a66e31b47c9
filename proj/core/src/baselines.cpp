#include "kmpc/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "kmpc/dictionary.hpp"
#include "kmpc/errors.hpp"
#include "kmpc/pchip.hpp"

namespace kmpc {

LinearizedModel discretize_zoh(const Matrix& A, const Matrix& B, const Vector& c, double dt) {
    const Eigen::Index n = A.rows();
    const Eigen::Index m = B.cols();
    const Eigen::Index N = n + m + 1;
    Matrix M = Matrix::Zero(N, N);
    M.topLeftCorner(n, n) = A * dt;
    M.block(0, n, n, m) = B * dt;
    M.block(0, n + m, n, 1) = c * dt;

    // Scale so the series converges quickly, then square back.
    const double norm = M.lpNorm<Eigen::Infinity>();
    int squarings = 0;
    if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    M /= std::pow(2.0, squarings);

    Matrix E = Matrix::Identity(N, N);
    Matrix term = Matrix::Identity(N, N);
    for (int k = 1; k < 40; ++k) {
        term = term * M / static_cast<double>(k);
        E += term;
        if (term.lpNorm<Eigen::Infinity>() < 1e-12 * 1e-4) break;
    }
    for (int i = 0; i < squarings; ++i) E = E * E;

    LinearizedModel out;
    out.Ad = E.topLeftCorner(n, n);
    out.Bd = E.block(0, n, n, m);
    out.affine = E.block(0, n + m, n, 1);
    out.dt = dt;
    return out;
}

LinearizedModel linearize(const Dynamics& f, const Vector& x0, const Vector& u0, double dt,
                          double fd_step) {
    const Eigen::Index n = x0.size();
    const Eigen::Index m = u0.size();
    Matrix A(n, n), B(n, m);
    for (Eigen::Index j = 0; j < n; ++j) {
        Vector xp = x0, xm = x0;
        xp[j] += fd_step;
        xm[j] -= fd_step;
        A.col(j) = (f(xp, u0) - f(xm, u0)) / (2.0 * fd_step);
    }
    for (Eigen::Index j = 0; j < m; ++j) {
        Vector up = u0, um = u0;
        up[j] += fd_step;
        um[j] -= fd_step;
        B.col(j) = (f(x0, up) - f(x0, um)) / (2.0 * fd_step);
    }
    const Vector c = f(x0, u0) - A * x0 - B * u0;
    return discretize_zoh(A, B, c, dt);
}

LinearizedModel linearize(const PlantParams& p, const PlantState& s, const Vector& u0,
                          double dt) {
    const Dynamics f = [&p](const Vector& x, const Vector& u) { return state_derivative(p, x, u); };
    return linearize(f, s.x(), u0, dt);
}

MpcStepResult linearization_mpc_step(const LinearizedModel& model, const MpcConfig& cfg,
                                     const Vector& x0, const Vector& u_prev,
                                     const Matrix& ref_window, QpSolver& solver,
                                     const std::optional<WarmStart>& warm) {
    const LiftingDictionary id = make_identity_dictionary(static_cast<std::size_t>(x0.size()));
    return mpc_step(model.as_linear_model(), cfg, x0, u_prev, ref_window, id, solver, warm);
}

MpcStepResult linearization_mpc_step(const PlantParams& p, const MpcConfig& cfg,
                                     const Vector& x0, const Vector& u_prev,
                                     const Matrix& ref_window, double dt, QpSolver& solver,
                                     const std::optional<WarmStart>& warm) {
    const LinearizedModel lm = linearize(p, PlantState::from_x(x0), u_prev, dt);
    return linearization_mpc_step(lm, cfg, x0, u_prev, ref_window, solver, warm);
}

namespace {

std::vector<double> time_grid(std::size_t count, double dt) {
    std::vector<double> t(count);
    for (std::size_t k = 0; k < count; ++k) t[k] = static_cast<double>(k) * dt;
    return t;
}

}  // namespace

Vector ReferenceTrajectory::state_at(double t) const {
    const double times[] = {t};
    return sample(times).col(0);
}

Matrix ReferenceTrajectory::sample(std::span<const double> times) const {
    const Eigen::Index n = X.rows();
    const auto count = static_cast<Eigen::Index>(times.size());
    if (X.cols() == 1) return X.col(0).replicate(1, count);

    const double t_end = duration();
    const std::vector<double> t = time_grid(static_cast<std::size_t>(X.cols()), dt);
    std::vector<double> y(t.size());
    Matrix W(n, count);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < X.cols(); ++k) y[static_cast<std::size_t>(k)] = X(i, k);
        const Pchip f(t, y);
        for (Eigen::Index j = 0; j < count; ++j) {
            const double tq = times[static_cast<std::size_t>(j)];
            W(i, j) = tq <= 0.0 ? X(i, 0) : (tq >= t_end ? X(i, X.cols() - 1) : f(tq));
        }
    }
    return W;
}

Matrix ReferenceTrajectory::window(double t0, double step, std::size_t horizon) const {
    std::vector<double> times(horizon);
    for (std::size_t j = 0; j < horizon; ++j) times[j] = t0 + step * static_cast<double>(j + 1);
    return sample(times);
}

void ReferenceTrajectory::write_csv(std::ostream& os) const {
    const Eigen::Index n = X.rows();
    const Eigen::Index dof = n / 2;
    os << "t";
    for (Eigen::Index i = 0; i < dof; ++i) os << ",q_" << i;
    for (Eigen::Index i = 0; i < dof; ++i) os << ",qdot_" << i;
    for (Eigen::Index i = 0; i < U.rows(); ++i) os << ",u_" << i;
    os << "\n";
    const auto old = os.precision(17);
    for (Eigen::Index k = 0; k < X.cols(); ++k) {
        os << static_cast<double>(k) * dt;
        for (Eigen::Index i = 0; i < n; ++i) os << "," << X(i, k);
        const Eigen::Index ku = std::min<Eigen::Index>(k, U.cols() - 1);
        for (Eigen::Index i = 0; i < U.rows(); ++i) os << "," << (ku >= 0 ? U(i, ku) : 0.0);
        os << "\n";
    }
    os.precision(old);
}

ReferenceTrajectory ReferenceTrajectory::read_csv(std::istream& is, std::size_t dof) {
    const std::size_t cols = 1 + 3 * dof;
    std::string line;
    std::vector<std::vector<double>> rows;
    bool header_seen = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> values;
        std::stringstream ss(line);
        std::string cell;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                values.push_back(std::stod(cell, &used));
            } catch (const std::exception&) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (header_seen || !rows.empty()) throw InputError("reference csv: non-numeric row");
            header_seen = true;
            continue;
        }
        if (values.size() != cols) {
            throw InputError("reference csv: expected " + std::to_string(cols) + " columns");
        }
        rows.push_back(std::move(values));
    }
    if (rows.size() < 2) throw InputError("reference csv: need at least two rows");

    const double dt = rows[1][0] - rows[0][0];
    if (!(dt > 0.0)) throw InputError("reference csv: time must increase");
    for (std::size_t k = 1; k < rows.size(); ++k) {
        if (std::abs(rows[k][0] - rows[k - 1][0] - dt) > 1e-9 * std::max(1.0, rows[k][0])) {
            throw InputError("reference csv: time steps must be uniform");
        }
    }

    const auto n = static_cast<Eigen::Index>(2 * dof);
    const auto m = static_cast<Eigen::Index>(dof);
    const auto T = static_cast<Eigen::Index>(rows.size() - 1);
    ReferenceTrajectory ref;
    ref.dt = dt;
    ref.X.resize(n, T + 1);
    ref.U.resize(m, T);
    for (Eigen::Index k = 0; k <= T; ++k) {
        const auto& r = rows[static_cast<std::size_t>(k)];
        for (Eigen::Index i = 0; i < n; ++i) ref.X(i, k) = r[static_cast<std::size_t>(1 + i)];
        if (k < T) {
            for (Eigen::Index i = 0; i < m; ++i) {
                ref.U(i, k) = r[static_cast<std::size_t>(1 + n + i)];
            }
        }
    }
    if (!ref.X.allFinite() || !ref.U.allFinite()) throw InputError("reference csv: non-finite value");
    return ref;
}

ReferenceTrajectory ReferenceTrajectory::constant(const Vector& x, std::size_t m, double duration,
                                                  double dt) {
    if (!(dt > 0.0) || !(duration > 0.0)) throw InputError("constant reference: bad timing");
    const auto T = static_cast<Eigen::Index>(std::max(1.0, std::round(duration / dt)));
    ReferenceTrajectory ref;
    ref.dt = dt;
    ref.X = x.replicate(1, T + 1);
    ref.U = Matrix::Zero(static_cast<Eigen::Index>(m), T);
    return ref;
}

Vector plant_discrete_step(const PlantParams& p, const Vector& x, const Vector& u, double dt,
                           double max_substep) {
    const auto substeps = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(dt / max_substep - 1e-9)));
    const double h = dt / static_cast<double>(substeps);
    Vector s = x;
    for (std::size_t i = 0; i < substeps; ++i) {
        const Vector k1 = state_derivative(p, s, u);
        const Vector k2 = state_derivative(p, s + 0.5 * h * k1, u);
        const Vector k3 = state_derivative(p, s + 0.5 * h * k2, u);
        const Vector k4 = state_derivative(p, s + h * k3, u);
        s += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return s;
}

namespace {

struct Rollout {
    Matrix X;
    Matrix U;
    double cost = 0.0;
};

double trajectory_cost(const Matrix& X, const Matrix& U, const Vector& xf, const IlqrWeights& w) {
    double J = 0.0;
    const Eigen::Index T = U.cols();
    for (Eigen::Index k = 0; k < T; ++k) {
        const Vector e = X.col(k) - xf;
        J += 0.5 * e.dot(w.Q.cwiseProduct(e)) + 0.5 * U.col(k).dot(w.R.cwiseProduct(U.col(k)));
    }
    const Vector eT = X.col(T) - xf;
    J += 0.5 * eT.dot(w.Qf.cwiseProduct(eT));
    return J;
}

}  // namespace

IlqrResult ilqr_solve(const Dynamics& f, const Vector& x0, const Vector& xf, std::size_t T_steps,
                      double dt, const IlqrWeights& w, const Matrix& U_init,
                      const IlqrOptions& opts) {
    if (T_steps < 2) throw InputError("ilqr: need at least two steps");
    const Eigen::Index n = x0.size();
    const auto T = static_cast<Eigen::Index>(T_steps);
    const Eigen::Index m = U_init.rows();
    if (U_init.cols() != T) throw InputError("ilqr: initial controls must have T columns");
    if (w.Q.size() != n || w.Qf.size() != n || w.R.size() != m || xf.size() != n) {
        throw InputError("ilqr: weight dimensions do not match the problem");
    }

    Rollout cur;
    cur.U = U_init;
    cur.X.resize(n, T + 1);
    cur.X.col(0) = x0;
    for (Eigen::Index k = 0; k < T; ++k) cur.X.col(k + 1) = f(cur.X.col(k), cur.U.col(k));
    cur.cost = trajectory_cost(cur.X, cur.U, xf, w);
    if (!std::isfinite(cur.cost)) throw GenerationError("ilqr: initial rollout diverged");

    IlqrResult result;
    result.cost_history.push_back(cur.cost);

    std::vector<Matrix> As(T_steps), Bs(T_steps), Ks(T_steps);
    std::vector<Vector> ks(T_steps);
    double mu = opts.mu_initial;
    const Matrix Qd = w.Q.asDiagonal();
    const Matrix Rd = w.R.asDiagonal();
    const Matrix Qfd = w.Qf.asDiagonal();
    const double h = opts.fd_step;

    for (std::size_t iter = 0; iter < opts.max_iterations; ++iter) {
        for (Eigen::Index k = 0; k < T; ++k) {
            const Vector xk = cur.X.col(k), uk = cur.U.col(k);
            Matrix& A = As[static_cast<std::size_t>(k)];
            Matrix& B = Bs[static_cast<std::size_t>(k)];
            A.resize(n, n);
            B.resize(n, m);
            for (Eigen::Index j = 0; j < n; ++j) {
                Vector xp = xk, xm = xk;
                xp[j] += h;
                xm[j] -= h;
                A.col(j) = (f(xp, uk) - f(xm, uk)) / (2.0 * h);
            }
            for (Eigen::Index j = 0; j < m; ++j) {
                Vector up = uk, um = uk;
                up[j] += h;
                um[j] -= h;
                B.col(j) = (f(xk, up) - f(xk, um)) / (2.0 * h);
            }
        }

        // Backward pass; grows mu until every Q_uu is positive definite.
        double expected_linear = 0.0, expected_quadratic = 0.0;
        bool backward_ok = false;
        while (!backward_ok) {
            Vector Vx = Qfd * (cur.X.col(T) - xf);
            Matrix Vxx = Qfd;
            expected_linear = expected_quadratic = 0.0;
            backward_ok = true;
            for (Eigen::Index k = T - 1; k >= 0; --k) {
                const auto ks_i = static_cast<std::size_t>(k);
                const Matrix& A = As[ks_i];
                const Matrix& B = Bs[ks_i];
                Matrix Vreg = Vxx;
                Vreg.diagonal().array() += mu;
                const Vector Qx = Qd * (cur.X.col(k) - xf) + A.transpose() * Vx;
                const Vector Qu = Rd * cur.U.col(k) + B.transpose() * Vx;
                const Matrix Qxx = Qd + A.transpose() * Vxx * A;
                const Matrix Quu = Rd + B.transpose() * Vreg * B;
                const Matrix Qux = B.transpose() * Vreg * A;
                Eigen::LLT<Matrix> llt(Quu);
                if (llt.info() != Eigen::Success) {
                    backward_ok = false;
                    break;
                }
                Ks[ks_i] = -llt.solve(Qux);
                ks[ks_i] = -llt.solve(Qu);
                const Matrix& K = Ks[ks_i];
                const Vector& kff = ks[ks_i];
                expected_linear += kff.dot(Qu);
                expected_quadratic += 0.5 * kff.dot(Quu * kff);
                Vx = Qx + K.transpose() * Quu * kff + K.transpose() * Qu + Qux.transpose() * kff;
                Vxx = Qxx + K.transpose() * Quu * K + K.transpose() * Qux + Qux.transpose() * K;
                Vxx = 0.5 * (Vxx + Vxx.transpose()).eval();
            }
            if (!backward_ok) {
                mu = std::max(mu * opts.mu_factor, opts.mu_min);
                if (mu > opts.mu_max) throw GenerationError("ilqr: regularization exhausted");
            }
        }

        const double tol = opts.cost_tolerance * std::max(1.0, std::abs(cur.cost));
        if (-(expected_linear + expected_quadratic) < tol) {
            result.converged = true;
            break;
        }

        // Forward pass with backtracking.
        bool accepted = false;
        double alpha = 1.0;
        Rollout cand;
        cand.X.resize(n, T + 1);
        cand.U.resize(m, T);
        for (std::size_t ls = 0; ls < opts.max_line_search; ++ls, alpha *= 0.5) {
            cand.X.col(0) = x0;
            for (Eigen::Index k = 0; k < T; ++k) {
                const auto ki = static_cast<std::size_t>(k);
                cand.U.col(k) = cur.U.col(k) + alpha * ks[ki] +
                                Ks[ki] * (cand.X.col(k) - cur.X.col(k));
                cand.X.col(k + 1) = f(cand.X.col(k), cand.U.col(k));
            }
            cand.cost = trajectory_cost(cand.X, cand.U, xf, w);
            if (std::isfinite(cand.cost) && cand.cost < cur.cost) {
                accepted = true;
                break;
            }
        }

        if (accepted) {
            const double decrease = cur.cost - cand.cost;
            cur = std::move(cand);
            result.cost_history.push_back(cur.cost);
            ++result.iterations;
            mu = std::max(opts.mu_min, mu / opts.mu_factor);
            if (decrease < tol) {
                result.converged = true;
                break;
            }
        } else {
            mu *= opts.mu_factor;
            if (mu > opts.mu_max) break;
        }
    }

    if (!std::isfinite(cur.cost)) throw GenerationError("ilqr: cost is not finite");
    result.trajectory.X = std::move(cur.X);
    result.trajectory.U = std::move(cur.U);
    result.trajectory.dt = dt;
    result.cost = cur.cost;
    return result;
}

IlqrResult ilqr_reference(const PlantParams& p, const Vector& x0, const Vector& xf,
                          std::size_t T, double dt, const IlqrWeights& w,
                          const IlqrOptions& opts) {
    p.validate();
    const Dynamics f = [&p, dt](const Vector& x, const Vector& u) {
        return plant_discrete_step(p, x, u, dt);
    };
    const Matrix U0 = Matrix::Zero(static_cast<Eigen::Index>(p.dof), static_cast<Eigen::Index>(T));
    return ilqr_solve(f, x0, xf, T, dt, w, U0, opts);
}

}  // namespace kmpc
