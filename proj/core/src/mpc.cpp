#include "kmpc/mpc.hpp"

#include <string>
#include <vector>

#include "kmpc/errors.hpp"

namespace kmpc {

void MpcConfig::validate(std::size_t p, std::size_t m) const {
    if (horizon == 0) throw ConfigError("mpc: horizon must be at least 1");
    if (static_cast<std::size_t>(Q.size()) != p) {
        throw ConfigError("mpc: Q has " + std::to_string(Q.size()) + " entries, expected " +
                          std::to_string(p));
    }
    if (static_cast<std::size_t>(R.size()) != m || static_cast<std::size_t>(u_lower.size()) != m ||
        static_cast<std::size_t>(u_upper.size()) != m) {
        throw ConfigError("mpc: R and bounds need one entry per input");
    }
    if ((Q.array() < 0.0).any() || (R.array() < 0.0).any()) {
        throw ConfigError("mpc: weights must be non-negative");
    }
    if ((u_lower.array() > u_upper.array()).any()) throw ConfigError("mpc: u_lower > u_upper");
}

Vector physical_state_weights(std::size_t lifted_dim, std::size_t n_joints, double w_angle,
                              double w_vel) {
    if (lifted_dim < 2 * n_joints) throw ConfigError("weights: lifted dimension too small");
    Vector Q = Vector::Zero(static_cast<Eigen::Index>(lifted_dim));
    const auto nj = static_cast<Eigen::Index>(n_joints);
    Q.head(nj).setConstant(w_angle);
    Q.segment(nj, nj).setConstant(w_vel);
    return Q;
}

LinearModel LinearModel::from(const KoopmanModel& m) {
    return {m.A, m.B, Vector::Zero(m.A.rows())};
}

AugmentedModel augment(const LinearModel& model) {
    const Eigen::Index p = model.A.rows();
    const Eigen::Index m = model.B.cols();
    if (model.A.cols() != p || model.B.rows() != p) throw InputError("augment: A, B mismatch");
    AugmentedModel am;
    am.p = static_cast<std::size_t>(p);
    am.m = static_cast<std::size_t>(m);
    am.Ahat = Matrix::Zero(p + m, p + m);
    am.Ahat.topLeftCorner(p, p) = model.A;
    am.Ahat.topRightCorner(p, m) = model.B;
    am.Ahat.bottomRightCorner(m, m).setIdentity();
    am.Bhat = Matrix::Zero(p + m, m);
    am.Bhat.topRows(p) = model.B;
    am.Bhat.bottomRows(m).setIdentity();
    am.drift_hat = Vector::Zero(p + m);
    if (model.drift.size() == p) am.drift_hat.head(p) = model.drift;
    return am;
}

AugmentedModel augment(const KoopmanModel& model) { return augment(LinearModel::from(model)); }

PredictionMatrices prediction_matrices(const AugmentedModel& am, std::size_t horizon) {
    if (horizon == 0) throw InputError("prediction_matrices: horizon must be at least 1");
    const auto H = static_cast<Eigen::Index>(horizon);
    const auto nz = static_cast<Eigen::Index>(am.p + am.m);
    const auto m = static_cast<Eigen::Index>(am.m);

    PredictionMatrices pm;
    pm.horizon = horizon;
    pm.p = am.p;
    pm.m = am.m;
    pm.Apred.resize(H * nz, nz);
    pm.Bpred = Matrix::Zero(H * nz, H * m);
    pm.Wpred.resize(H * nz);

    // Ahat^k Bhat for k = 0..H-1, one multiplication per step.
    std::vector<Matrix> powers_b(horizon);
    powers_b[0] = am.Bhat;
    Matrix power = am.Ahat;
    Vector w = am.drift_hat;
    for (Eigen::Index i = 0; i < H; ++i) {
        pm.Apred.middleRows(i * nz, nz) = power;
        pm.Wpred.segment(i * nz, nz) = w;
        if (i + 1 < H) {
            power = am.Ahat * power;
            w = am.Ahat * w + am.drift_hat;
            powers_b[i + 1] = am.Ahat * powers_b[i];
        }
    }
    for (Eigen::Index i = 0; i < H; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            pm.Bpred.block(i * nz, j * m, nz, m) = powers_b[static_cast<std::size_t>(i - j)];
        }
    }
    return pm;
}

Matrix lift_reference(const LiftingDictionary& d, const Matrix& ref_window, std::size_t m) {
    const auto p = static_cast<Eigen::Index>(d.lifted_dim());
    Matrix r = Matrix::Zero(p + static_cast<Eigen::Index>(m), ref_window.cols());
    r.topRows(p) = d.lift_matrix(ref_window);
    return r;
}

Matrix cumulative_sum_matrix(std::size_t horizon, std::size_t m) {
    const auto H = static_cast<Eigen::Index>(horizon);
    const auto mm = static_cast<Eigen::Index>(m);
    Matrix C = Matrix::Zero(H * mm, H * mm);
    for (Eigen::Index i = 0; i < H; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            C.block(i * mm, j * mm, mm, mm).setIdentity();
        }
    }
    return C;
}

QpProblem condense(const PredictionMatrices& pm, const MpcConfig& cfg, const Vector& zhat0,
                   const Matrix& lifted_ref, const Vector& u_prev) {
    const auto H = static_cast<Eigen::Index>(pm.horizon);
    const auto p = static_cast<Eigen::Index>(pm.p);
    const auto m = static_cast<Eigen::Index>(pm.m);
    const Eigen::Index nz = p + m;
    cfg.validate(pm.p, pm.m);
    if (cfg.horizon != pm.horizon) throw InputError("condense: horizon mismatch");
    if (zhat0.size() != nz) throw InputError("condense: zhat0 must have p + m entries");
    if (lifted_ref.rows() != nz || lifted_ref.cols() != H) {
        throw InputError("condense: lifted reference must be (p + m) x H");
    }
    if (u_prev.size() != m) throw InputError("condense: u_prev must have m entries");

    Vector qbar(H * nz), rbar(H * m);
    for (Eigen::Index i = 0; i < H; ++i) {
        qbar.segment(i * nz, p) = cfg.Q;
        qbar.segment(i * nz + p, m).setZero();
        rbar.segment(i * m, m) = cfg.R;
    }
    const Vector r = lifted_ref.reshaped();

    const Matrix QB = qbar.asDiagonal() * pm.Bpred;
    QpProblem qp;
    qp.P.noalias() = 2.0 * pm.Bpred.transpose() * QB;
    qp.P.diagonal() += 2.0 * rbar;
    qp.P = 0.5 * (qp.P + qp.P.transpose()).eval();
    const Vector free_response = pm.Apred * zhat0 + pm.Wpred - r;
    qp.q.noalias() = 2.0 * QB.transpose() * free_response;

    qp.G = cumulative_sum_matrix(pm.horizon, pm.m);
    qp.lower = (cfg.u_lower - u_prev).replicate(H, 1);
    qp.upper = (cfg.u_upper - u_prev).replicate(H, 1);
    return qp;
}

WarmStart shift_warm_start(const Vector& x, const Vector& y, std::size_t m) {
    const auto mm = static_cast<Eigen::Index>(m);
    WarmStart w;
    w.x = Vector::Zero(x.size());
    w.y = Vector::Zero(y.size());
    if (x.size() > mm) w.x.head(x.size() - mm) = x.tail(x.size() - mm);
    if (y.size() > mm) w.y.head(y.size() - mm) = y.tail(y.size() - mm);
    return w;
}

MpcStepResult mpc_step(const LinearModel& model, const MpcConfig& cfg, const Vector& x0,
                       const Vector& u_prev, const Matrix& ref_window,
                       const LiftingDictionary& d, QpSolver& solver,
                       const std::optional<WarmStart>& warm) {
    const std::size_t p = d.lifted_dim();
    const std::size_t m = model.input_dim();
    if (model.state_dim() != p) throw InputError("mpc_step: model and dictionary disagree on p");
    if (static_cast<std::size_t>(ref_window.cols()) != cfg.horizon) {
        throw InputError("mpc_step: reference window must have H columns");
    }

    Vector zhat0(p + m);
    zhat0 << d.lift(x0), u_prev;
    const PredictionMatrices pm = prediction_matrices(augment(model), cfg.horizon);
    const QpProblem qp = condense(pm, cfg, zhat0, lift_reference(d, ref_window, m), u_prev);

    const QpSolution sol = solver.solve(qp, warm);
    if (sol.status == QpStatus::Infeasible) throw ControllerError("mpc_step: QP infeasible");

    MpcStepResult out;
    out.delta_u = sol.x;
    const auto mm = static_cast<Eigen::Index>(m);
    out.u_applied = (u_prev + sol.x.head(mm)).cwiseMax(cfg.u_lower).cwiseMin(cfg.u_upper);
    out.diagnostics.status = sol.status;
    out.diagnostics.objective = qp.objective(sol.x);
    out.diagnostics.iterations = sol.iterations;
    out.diagnostics.primal_residual = sol.primal_residual;
    out.diagnostics.dual_residual = sol.dual_residual;
    out.next_warm = shift_warm_start(sol.x, sol.y, m);
    return out;
}

MpcStepResult mpc_step(const KoopmanModel& model, const MpcConfig& cfg, const Vector& x0,
                       const Vector& u_prev, const Matrix& ref_window,
                       const LiftingDictionary& d, QpSolver& solver,
                       const std::optional<WarmStart>& warm) {
    return mpc_step(LinearModel::from(model), cfg, x0, u_prev, ref_window, d, solver, warm);
}

}  // namespace kmpc
