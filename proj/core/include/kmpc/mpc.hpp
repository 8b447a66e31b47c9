#pragma once

#include <cstddef>
#include <optional>

#include "kmpc/dictionary.hpp"
#include "kmpc/edmd.hpp"
#include "kmpc/qp_solver.hpp"
#include "kmpc/types.hpp"

namespace kmpc {

/// Weights and limits of the incremental-input MPC.
struct MpcConfig {
    std::size_t horizon = 30;
    Vector Q;        ///< diagonal weights on the p lifted coordinates
    Vector R;        ///< diagonal weights on the m input increments
    Vector u_lower;  ///< absolute input bounds
    Vector u_upper;

    /// Throws ConfigError on negative weights, H == 0 or crossed bounds.
    void validate(std::size_t p, std::size_t m) const;
};

/// Q that weights only the first n_angles entries with w_angle and the next
/// n_vel entries with w_vel; nonlinear observables get zero weight.
Vector physical_state_weights(std::size_t lifted_dim, std::size_t n_joints, double w_angle,
                              double w_vel);

/// z+ = A z + B u + drift. KMPC models have zero drift; the linearization
/// baseline carries the Taylor remainder there.
struct LinearModel {
    Matrix A;
    Matrix B;
    Vector drift;

    static LinearModel from(const KoopmanModel& m);
    std::size_t state_dim() const { return static_cast<std::size_t>(A.rows()); }
    std::size_t input_dim() const { return static_cast<std::size_t>(B.cols()); }
};

/// zhat = [z; u_prev], zhat+ = Ahat zhat + Bhat du + drift_hat.
struct AugmentedModel {
    Matrix Ahat;  ///< [[A, B], [0, I]]
    Matrix Bhat;  ///< [[B], [I]]
    Vector drift_hat;  ///< [drift; 0]
    std::size_t p = 0;
    std::size_t m = 0;
};

AugmentedModel augment(const LinearModel& model);
AugmentedModel augment(const KoopmanModel& model);

/// Stacked predictions z = Apred zhat0 + Bpred du + Wpred over steps 1..H.
struct PredictionMatrices {
    Matrix Apred;  ///< H(p+m) x (p+m), block i = Ahat^(i+1)
    Matrix Bpred;  ///< H(p+m) x Hm, block (i,j) = Ahat^(i-j) Bhat for i >= j
    Vector Wpred;  ///< H(p+m), accumulated drift
    std::size_t horizon = 0;
    std::size_t p = 0;
    std::size_t m = 0;
};

/// Builds the matrices by forward iteration of the augmented model.
PredictionMatrices prediction_matrices(const AugmentedModel& am, std::size_t horizon);

/// (p+m) x H matrix with columns [Psi(r_j); 0_m].
Matrix lift_reference(const LiftingDictionary& d, const Matrix& ref_window, std::size_t m);

/// Lower block-triangular ones matrix L_1 (x) I_m.
Matrix cumulative_sum_matrix(std::size_t horizon, std::size_t m);

/// Condensed QP in the input increments, 1/2 du'P du + q'du with
/// P = 2(Bpred' Qbar Bpred + Rbar), q = 2 Bpred' Qbar (Apred zhat0 + Wpred - r)
/// and bounds u_l - u_prev <= C_delta du <= u_u - u_prev.
QpProblem condense(const PredictionMatrices& pm, const MpcConfig& cfg, const Vector& zhat0,
                   const Matrix& lifted_ref, const Vector& u_prev);

struct MpcDiagnostics {
    QpStatus status = QpStatus::MaxIterations;
    double objective = 0.0;
    std::size_t iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
};

struct MpcStepResult {
    Vector u_applied;
    Vector delta_u;  ///< full increment sequence, length Hm
    MpcDiagnostics diagnostics;
    WarmStart next_warm;  ///< solution shifted one step, zero padded
};

/// Shifts a horizon solution one step forward and pads with zeros.
WarmStart shift_warm_start(const Vector& x, const Vector& y, std::size_t m);

/// One controller cycle on a lifted linear model: lift x0, condense against
/// the lifted reference window (n x H columns r_{k+1..k+H}), solve, and
/// return u_prev + du_0 clamped to [u_l, u_u]. Throws ControllerError when the
/// QP is infeasible.
MpcStepResult mpc_step(const LinearModel& model, const MpcConfig& cfg, const Vector& x0,
                       const Vector& u_prev, const Matrix& ref_window,
                       const LiftingDictionary& d, QpSolver& solver,
                       const std::optional<WarmStart>& warm = std::nullopt);

MpcStepResult mpc_step(const KoopmanModel& model, const MpcConfig& cfg, const Vector& x0,
                       const Vector& u_prev, const Matrix& ref_window,
                       const LiftingDictionary& d, QpSolver& solver,
                       const std::optional<WarmStart>& warm = std::nullopt);

}  // namespace kmpc
