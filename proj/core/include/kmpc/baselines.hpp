#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "kmpc/mpc.hpp"
#include "kmpc/plant.hpp"
#include "kmpc/qp_solver.hpp"
#include "kmpc/types.hpp"

namespace kmpc {

/// f(x, u) for a continuous-time or discrete-time system.
using Dynamics = std::function<Vector(const Vector& x, const Vector& u)>;

/// Discrete affine model x+ = Ad x + Bd u + affine around an operating point.
struct LinearizedModel {
    Matrix Ad;
    Matrix Bd;
    Vector affine;
    double dt = 0.0;

    LinearModel as_linear_model() const { return {Ad, Bd, affine}; }
};

/// exp([[A, B, c], [0, 0, 0]] dt) by truncated Taylor series with scaling
/// and squaring; returns the zero-order-hold discretization of
/// xdot = A x + B u + c.
LinearizedModel discretize_zoh(const Matrix& A, const Matrix& B, const Vector& c, double dt);

/// Central-difference Jacobians of a continuous-time f at (x0, u0), then ZOH
/// discretization of the first order Taylor expansion.
LinearizedModel linearize(const Dynamics& f, const Vector& x0, const Vector& u0, double dt,
                          double fd_step = 1e-6);

/// Linearizes the nominal plant dynamics (no clamping, no disturbance).
LinearizedModel linearize(const PlantParams& p, const PlantState& s, const Vector& u0,
                          double dt);

/// mpc_step with the identity dictionary on an affine linearized model.
MpcStepResult linearization_mpc_step(const LinearizedModel& model, const MpcConfig& cfg,
                                     const Vector& x0, const Vector& u_prev,
                                     const Matrix& ref_window, QpSolver& solver,
                                     const std::optional<WarmStart>& warm = std::nullopt);

/// Relinearizes the plant at (x0, u_prev) and runs one MPC cycle.
MpcStepResult linearization_mpc_step(const PlantParams& p, const MpcConfig& cfg,
                                     const Vector& x0, const Vector& u_prev,
                                     const Matrix& ref_window, double dt, QpSolver& solver,
                                     const std::optional<WarmStart>& warm = std::nullopt);

/// Sampled state/torque reference, X has T+1 columns and U has T.
struct ReferenceTrajectory {
    Matrix X;
    Matrix U;
    double dt = 0.0;

    std::size_t steps() const { return static_cast<std::size_t>(U.cols()); }
    double duration() const { return dt * static_cast<double>(X.cols() - 1); }
    Vector initial_state() const { return X.col(0); }
    Vector final_state() const { return X.col(X.cols() - 1); }

    /// PCHIP interpolation of every state row at time t; the end states are
    /// held outside [0, duration].
    Vector state_at(double t) const;
    /// state_at for each entry of times, one column per time.
    Matrix sample(std::span<const double> times) const;
    /// n x H window with columns state_at(t0 + j * step), j = 1..H.
    Matrix window(double t0, double step, std::size_t horizon) const;

    /// Columns t, q..., qdot..., u...; the last row repeats the final torque.
    void write_csv(std::ostream& os) const;
    /// Throws InputError on malformed content or non-uniform time steps.
    static ReferenceTrajectory read_csv(std::istream& is, std::size_t dof);
    /// Constant reference holding x for the given duration.
    static ReferenceTrajectory constant(const Vector& x, std::size_t m, double duration,
                                        double dt);
};

struct IlqrWeights {
    Vector Q;   ///< running state weights (diagonal)
    Vector R;   ///< running input weights (diagonal)
    Vector Qf;  ///< terminal state weights (diagonal)
};

struct IlqrOptions {
    std::size_t max_iterations = 200;
    double cost_tolerance = 1e-8;
    double mu_initial = 1e-6;
    double mu_min = 1e-6;
    double mu_max = 1e10;
    double mu_factor = 10.0;
    double fd_step = 1e-6;
    std::size_t max_line_search = 12;
};

struct IlqrResult {
    ReferenceTrajectory trajectory;
    double cost = 0.0;
    std::size_t iterations = 0;   ///< accepted iterations
    bool converged = false;
    std::vector<double> cost_history;  ///< cost after every accepted iteration, [0] initial
};

/// Unconstrained Gauss–Newton iLQR on a discrete-time f with quadratic cost
/// sum 1/2 (x-xf)'Q(x-xf) + 1/2 u'Ru plus terminal 1/2 (x_T-xf)'Qf(x_T-xf).
/// Throws GenerationError if the cost becomes non-finite.
IlqrResult ilqr_solve(const Dynamics& f_discrete, const Vector& x0, const Vector& xf,
                      std::size_t T, double dt, const IlqrWeights& w, const Matrix& U_init,
                      const IlqrOptions& opts = {});

/// Swing-up style reference on the nominal plant, discretized with RK4 at
/// 1 ms substeps. Torques are not limited.
IlqrResult ilqr_reference(const PlantParams& p, const Vector& x0, const Vector& xf,
                          std::size_t T, double dt, const IlqrWeights& w,
                          const IlqrOptions& opts = {});

/// Unclamped RK4 propagation of the nominal plant over dt.
Vector plant_discrete_step(const PlantParams& p, const Vector& x, const Vector& u, double dt,
                           double max_substep = 1e-3);

}  // namespace kmpc
