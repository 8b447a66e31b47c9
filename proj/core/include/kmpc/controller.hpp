#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kmpc/baselines.hpp"
#include "kmpc/buffer.hpp"
#include "kmpc/dictionary.hpp"
#include "kmpc/edmd.hpp"
#include "kmpc/mpc.hpp"
#include "kmpc/plant.hpp"
#include "kmpc/qp_solver.hpp"

namespace kmpc {

enum class ControllerMode { Adaptive, Static, Linearization };

ControllerMode mode_from_string(const std::string& s);
const char* to_string(ControllerMode m);

struct PrecedingExperiment {
    enum class Kind { SinusoidalOpenLoop, LinearizationTracking };

    Kind kind = Kind::SinusoidalOpenLoop;
    double duration = 2.0;  ///< seconds; the run continues until the buffer is full
    Vector amplitude;       ///< N m per motor
    double frequency = 1.0; ///< Hz
    Vector phase;           ///< rad per motor, empty means all zero
};

/// Goal test: every |θ_i - θf_i| < tol_angle and every |ω_i| < tol_vel.
bool goal_reached(const Vector& x, const Vector& xf, double tol_angle = 0.05,
                  double tol_vel = 0.1);

/// Plant plus control clock, advanced one control interval at a time.
class SimulatedPlant {
public:
    SimulatedPlant(PlantParams params, PlantState initial, ControlClock clock,
                   double max_substep = 1e-3);

    const PlantParams& params() const { return params_; }
    const PlantState& state() const { return state_; }
    double time() const { return state_.t; }

    /// Disturbance windows are interpreted relative to `offset` seconds.
    void set_disturbance(Disturbance d, double offset);
    /// Applies u (clamped) until the next control timestamp; returns the interval.
    double advance(const Vector& u_motor);
    /// Moves the plant back to given joint state, keeping the clock running.
    void reset_state(const Vector& x);

private:
    PlantParams params_;
    PlantState state_;
    ControlClock clock_;
    double max_substep_;
    Disturbance dist_;
};

struct PrecedingReport {
    std::size_t cycles = 0;
    double max_excursion = 0.0;  ///< max |θ_i| observed
    bool excursion_warning = false;
    Vector last_u;
};

/// Linearization-baseline settings shared by the static preceding experiment
/// and the linearization controller.
struct LinearizationSettings {
    PlantParams model;  ///< internal model of the controller
    MpcConfig mpc;
    double dt = 0.01;   ///< discretization step of the linearized model
};

/// Fills `buffer` from an empty state. Open-loop kind applies
/// amplitude * sin(2 pi f t + phase); tracking kind runs the linearization
/// MPC along `reference`. Records one sample per control cycle until the
/// duration has elapsed and the buffer is full.
PrecedingReport run_preceding_experiment(const PrecedingExperiment& pe, SimulatedPlant& plant,
                                         TrajectoryBuffer& buffer,
                                         const ReferenceTrajectory* reference = nullptr,
                                         const LinearizationSettings* lin = nullptr,
                                         const SolverConfig& solver_cfg = {},
                                         double max_excursion = 0.75 * 3.14159265358979323846);

struct EpisodeSettings {
    ControllerMode mode = ControllerMode::Adaptive;
    MpcConfig kmpc;               ///< used by adaptive and static modes (lifted Q)
    LinearizationSettings linearization;
    PrecedingExperiment preceding;
    std::size_t buffer_capacity = TrajectoryBuffer::kDefaultCapacity;
    std::size_t refit_every = 1;
    FitOptions fit;
    double goal_tol_angle = 0.05;
    double goal_tol_vel = 0.1;
    double duration = 6.0;        ///< tracking phase length, s
    /// Static mode restarts the tracking phase from the reference start state.
    bool static_reset_to_start = true;
    std::size_t model_dump_every = 0;  ///< 0 disables model snapshots
    SolverConfig solver;
    double max_excursion = 0.75 * 3.14159265358979323846;
};

struct CycleRecord {
    double t = 0.0;   ///< seconds since tracking start
    Vector x;
    Vector u;
    Vector ref_x;
    bool refit = false;
    bool buffer_updated = false;
    MpcDiagnostics diagnostics;
};

struct ModelSnapshot {
    std::size_t cycle = 0;
    double t = 0.0;
    KoopmanModel model;
};

struct EpisodeLog {
    ControllerMode mode = ControllerMode::Adaptive;
    std::vector<CycleRecord> cycles;
    std::vector<ModelSnapshot> snapshots;
    PrecedingReport preceding;
    std::optional<double> goal_time;     ///< first cycle satisfying goal_reached
    std::optional<double> updates_stopped_at;
    std::size_t refits = 0;
    std::size_t max_iter_hits = 0;
    std::vector<double> refit_seconds;   ///< wall clock per refit
    bool aborted = false;
    std::string abort_reason;
    double tracking_start = 0.0;         ///< simulation time at tracking start
    /// Last model used by a KMPC mode.
    std::optional<KoopmanModel> final_model;

    /// Columns t, q_i..., qdot_i..., u_i..., ref_q_i..., refit_flag, solver_iters.
    void write_csv(std::ostream& os, std::size_t dof) const;
};

/// Runs the preceding experiment and the tracking loop on `plant`:
/// refit (adaptive, or once for static), build and solve the QP over the
/// reference window, apply, and push the sample while updates are enabled.
/// Buffer updates stop for good once the goal state is reached. Errors that
/// end the loop are recorded as an aborted log instead of thrown.
EpisodeLog control_episode(const EpisodeSettings& settings, SimulatedPlant& plant,
                           const ReferenceTrajectory& reference, const LiftingDictionary& dict,
                           const Disturbance& disturbance = {});

}  // namespace kmpc
