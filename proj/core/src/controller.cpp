#include "kmpc/controller.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <ostream>

#include "kmpc/errors.hpp"

namespace kmpc {

ControllerMode mode_from_string(const std::string& s) {
    if (s == "adaptive") return ControllerMode::Adaptive;
    if (s == "static") return ControllerMode::Static;
    if (s == "linearization") return ControllerMode::Linearization;
    throw ConfigError("unknown controller mode '" + s + "'");
}

const char* to_string(ControllerMode m) {
    switch (m) {
        case ControllerMode::Adaptive: return "adaptive";
        case ControllerMode::Static: return "static";
        case ControllerMode::Linearization: return "linearization";
    }
    return "adaptive";
}

bool goal_reached(const Vector& x, const Vector& xf, double tol_angle, double tol_vel) {
    if (x.size() != xf.size() || x.size() % 2 != 0) throw InputError("goal_reached: dimension mismatch");
    const Eigen::Index dof = x.size() / 2;
    for (Eigen::Index i = 0; i < dof; ++i) {
        if (!(std::abs(x[i] - xf[i]) < tol_angle)) return false;
        if (!(std::abs(x[dof + i]) < tol_vel)) return false;
    }
    return true;
}

SimulatedPlant::SimulatedPlant(PlantParams params, PlantState initial, ControlClock clock,
                               double max_substep)
    : params_(std::move(params)),
      state_(std::move(initial)),
      clock_(clock),
      max_substep_(max_substep) {
    params_.validate();
}

void SimulatedPlant::set_disturbance(Disturbance d, double offset) {
    d.t_start += offset;
    d.t_end += offset;
    dist_ = std::move(d);
}

double SimulatedPlant::advance(const Vector& u_motor) {
    const double dt = clock_.next_interval();
    state_ = step(params_, state_, u_motor, dist_, dt, max_substep_);
    return dt;
}

void SimulatedPlant::reset_state(const Vector& x) {
    const double t = state_.t;
    state_ = PlantState::from_x(x, t);
}

PrecedingReport run_preceding_experiment(const PrecedingExperiment& pe, SimulatedPlant& plant,
                                         TrajectoryBuffer& buffer,
                                         const ReferenceTrajectory* reference,
                                         const LinearizationSettings* lin,
                                         const SolverConfig& solver_cfg, double max_excursion) {
    if (!buffer.empty()) throw InputError("preceding experiment: buffer must start empty");
    if (!(pe.duration > 0.0)) throw ConfigError("preceding experiment: duration must be positive");
    const auto m = static_cast<Eigen::Index>(plant.params().dof);
    const bool tracking = pe.kind == PrecedingExperiment::Kind::LinearizationTracking;
    if (tracking && (reference == nullptr || lin == nullptr)) {
        throw ConfigError("preceding experiment: tracking needs a reference and a baseline model");
    }
    if (!tracking && pe.amplitude.size() != m) {
        throw ConfigError("preceding experiment: amplitude needs one entry per motor");
    }

    QpSolver solver(solver_cfg);
    std::optional<WarmStart> warm;
    PrecedingReport report;
    Vector u = Vector::Zero(m);
    const double t_begin = plant.time();
    const std::size_t guard = 10'000'000;

    while ((plant.time() - t_begin < pe.duration || !buffer.full()) && report.cycles < guard) {
        const double t_rel = plant.time() - t_begin;
        const Vector x = plant.state().x();
        if (tracking) {
            const Matrix window = reference->window(t_rel, lin->dt, lin->mpc.horizon);
            const MpcStepResult r =
                linearization_mpc_step(lin->model, lin->mpc, x, u, window, lin->dt, solver, warm);
            u = r.u_applied;
            warm = r.next_warm;
        } else {
            for (Eigen::Index i = 0; i < m; ++i) {
                const double phase = pe.phase.size() == m ? pe.phase[i] : 0.0;
                u[i] = pe.amplitude[i] *
                       std::sin(2.0 * std::numbers::pi * pe.frequency * t_rel + phase);
            }
        }
        u = clamp_torque(plant.params(), u);
        buffer.push({plant.time(), x, u});
        report.max_excursion = std::max(report.max_excursion, x.head(m).cwiseAbs().maxCoeff());
        plant.advance(u);
        ++report.cycles;
    }
    report.excursion_warning = !tracking && report.max_excursion > max_excursion;
    report.last_u = u;
    return report;
}

void EpisodeLog::write_csv(std::ostream& os, std::size_t dof) const {
    os << "t";
    for (std::size_t i = 0; i < dof; ++i) os << ",q_" << i;
    for (std::size_t i = 0; i < dof; ++i) os << ",qdot_" << i;
    for (std::size_t i = 0; i < dof; ++i) os << ",u_" << i;
    for (std::size_t i = 0; i < dof; ++i) os << ",ref_q_" << i;
    os << ",refit_flag,solver_iters\n";
    const auto old = os.precision(10);
    const auto d = static_cast<Eigen::Index>(dof);
    for (const auto& c : cycles) {
        os << c.t;
        for (Eigen::Index i = 0; i < 2 * d; ++i) os << "," << c.x[i];
        for (Eigen::Index i = 0; i < d; ++i) os << "," << c.u[i];
        for (Eigen::Index i = 0; i < d; ++i) os << "," << c.ref_x[i];
        os << "," << (c.refit ? 1 : 0) << "," << c.diagnostics.iterations << "\n";
    }
    os.precision(old);
}

EpisodeLog control_episode(const EpisodeSettings& settings, SimulatedPlant& plant,
                           const ReferenceTrajectory& reference, const LiftingDictionary& dict,
                           const Disturbance& disturbance) {
    using Clock = std::chrono::steady_clock;
    const std::size_t dof = plant.params().dof;
    const auto m = static_cast<Eigen::Index>(dof);
    const bool kmpc = settings.mode != ControllerMode::Linearization;
    if (static_cast<std::size_t>(reference.X.rows()) != 2 * dof) {
        throw InputError("control_episode: reference has wrong state dimension");
    }
    if (kmpc) settings.kmpc.validate(dict.lifted_dim(), dof);
    settings.linearization.mpc.validate(2 * dof, dof);

    EpisodeLog log;
    log.mode = settings.mode;
    TrajectoryBuffer buffer(settings.buffer_capacity);
    Vector u_prev = Vector::Zero(m);

    try {
        if (kmpc) {
            log.preceding = run_preceding_experiment(settings.preceding, plant, buffer, &reference,
                                                     &settings.linearization, settings.solver,
                                                     settings.max_excursion);
            u_prev = log.preceding.last_u;
            if (settings.mode == ControllerMode::Static && settings.static_reset_to_start) {
                plant.reset_state(reference.initial_state());
                u_prev.setZero();
            }
        }
    } catch (const Error& e) {
        log.aborted = true;
        log.abort_reason = std::string("preceding experiment: ") + e.what();
        return log;
    }

    log.tracking_start = plant.time();
    plant.set_disturbance(disturbance, log.tracking_start);
    const Vector xf = reference.final_state();

    QpSolver solver(settings.solver);
    std::optional<WarmStart> warm;
    std::optional<KoopmanModel> model;
    bool buffer_changed = true;
    bool updates_stopped = false;
    const std::size_t refit_every = std::max<std::size_t>(1, settings.refit_every);

    for (std::size_t k = 0;; ++k) {
        const double t_rel = plant.time() - log.tracking_start;
        if (t_rel > settings.duration + 1e-12) break;
        const Vector x = plant.state().x();

        if (goal_reached(x, xf, settings.goal_tol_angle, settings.goal_tol_vel)) {
            if (!log.goal_time) log.goal_time = t_rel;
            if (!updates_stopped && settings.mode == ControllerMode::Adaptive) {
                log.updates_stopped_at = t_rel;
            }
            updates_stopped = true;
        }

        CycleRecord rec;
        rec.t = t_rel;
        rec.x = x;
        try {
            MpcStepResult r;
            if (kmpc) {
                const bool want_refit = !model || (settings.mode == ControllerMode::Adaptive &&
                                                   buffer_changed && k % refit_every == 0);
                if (want_refit) {
                    const auto t0 = Clock::now();
                    const ResampledData data = buffer.resample(buffer.mean_dt());
                    model = fit(dict, data.X, data.Xbar, data.U, data.dt, settings.fit);
                    log.refit_seconds.push_back(
                        std::chrono::duration<double>(Clock::now() - t0).count());
                    ++log.refits;
                    buffer_changed = false;
                    rec.refit = true;
                    if (settings.model_dump_every > 0 &&
                        (log.refits - 1) % settings.model_dump_every == 0) {
                        log.snapshots.push_back({k, t_rel, *model});
                    }
                }
                const Matrix window = reference.window(t_rel, model->dt, settings.kmpc.horizon);
                r = mpc_step(*model, settings.kmpc, x, u_prev, window, dict, solver, warm);
            } else {
                const auto& lin = settings.linearization;
                const Matrix window = reference.window(t_rel, lin.dt, lin.mpc.horizon);
                r = linearization_mpc_step(lin.model, lin.mpc, x, u_prev, window, lin.dt, solver,
                                           warm);
            }
            warm = r.next_warm;
            rec.u = clamp_torque(plant.params(), r.u_applied);
            rec.diagnostics = r.diagnostics;
            if (r.diagnostics.status == QpStatus::MaxIterations) ++log.max_iter_hits;
        } catch (const Error& e) {
            log.aborted = true;
            log.abort_reason = e.what();
            break;
        }
        rec.ref_x = reference.state_at(t_rel);

        if (settings.mode == ControllerMode::Adaptive && !updates_stopped) {
            buffer.push({plant.time(), x, rec.u});
            buffer_changed = true;
            rec.buffer_updated = true;
        }
        u_prev = rec.u;
        log.cycles.push_back(rec);

        try {
            plant.advance(rec.u);
        } catch (const Error& e) {
            log.aborted = true;
            log.abort_reason = e.what();
            break;
        }
    }
    log.final_model = model;
    return log;
}

}  // namespace kmpc
