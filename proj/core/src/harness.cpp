#include "kmpc/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "kmpc/dictionary.hpp"
#include "kmpc/errors.hpp"

namespace kmpc {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& j, const char* section, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(std::string(section) + ": expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : j.items()) {
        if (!ok.count(key)) throw ConfigError(std::string(section) + ": unknown key '" + key + "'");
    }
}

Vector vector_from(const json& j, const char* what) {
    if (!j.is_array()) throw ConfigError(std::string(what) + ": expected an array");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ConfigError(std::string(what) + ": expected numbers");
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    if (!v.allFinite()) throw ConfigError(std::string(what) + ": non-finite value");
    return v;
}

Vector sized_vector(const json& j, const char* what, std::size_t size) {
    Vector v = vector_from(j, what);
    if (static_cast<std::size_t>(v.size()) != size) {
        throw ConfigError(std::string(what) + ": expected " + std::to_string(size) + " entries");
    }
    return v;
}

double number(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw ConfigError(std::string(key) + ": expected a number");
    const double v = j.at(key).get<double>();
    if (!std::isfinite(v)) throw ConfigError(std::string(key) + ": non-finite value");
    return v;
}

std::size_t count(const json& j, const char* key, std::size_t fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number_unsigned()) {
        throw ConfigError(std::string(key) + ": expected a non-negative integer");
    }
    return j.at(key).get<std::size_t>();
}

std::string text(const json& j, const char* key, const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_string()) throw ConfigError(std::string(key) + ": expected a string");
    return j.at(key).get<std::string>();
}

const json& section(const json& j, const char* key) {
    static const json empty = json::object();
    return j.contains(key) ? j.at(key) : empty;
}

PlantParams parse_plant(const json& j, std::size_t joints) {
    PlantParams p = PlantParams::defaults(joints);
    if (j.contains("mass")) p.mass = sized_vector(j["mass"], "plant.mass", joints);
    if (j.contains("length")) p.length = sized_vector(j["length"], "plant.length", joints);
    if (j.contains("com")) p.com = sized_vector(j["com"], "plant.com", joints);
    if (j.contains("inertia")) p.inertia = sized_vector(j["inertia"], "plant.inertia", joints);
    if (j.contains("friction")) p.friction = sized_vector(j["friction"], "plant.friction", joints);
    p.gravity = number(j, "gravity", p.gravity);
    p.torque_limit = number(j, "torque_limit", p.torque_limit);
    p.payload_mass = number(j, "payload_mass", p.payload_mass);
    if (j.contains("structure_matrix")) {
        const json& s = j["structure_matrix"];
        if (!s.is_array() || s.size() != joints) {
            throw ConfigError("plant.structure_matrix: expected a dof x dof array");
        }
        for (std::size_t r = 0; r < joints; ++r) {
            p.S.row(static_cast<Eigen::Index>(r)) =
                sized_vector(s[r], "plant.structure_matrix", joints).transpose();
        }
    }
    p.validate();
    return p;
}

MpcConfig parse_mpc_weights(const json& j, const char* what, std::size_t lifted_dim,
                            std::size_t joints, std::size_t horizon, const Vector& lo,
                            const Vector& hi) {
    check_keys(j, what, {"q_angle", "q_velocity", "q", "r", "dt"});
    MpcConfig cfg;
    cfg.horizon = horizon;
    if (j.contains("q")) {
        cfg.Q = sized_vector(j["q"], what, lifted_dim);
    } else {
        cfg.Q = physical_state_weights(lifted_dim, joints, number(j, "q_angle", 100.0),
                                       number(j, "q_velocity", 1.0));
    }
    cfg.R = j.contains("r") ? sized_vector(j["r"], what, joints)
                            : Vector::Constant(static_cast<Eigen::Index>(joints), 1.0);
    cfg.u_lower = lo;
    cfg.u_upper = hi;
    cfg.validate(lifted_dim, joints);
    return cfg;
}

}  // namespace

Scenario parse_scenario(const json& j, const fs::path& base_dir) {
    try {
        check_keys(j, "scenario", {"name", "experiment", "plant", "controller", "mpc", "solver",
                                   "preceding", "reference", "initial_state", "disturbance",
                                   "clock", "metrics", "description"});
        Scenario sc;
        sc.name = text(j, "name", "");
        if (sc.name.empty()) throw ConfigError("scenario: 'name' is required");
        for (char c : sc.name) {
            if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) {
                throw ConfigError("scenario: name may only contain [A-Za-z0-9_-]");
            }
        }
        sc.experiment = text(j, "experiment", sc.name);

        const json& pj = section(j, "plant");
        check_keys(pj, "plant", {"joints", "mass", "length", "com", "inertia", "friction",
                                 "gravity", "torque_limit", "structure_matrix", "payload_mass",
                                 "unmodeled_payload_mass"});
        sc.joints = count(pj, "joints", 1);
        if (sc.joints != 1 && sc.joints != 2) throw ConfigError("plant.joints must be 1 or 2");
        sc.nominal = parse_plant(pj, sc.joints);
        sc.plant = sc.nominal;
        sc.plant.payload_mass += number(pj, "unmodeled_payload_mass", 0.0);
        sc.plant.validate();
        const std::size_t dof = sc.joints;
        const std::size_t n = 2 * dof;

        const json& cj = section(j, "clock");
        check_keys(cj, "clock", {"mean_hz", "jitter", "seed"});
        sc.clock_hz = number(cj, "mean_hz", 100.0);
        if (!(sc.clock_hz > 0.0)) throw ConfigError("clock.mean_hz must be positive");
        sc.jitter = jitter_from_string(text(cj, "jitter", "uniform"));
        if (cj.contains("seed")) {
            if (!cj["seed"].is_number_unsigned()) throw ConfigError("clock.seed: expected an unsigned integer");
            sc.seed = cj["seed"].get<std::uint64_t>();
        }

        EpisodeSettings& ep = sc.episode;
        const json& kj = section(j, "controller");
        check_keys(kj, "controller", {"mode", "buffer_capacity", "refit_every", "pinv_tolerance",
                                      "ridge", "goal_tolerance", "episode_duration",
                                      "static_reset_to_start", "model_dump_every",
                                      "max_excursion"});
        ep.mode = mode_from_string(text(kj, "mode", "adaptive"));
        ep.buffer_capacity = count(kj, "buffer_capacity", TrajectoryBuffer::kDefaultCapacity);
        if (ep.buffer_capacity < 4) throw ConfigError("controller.buffer_capacity must be >= 4");
        ep.refit_every = count(kj, "refit_every", 1);
        if (ep.refit_every == 0) throw ConfigError("controller.refit_every must be >= 1");
        ep.fit.rel_tol = number(kj, "pinv_tolerance", kDefaultPinvTolerance);
        ep.fit.ridge = number(kj, "ridge", 0.0);
        if (ep.fit.rel_tol < 0.0 || ep.fit.ridge < 0.0) {
            throw ConfigError("controller: tolerances must be non-negative");
        }
        const json& gj = section(kj, "goal_tolerance");
        check_keys(gj, "controller.goal_tolerance", {"angle", "velocity"});
        ep.goal_tol_angle = number(gj, "angle", 0.05);
        ep.goal_tol_vel = number(gj, "velocity", 0.1);
        ep.model_dump_every = count(kj, "model_dump_every", 0);
        ep.max_excursion = number(kj, "max_excursion", ep.max_excursion);
        if (kj.contains("static_reset_to_start")) {
            if (!kj["static_reset_to_start"].is_boolean()) {
                throw ConfigError("controller.static_reset_to_start: expected a boolean");
            }
            ep.static_reset_to_start = kj["static_reset_to_start"].get<bool>();
        }

        const json& rj = section(j, "reference");
        check_keys(rj, "reference", {"source", "x0", "xf", "duration", "dt", "weights", "path",
                                     "state"});
        const std::string src = text(rj, "source", "ilqr");
        sc.ref_dt = number(rj, "dt", 0.01);
        sc.ref_duration = number(rj, "duration", 3.0);
        if (!(sc.ref_dt > 0.0) || !(sc.ref_duration > 0.0)) {
            throw ConfigError("reference: dt and duration must be positive");
        }
        if (src == "ilqr") {
            sc.reference_source = Scenario::ReferenceSource::Ilqr;
            sc.ref_x0 = rj.contains("x0") ? sized_vector(rj["x0"], "reference.x0", n)
                                          : Vector::Zero(static_cast<Eigen::Index>(n));
            if (!rj.contains("xf")) throw ConfigError("reference.xf is required for iLQR");
            sc.ref_xf = sized_vector(rj["xf"], "reference.xf", n);
            const json& wj = section(rj, "weights");
            check_keys(wj, "reference.weights", {"q", "r", "qf"});
            const auto ni = static_cast<Eigen::Index>(n);
            const auto mi = static_cast<Eigen::Index>(dof);
            sc.ilqr_weights.Q = wj.contains("q") ? sized_vector(wj["q"], "reference.weights.q", n)
                                                 : Vector::Zero(ni);
            sc.ilqr_weights.R = wj.contains("r") ? sized_vector(wj["r"], "reference.weights.r", dof)
                                                 : Vector::Constant(mi, 1.0);
            sc.ilqr_weights.Qf = wj.contains("qf")
                                     ? sized_vector(wj["qf"], "reference.weights.qf", n)
                                     : Vector::Constant(ni, 1e4);
        } else if (src == "csv") {
            sc.reference_source = Scenario::ReferenceSource::Csv;
            const std::string path = text(rj, "path", "");
            if (path.empty()) throw ConfigError("reference.path is required for csv references");
            sc.ref_csv = fs::path(path).is_absolute() ? fs::path(path) : base_dir / path;
        } else if (src == "constant") {
            sc.reference_source = Scenario::ReferenceSource::Constant;
            if (!rj.contains("state")) throw ConfigError("reference.state is required");
            sc.ref_xf = sized_vector(rj["state"], "reference.state", n);
            sc.ref_x0 = sc.ref_xf;
        } else {
            throw ConfigError("reference.source must be ilqr, csv or constant");
        }
        ep.duration = number(kj, "episode_duration", 2.0 * sc.ref_duration);
        if (!(ep.duration > 0.0)) throw ConfigError("controller.episode_duration must be positive");

        if (j.contains("initial_state")) {
            sc.initial_state = sized_vector(j["initial_state"], "initial_state", n);
        }

        const json& mj = section(j, "mpc");
        check_keys(mj, "mpc", {"horizon", "kmpc", "linearization", "u_lower", "u_upper"});
        const std::size_t H = count(mj, "horizon", 30);
        if (H == 0) throw ConfigError("mpc.horizon must be >= 1");
        const auto mi = static_cast<Eigen::Index>(dof);
        const Vector lo = mj.contains("u_lower") ? sized_vector(mj["u_lower"], "mpc.u_lower", dof)
                                                 : Vector::Constant(mi, -sc.plant.torque_limit);
        const Vector hi = mj.contains("u_upper") ? sized_vector(mj["u_upper"], "mpc.u_upper", dof)
                                                 : Vector::Constant(mi, sc.plant.torque_limit);
        const std::size_t p = make_robot_dictionary(dof).lifted_dim();
        ep.kmpc = parse_mpc_weights(section(mj, "kmpc"), "mpc.kmpc", p, dof, H, lo, hi);
        const json& lj = section(mj, "linearization");
        ep.linearization.mpc = parse_mpc_weights(lj, "mpc.linearization", n, dof, H, lo, hi);
        ep.linearization.dt = number(lj, "dt", 1.0 / sc.clock_hz);
        if (!(ep.linearization.dt > 0.0)) throw ConfigError("mpc.linearization.dt must be positive");
        ep.linearization.model = sc.nominal;

        const json& sj = section(j, "solver");
        check_keys(sj, "solver", {"rho", "sigma", "alpha", "eps_abs", "max_iterations",
                                  "check_every", "scaling_iterations", "polish"});
        ep.solver.rho = number(sj, "rho", ep.solver.rho);
        ep.solver.sigma = number(sj, "sigma", ep.solver.sigma);
        ep.solver.alpha = number(sj, "alpha", ep.solver.alpha);
        ep.solver.eps_abs = number(sj, "eps_abs", ep.solver.eps_abs);
        ep.solver.max_iterations = count(sj, "max_iterations", ep.solver.max_iterations);
        ep.solver.check_every = count(sj, "check_every", ep.solver.check_every);
        ep.solver.scaling_iterations = count(sj, "scaling_iterations", ep.solver.scaling_iterations);
        if (sj.contains("polish")) {
            if (!sj["polish"].is_boolean()) throw ConfigError("solver.polish must be a boolean");
            ep.solver.polish = sj["polish"].get<bool>();
        }
        if (!(ep.solver.rho > 0.0) || !(ep.solver.alpha > 0.0 && ep.solver.alpha < 2.0)) {
            throw ConfigError("solver: rho must be positive and alpha in (0, 2)");
        }

        const json& prj = section(j, "preceding");
        check_keys(prj, "preceding", {"kind", "duration", "amplitude", "frequency", "phase"});
        const std::string kind = text(prj, "kind", ep.mode == ControllerMode::Static
                                                       ? "linearization_tracking"
                                                       : "sinusoidal_open_loop");
        if (kind == "sinusoidal_open_loop") {
            ep.preceding.kind = PrecedingExperiment::Kind::SinusoidalOpenLoop;
        } else if (kind == "linearization_tracking") {
            ep.preceding.kind = PrecedingExperiment::Kind::LinearizationTracking;
        } else {
            throw ConfigError("preceding.kind must be sinusoidal_open_loop or linearization_tracking");
        }
        ep.preceding.duration = number(prj, "duration", 2.0);
        if (!(ep.preceding.duration > 0.0)) throw ConfigError("preceding.duration must be positive");
        ep.preceding.amplitude = prj.contains("amplitude")
                                     ? sized_vector(prj["amplitude"], "preceding.amplitude", dof)
                                     : Vector::Constant(mi, 0.5);
        ep.preceding.frequency = number(prj, "frequency", 1.0);
        if (prj.contains("phase")) ep.preceding.phase = sized_vector(prj["phase"], "preceding.phase", dof);

        const json& dj = section(j, "disturbance");
        check_keys(dj, "disturbance", {"kind", "t_start", "t_end", "magnitude"});
        sc.disturbance.kind = Disturbance::kind_from_string(text(dj, "kind", "none"));
        sc.disturbance.t_start = number(dj, "t_start", 0.0);
        sc.disturbance.t_end = number(dj, "t_end", sc.disturbance.t_start);
        if (sc.disturbance.t_end < sc.disturbance.t_start) {
            throw ConfigError("disturbance: t_end must not precede t_start");
        }
        if (dj.contains("magnitude")) sc.disturbance.magnitude = vector_from(dj["magnitude"], "disturbance.magnitude");
        if (sc.disturbance.kind == Disturbance::Kind::Impulse ||
            sc.disturbance.kind == Disturbance::Kind::ConstantPush) {
            if (static_cast<std::size_t>(sc.disturbance.magnitude.size()) != dof) {
                throw ConfigError("disturbance.magnitude needs one joint torque per joint");
            }
        } else if (sc.disturbance.kind == Disturbance::Kind::PayloadChange) {
            if (sc.disturbance.magnitude.size() != 1 || sc.disturbance.magnitude[0] < 0.0) {
                throw ConfigError("disturbance.magnitude must be a single non-negative mass");
            }
        }

        const json& metj = section(j, "metrics");
        check_keys(metj, "metrics", {"window_start"});
        sc.window_start = number(metj, "window_start", 0.75);
        return sc;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    } catch (const InputError& e) {
        throw ConfigError(e.what());
    }
}

Scenario load_scenario(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("malformed scenario file " + path.string() + ": " + e.what());
    }
    return parse_scenario(j, path.parent_path());
}

ReferenceTrajectory build_reference(const Scenario& sc) {
    const std::size_t m = sc.joints;
    switch (sc.reference_source) {
        case Scenario::ReferenceSource::Ilqr: {
            const auto T = static_cast<std::size_t>(std::llround(sc.ref_duration / sc.ref_dt));
            return ilqr_reference(sc.nominal, sc.ref_x0, sc.ref_xf, T, sc.ref_dt, sc.ilqr_weights)
                .trajectory;
        }
        case Scenario::ReferenceSource::Csv: {
            std::ifstream in(sc.ref_csv);
            if (!in) throw ConfigError("cannot open reference csv " + sc.ref_csv.string());
            return ReferenceTrajectory::read_csv(in, m);
        }
        case Scenario::ReferenceSource::Constant:
            return ReferenceTrajectory::constant(sc.ref_xf, m, sc.ref_duration, sc.ref_dt);
    }
    throw ConfigError("unknown reference source");
}

namespace {

std::vector<double> cycle_intervals(const EpisodeLog& log) {
    const std::size_t N = log.cycles.size();
    std::vector<double> dt(N, 0.0);
    for (std::size_t k = 0; k + 1 < N; ++k) dt[k] = log.cycles[k + 1].t - log.cycles[k].t;
    if (N >= 2) dt[N - 1] = dt[N - 2];
    return dt;
}

}  // namespace

std::vector<double> tmse(const EpisodeLog& log, const ReferenceTrajectory& ref,
                         double window_start) {
    const std::vector<double> dt = cycle_intervals(log);
    std::vector<double> times;
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < log.cycles.size(); ++k) {
        if (log.cycles[k].t >= window_start) {
            times.push_back(log.cycles[k].t);
            idx.push_back(k);
        }
    }
    if (idx.empty()) throw InputError("tmse: no samples at or after the window start");
    const Matrix R = ref.sample(times);
    const auto dof = static_cast<Eigen::Index>(ref.X.rows() / 2);
    std::vector<double> out(static_cast<std::size_t>(dof), 0.0);
    for (std::size_t j = 0; j < idx.size(); ++j) {
        const CycleRecord& c = log.cycles[idx[j]];
        for (Eigen::Index i = 0; i < dof; ++i) {
            const double e = c.x[i] - R(i, static_cast<Eigen::Index>(j));
            out[static_cast<std::size_t>(i)] += dt[idx[j]] * e * e;
        }
    }
    for (double& v : out) v /= static_cast<double>(idx.size());
    return out;
}

Energy energy(const EpisodeLog& log, std::size_t dof, double window_start) {
    if (log.cycles.empty()) throw InputError("energy: empty log");
    const std::vector<double> dt = cycle_intervals(log);
    const auto d = static_cast<Eigen::Index>(dof);
    Energy e;
    for (std::size_t k = 0; k < log.cycles.size(); ++k) {
        const CycleRecord& c = log.cycles[k];
        if (c.t < window_start) continue;
        const double power = c.u.head(d).dot(c.x.segment(d, d));
        if (power > 0.0) {
            e.pos += power * dt[k];
        } else {
            e.neg += power * dt[k];
        }
    }
    return e;
}

Metrics compute_metrics(const EpisodeLog& log, const ReferenceTrajectory& ref, std::size_t dof,
                        double window_start) {
    Metrics mt;
    mt.cycles = log.cycles.size();
    mt.aborted = log.aborted;
    mt.goal_time = log.goal_time;
    mt.refits = log.refits;
    mt.max_iter_hits = log.max_iter_hits;
    if (!log.cycles.empty()) {
        const bool window_has_samples = log.cycles.back().t >= window_start;
        mt.tmse = window_has_samples ? tmse(log, ref, window_start)
                                     : std::vector<double>(dof, std::nan(""));
        const Energy e = energy(log, dof, window_start);
        mt.energy_pos = e.pos;
        mt.energy_neg = e.neg;
        double sum = 0.0;
        for (const auto& c : log.cycles) {
            sum += static_cast<double>(c.diagnostics.iterations);
            mt.max_iterations = std::max(mt.max_iterations, c.diagnostics.iterations);
        }
        mt.mean_iterations = sum / static_cast<double>(log.cycles.size());
    }
    return mt;
}

ScenarioResult execute_scenario(const Scenario& sc) {
    ScenarioResult r;
    r.scenario = sc;
    r.reference = build_reference(sc);
    if (static_cast<std::size_t>(r.reference.X.rows()) != 2 * sc.joints) {
        throw ConfigError("reference dimension does not match the plant");
    }
    Vector x0 = r.reference.initial_state();
    if (sc.initial_state) {
        x0 = *sc.initial_state;
    } else if (sc.reference_source == Scenario::ReferenceSource::Constant) {
        x0.setZero();
    }
    SimulatedPlant plant(sc.plant, PlantState::from_x(x0, 0.0),
                         ControlClock(sc.clock_hz, sc.jitter, sc.seed));
    const LiftingDictionary dict = make_robot_dictionary(sc.joints);
    r.log = control_episode(sc.episode, plant, r.reference, dict, sc.disturbance);
    r.metrics = compute_metrics(r.log, r.reference, sc.joints, sc.window_start);
    return r;
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json metrics_json(const ScenarioResult& r) {
    const Metrics& mt = r.metrics;
    json tm = json::array();
    for (double v : mt.tmse) tm.push_back(finite_or_null(v));
    return {
        {"scenario", r.scenario.name},
        {"experiment", r.scenario.experiment},
        {"joints", r.scenario.joints},
        {"mode", to_string(r.scenario.episode.mode)},
        {"seed", r.scenario.seed},
        {"window_start", r.scenario.window_start},
        {"tmse", tm},
        {"energy_pos", mt.energy_pos},
        {"energy_neg", mt.energy_neg},
        {"goal_time", optional_number(mt.goal_time)},
        {"goal_reached", mt.goal_time.has_value()},
        {"updates_stopped_at", optional_number(r.log.updates_stopped_at)},
        {"aborted", mt.aborted},
        {"abort_reason", r.log.abort_reason},
        {"cycles", mt.cycles},
        {"refits", mt.refits},
        {"preceding", {{"cycles", r.log.preceding.cycles},
                       {"max_excursion", r.log.preceding.max_excursion},
                       {"excursion_warning", r.log.preceding.excursion_warning}}},
        {"solver", {{"mean_iterations", mt.mean_iterations},
                    {"max_iterations", mt.max_iterations},
                    {"max_iter_hits", mt.max_iter_hits}}},
    };
}

json timing_json(const ScenarioResult& r) {
    const auto& s = r.log.refit_seconds;
    double mean = 0.0, mx = 0.0;
    for (double v : s) {
        mean += v;
        mx = std::max(mx, v);
    }
    if (!s.empty()) mean /= static_cast<double>(s.size());
    return {{"scenario", r.scenario.name}, {"refits", s.size()},
            {"refit_seconds_mean", mean}, {"refit_seconds_max", mx}};
}

std::string one_line_summary(const ScenarioResult& r) {
    std::ostringstream os;
    os << std::setprecision(4);
    os << r.scenario.name << " [" << to_string(r.scenario.episode.mode) << "] tmse=(";
    for (std::size_t i = 0; i < r.metrics.tmse.size(); ++i) {
        os << (i ? "," : "") << r.metrics.tmse[i];
    }
    os << ") E+=" << r.metrics.energy_pos << "J E-=" << r.metrics.energy_neg << "J goal=";
    if (r.metrics.goal_time) {
        os << *r.metrics.goal_time << "s";
    } else {
        os << "none";
    }
    if (r.metrics.aborted) os << " ABORTED: " << r.log.abort_reason;
    return os.str();
}

void write_outputs(const ScenarioResult& r, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    {
        std::ofstream f(out_dir / "trajectory.csv");
        r.log.write_csv(f, r.scenario.joints);
    }
    {
        std::ofstream f(out_dir / "reference.csv");
        r.reference.write_csv(f);
    }
    {
        std::ofstream f(out_dir / "metrics.json");
        f << metrics_json(r).dump(2) << "\n";
    }
    {
        std::ofstream f(out_dir / "timing.json");
        f << timing_json(r).dump(2) << "\n";
    }
    if (!r.log.snapshots.empty()) {
        json models = json::array();
        for (const auto& s : r.log.snapshots) {
            models.push_back({{"cycle", s.cycle}, {"t", s.t}, {"model", to_json(s.model)}});
        }
        std::ofstream f(out_dir / "models.json");
        f << models.dump() << "\n";
    }
}

int run_scenario(const fs::path& config, const fs::path& out_root,
                 std::optional<std::uint64_t> seed_override) {
    Scenario sc;
    try {
        sc = load_scenario(config);
        if (seed_override) sc.seed = *seed_override;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    ScenarioResult r;
    try {
        r = execute_scenario(sc);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << sc.name << ": " << e.what() << "\n";
        return 1;
    }
    write_outputs(r, out_root / sc.name);
    std::cout << one_line_summary(r) << std::endl;
    return r.metrics.aborted ? 1 : 0;
}

Comparison compare(const std::vector<json>& metrics) {
    if (metrics.size() < 2) throw InputError("compare: need at least two metrics documents");
    Comparison cmp;
    try {
        for (const auto& m : metrics) {
            ComparisonRow row;
            row.scenario = m.at("scenario").get<std::string>();
            row.experiment = m.value("experiment", row.scenario);
            row.mode = m.at("mode").get<std::string>();
            for (const auto& v : m.at("tmse")) {
                row.tmse.push_back(v.is_null() ? std::nan("") : v.get<double>());
            }
            row.energy_pos = m.at("energy_pos").get<double>();
            row.energy_neg = m.at("energy_neg").get<double>();
            if (m.contains("goal_time") && !m["goal_time"].is_null()) {
                row.goal_time = m["goal_time"].get<double>();
            }
            cmp.rows.push_back(std::move(row));
        }
    } catch (const json::exception& e) {
        throw InputError(std::string("compare: malformed metrics document: ") + e.what());
    }
    for (const auto& r : cmp.rows) {
        if (r.experiment != cmp.rows.front().experiment) cmp.mismatched = true;
    }
    return cmp;
}

Comparison compare_files(const std::vector<fs::path>& paths) {
    std::vector<json> docs;
    for (const auto& p : paths) {
        std::ifstream in(p);
        if (!in) throw InputError("compare: cannot open " + p.string());
        try {
            docs.push_back(json::parse(in));
        } catch (const json::exception& e) {
            throw InputError("compare: " + p.string() + " is not valid JSON");
        }
    }
    return compare(docs);
}

namespace {

std::size_t max_joints(const Comparison& c) {
    std::size_t j = 0;
    for (const auto& r : c.rows) j = std::max(j, r.tmse.size());
    return j;
}

}  // namespace

std::string Comparison::text() const {
    const std::size_t dof = max_joints(*this);
    std::ostringstream os;
    os << std::left << std::setw(32) << "scenario" << std::setw(16) << "mode";
    for (std::size_t i = 0; i < dof; ++i) os << std::setw(14) << ("tmse_" + std::to_string(i));
    os << std::setw(12) << "E+ [J]" << std::setw(12) << "E- [J]" << "goal [s]\n";
    os << std::setprecision(5);
    for (const auto& r : rows) {
        os << std::setw(32) << r.scenario << std::setw(16) << r.mode;
        for (std::size_t i = 0; i < dof; ++i) {
            if (i < r.tmse.size()) {
                os << std::setw(14) << r.tmse[i];
            } else {
                os << std::setw(14) << "-";
            }
        }
        os << std::setw(12) << r.energy_pos << std::setw(12) << r.energy_neg;
        if (r.goal_time) {
            os << *r.goal_time;
        } else {
            os << "-";
        }
        os << "\n";
    }
    if (mismatched) os << "WARNING: rows come from different experiments\n";
    return os.str();
}

std::string Comparison::csv() const {
    const std::size_t dof = max_joints(*this);
    std::ostringstream os;
    os << "scenario,experiment,mode";
    for (std::size_t i = 0; i < dof; ++i) os << ",tmse_" << i;
    os << ",energy_pos,energy_neg,goal_time,mismatch\n";
    os << std::setprecision(10);
    for (const auto& r : rows) {
        os << r.scenario << "," << r.experiment << "," << r.mode;
        for (std::size_t i = 0; i < dof; ++i) {
            os << ",";
            if (i < r.tmse.size()) os << r.tmse[i];
        }
        os << "," << r.energy_pos << "," << r.energy_neg << ",";
        if (r.goal_time) os << *r.goal_time;
        os << "," << (mismatched ? 1 : 0) << "\n";
    }
    return os.str();
}

}  // namespace kmpc
