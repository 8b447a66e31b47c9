#include "kmpc/plant.hpp"

#include <cmath>

#include "kmpc/errors.hpp"

namespace kmpc {

PlantParams PlantParams::default_1r() {
    PlantParams p;
    p.dof = 1;
    const double m = 0.6, l = 0.3;
    p.mass = Vector::Constant(1, m);
    p.length = Vector::Constant(1, l);
    p.com = Vector::Constant(1, l / 2.0);
    p.inertia = Vector::Constant(1, m * l * l / 12.0);
    p.friction = Vector::Constant(1, 0.05);
    p.S = Matrix::Identity(1, 1);
    return p;
}

PlantParams PlantParams::default_2r() {
    PlantParams p;
    p.dof = 2;
    const double m = 0.6, l = 0.3;
    p.mass = Vector::Constant(2, m);
    p.length = Vector::Constant(2, l);
    p.com = Vector::Constant(2, l / 2.0);
    p.inertia = Vector::Constant(2, m * l * l / 12.0);
    p.friction = Vector::Constant(2, 0.05);
    p.S = Matrix(2, 2);
    p.S << 1.0, -1.0, 0.0, 1.0;
    return p;
}

PlantParams PlantParams::defaults(std::size_t dof) {
    if (dof == 1) return default_1r();
    if (dof == 2) return default_2r();
    throw ConfigError("plant: only 1R and 2R arms are supported");
}

void PlantParams::validate() const {
    if (dof != 1 && dof != 2) throw ConfigError("plant: dof must be 1 or 2");
    const auto d = static_cast<Eigen::Index>(dof);
    for (const Vector* v : {&mass, &length, &com, &inertia, &friction}) {
        if (v->size() != d) throw ConfigError("plant: per-link parameter has wrong length");
        if (!v->allFinite()) throw ConfigError("plant: non-finite parameter");
    }
    if ((mass.array() <= 0.0).any()) throw ConfigError("plant: masses must be positive");
    if ((length.array() <= 0.0).any()) throw ConfigError("plant: lengths must be positive");
    if ((inertia.array() < 0.0).any()) throw ConfigError("plant: inertia must be non-negative");
    if ((friction.array() < 0.0).any()) throw ConfigError("plant: friction must be non-negative");
    if (!(torque_limit > 0.0)) throw ConfigError("plant: torque limit must be positive");
    if (payload_mass < 0.0) throw ConfigError("plant: payload mass must be non-negative");
    if (S.rows() != d || S.cols() != d) throw ConfigError("plant: S must be dof x dof");
    if (std::abs(S.determinant()) < 1e-12) throw ConfigError("plant: S must be invertible");
}

Vector PlantState::x() const {
    Vector x(q.size() + qdot.size());
    x << q, qdot;
    return x;
}

PlantState PlantState::from_x(const Vector& x, double t) {
    const Eigen::Index d = x.size() / 2;
    return {x.head(d), x.tail(d), t};
}

Vector Disturbance::joint_torque(double t, std::size_t dof) const {
    Vector tau = Vector::Zero(static_cast<Eigen::Index>(dof));
    if ((kind == Kind::Impulse || kind == Kind::ConstantPush) && active(t)) {
        const Eigen::Index k = std::min<Eigen::Index>(tau.size(), magnitude.size());
        tau.head(k) = magnitude.head(k);
    }
    return tau;
}

double Disturbance::extra_payload(double t) const {
    if (kind == Kind::PayloadChange && active(t) && magnitude.size() > 0) return magnitude[0];
    return 0.0;
}

Disturbance::Kind Disturbance::kind_from_string(const std::string& s) {
    if (s == "none") return Kind::None;
    if (s == "impulse") return Kind::Impulse;
    if (s == "constant_push") return Kind::ConstantPush;
    if (s == "payload_change") return Kind::PayloadChange;
    throw ConfigError("unknown disturbance kind '" + s + "'");
}

const char* to_string(Disturbance::Kind k) {
    switch (k) {
        case Disturbance::Kind::None: return "none";
        case Disturbance::Kind::Impulse: return "impulse";
        case Disturbance::Kind::ConstantPush: return "constant_push";
        case Disturbance::Kind::PayloadChange: return "payload_change";
    }
    return "none";
}

namespace {

// Lumped coefficients of the planar arm; the payload is a point mass at the
// tip of the last link.
struct ArmTerms {
    double a = 0.0;   // M11 without the cos q2 part
    double b = 0.0;   // coupling l1 * (m2 lc2 + mp l2)
    double d = 0.0;   // M22
    double g1 = 0.0;  // gravity lever of the q1 term
    double g2 = 0.0;  // gravity lever of the q1 + q2 term
};

ArmTerms arm_terms(const PlantParams& p) {
    ArmTerms t;
    const double mp = p.payload_mass;
    if (p.dof == 1) {
        const double m = p.mass[0], l = p.length[0], lc = p.com[0];
        t.a = p.inertia[0] + m * lc * lc + mp * l * l;
        t.g1 = m * lc + mp * l;
        return t;
    }
    const double m1 = p.mass[0], m2 = p.mass[1];
    const double l1 = p.length[0], l2 = p.length[1];
    const double c1 = p.com[0], c2 = p.com[1];
    t.a = p.inertia[0] + m1 * c1 * c1 + p.inertia[1] + m2 * (l1 * l1 + c2 * c2) +
          mp * (l1 * l1 + l2 * l2);
    t.b = l1 * (m2 * c2 + mp * l2);
    t.d = p.inertia[1] + m2 * c2 * c2 + mp * l2 * l2;
    t.g1 = m1 * c1 + (m2 + mp) * l1;
    t.g2 = m2 * c2 + mp * l2;
    return t;
}

}  // namespace

Matrix mass_matrix(const PlantParams& p, const Vector& q) {
    const ArmTerms t = arm_terms(p);
    if (p.dof == 1) return Matrix::Constant(1, 1, t.a);
    const double c = std::cos(q[1]);
    Matrix M(2, 2);
    M(0, 0) = t.a + 2.0 * t.b * c;
    M(0, 1) = M(1, 0) = t.d + t.b * c;
    M(1, 1) = t.d;
    return M;
}

Vector coriolis(const PlantParams& p, const Vector& q, const Vector& qdot) {
    if (p.dof == 1) return Vector::Zero(1);
    const double h = arm_terms(p).b * std::sin(q[1]);
    Vector c(2);
    c[0] = -h * (2.0 * qdot[0] * qdot[1] + qdot[1] * qdot[1]);
    c[1] = h * qdot[0] * qdot[0];
    return c;
}

Vector gravity_torque(const PlantParams& p, const Vector& q) {
    const ArmTerms t = arm_terms(p);
    if (p.dof == 1) return Vector::Constant(1, p.gravity * t.g1 * std::sin(q[0]));
    const double s12 = std::sin(q[0] + q[1]);
    Vector g(2);
    g[0] = p.gravity * (t.g1 * std::sin(q[0]) + t.g2 * s12);
    g[1] = p.gravity * t.g2 * s12;
    return g;
}

double kinetic_energy(const PlantParams& p, const PlantState& s) {
    return 0.5 * s.qdot.dot(mass_matrix(p, s.q) * s.qdot);
}

double potential_energy(const PlantParams& p, const Vector& q) {
    const ArmTerms t = arm_terms(p);
    if (p.dof == 1) return -p.gravity * t.g1 * std::cos(q[0]);
    return -p.gravity * (t.g1 * std::cos(q[0]) + t.g2 * std::cos(q[0] + q[1]));
}

Vector forward_dynamics(const PlantParams& p, const PlantState& s, const Vector& u_motor,
                        const Vector& d_ext) {
    const auto dof = static_cast<Eigen::Index>(p.dof);
    if (s.q.size() != dof || s.qdot.size() != dof || u_motor.size() != dof) {
        throw InputError("forward_dynamics: dimension mismatch");
    }
    Vector tau = p.S.partialPivLu().solve(u_motor);
    if (d_ext.size() == dof) tau += d_ext;
    tau -= coriolis(p, s.q, s.qdot) + gravity_torque(p, s.q) +
           p.friction.cwiseProduct(s.qdot);
    const Matrix M = mass_matrix(p, s.q);
    if (p.dof == 1) return tau / M(0, 0);
    return M.llt().solve(tau);
}

Vector state_derivative(const PlantParams& p, const Vector& x, const Vector& u_motor) {
    const PlantState s = PlantState::from_x(x);
    Vector xd(x.size());
    xd << s.qdot, forward_dynamics(p, s, u_motor, Vector());
    return xd;
}

Vector clamp_torque(const PlantParams& p, const Vector& u_motor) {
    return u_motor.cwiseMax(-p.torque_limit).cwiseMin(p.torque_limit);
}

PlantState step(const PlantParams& p, const PlantState& s, const Vector& u_motor,
                const Disturbance& dist, double dt, double max_substep) {
    if (!(dt > 0.0)) throw InputError("step: dt must be positive");
    if (!(max_substep > 0.0)) throw InputError("step: substep must be positive");
    const Vector u = clamp_torque(p, u_motor);
    const auto substeps = static_cast<std::size_t>(std::ceil(dt / max_substep - 1e-9));
    const double h = dt / static_cast<double>(std::max<std::size_t>(1, substeps));
    const bool payload_disturbance = dist.kind == Disturbance::Kind::PayloadChange;

    auto f = [&](const Vector& x, double t) {
        const PlantState st = PlantState::from_x(x, t);
        Vector xd(x.size());
        if (payload_disturbance) {
            PlantParams pp = p;
            pp.payload_mass += dist.extra_payload(t);
            xd << st.qdot, forward_dynamics(pp, st, u, Vector());
        } else {
            xd << st.qdot, forward_dynamics(p, st, u, dist.joint_torque(t, p.dof));
        }
        return xd;
    };

    Vector x = s.x();
    double t = s.t;
    for (std::size_t i = 0; i < std::max<std::size_t>(1, substeps); ++i) {
        const Vector k1 = f(x, t);
        const Vector k2 = f(x + 0.5 * h * k1, t + 0.5 * h);
        const Vector k3 = f(x + 0.5 * h * k2, t + 0.5 * h);
        const Vector k4 = f(x + h * k3, t + h);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t = s.t + h * static_cast<double>(i + 1);
    }
    if (!x.allFinite()) throw NumericalError("step: plant state became non-finite");
    return PlantState::from_x(x, s.t + dt);
}

Jitter jitter_from_string(const std::string& s) {
    if (s == "none") return Jitter::None;
    if (s == "uniform") return Jitter::Uniform;
    throw ConfigError("unknown jitter mode '" + s + "'");
}

const char* to_string(Jitter j) { return j == Jitter::None ? "none" : "uniform"; }

ControlClock::ControlClock(double mean_hz, Jitter jitter, std::uint64_t seed)
    : mean_hz_(mean_hz),
      jitter_(jitter),
      rng_(seed),
      dist_(1.0 / (1.1 * mean_hz), 1.0 / (0.9 * mean_hz)) {
    if (!(mean_hz > 0.0)) throw ConfigError("clock: frequency must be positive");
}

double ControlClock::next_interval() {
    if (jitter_ == Jitter::None) return 1.0 / mean_hz_;
    return dist_(rng_);
}

std::vector<double> jittered_clock(double mean_hz, Jitter jitter, std::uint64_t seed,
                                   std::size_t count) {
    ControlClock clock(mean_hz, jitter, seed);
    std::vector<double> ts;
    ts.reserve(count);
    double t = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        ts.push_back(t);
        t += clock.next_interval();
    }
    return ts;
}

}  // namespace kmpc
