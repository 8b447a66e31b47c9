#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "kmpc/types.hpp"

namespace kmpc {

/// Physical parameters of a planar 1R/2R arm swinging in a vertical plane.
///
/// Motor torques u relate to joint torques ubar by u = S ubar. Angles are
/// relative joint angles, θ = 0 hangs down.
struct PlantParams {
    std::size_t dof = 1;
    Vector mass;      ///< per link, kg
    Vector length;    ///< per link, m
    Vector com;       ///< joint-to-centre-of-mass distance, m
    Vector inertia;   ///< about the link centre of mass, kg m^2
    Vector friction;  ///< viscous, N m s/rad
    double gravity = 9.81;
    Matrix S;         ///< structure matrix, motor = S * joint
    double torque_limit = 6.0;
    double payload_mass = 0.0;  ///< point mass at the end effector, kg

    /// 0.6 kg, 0.3 m rods (com l/2, inertia m l^2/12), friction 0.05.
    static PlantParams default_1r();
    /// Two default links and S = [[1, -1], [0, 1]].
    static PlantParams default_2r();
    static PlantParams defaults(std::size_t dof);

    /// Throws ConfigError when the invariants on masses, lengths, limits or S fail.
    void validate() const;
    std::size_t state_dim() const { return 2 * dof; }
};

struct PlantState {
    Vector q;
    Vector qdot;
    double t = 0.0;

    /// (q, qdot) stacked.
    Vector x() const;
    static PlantState from_x(const Vector& x, double t = 0.0);
};

struct Disturbance {
    enum class Kind { None, Impulse, ConstantPush, PayloadChange };

    Kind kind = Kind::None;
    double t_start = 0.0;
    double t_end = 0.0;
    /// joint torque (N m) for Impulse/ConstantPush, mass (kg) for PayloadChange
    Vector magnitude;

    bool active(double t) const { return kind != Kind::None && t >= t_start && t <= t_end; }
    /// External joint torque at time t (zero outside the window).
    Vector joint_torque(double t, std::size_t dof) const;
    /// Extra end-effector mass at time t.
    double extra_payload(double t) const;

    static Kind kind_from_string(const std::string& s);
};

const char* to_string(Disturbance::Kind k);

Matrix mass_matrix(const PlantParams& p, const Vector& q);
/// Coriolis and centrifugal joint torques C(q, qdot).
Vector coriolis(const PlantParams& p, const Vector& q, const Vector& qdot);
Vector gravity_torque(const PlantParams& p, const Vector& q);
double kinetic_energy(const PlantParams& p, const PlantState& s);
double potential_energy(const PlantParams& p, const Vector& q);
inline double total_energy(const PlantParams& p, const PlantState& s) {
    return kinetic_energy(p, s) + potential_energy(p, s.q);
}

/// qddot = M^-1 (S^-1 u_motor + d_ext - C - G - friction qdot).
Vector forward_dynamics(const PlantParams& p, const PlantState& s, const Vector& u_motor,
                        const Vector& d_ext);

/// xdot = (qdot, qddot) for stacked state x; no torque clamping, no disturbance.
Vector state_derivative(const PlantParams& p, const Vector& x, const Vector& u_motor);

/// u clamped elementwise to +-torque_limit.
Vector clamp_torque(const PlantParams& p, const Vector& u_motor);

/// Integrates over dt with classical RK4 substeps no longer than max_substep,
/// holding the clamped motor torque constant. Throws NumericalError on
/// non-finite results.
PlantState step(const PlantParams& p, const PlantState& s, const Vector& u_motor,
                const Disturbance& dist, double dt, double max_substep = 1e-3);

enum class Jitter { None, Uniform };

Jitter jitter_from_string(const std::string& s);
const char* to_string(Jitter j);

/// Seeded generator of control-cycle intervals. Uniform jitter draws each
/// interval from [1/(1.1 f), 1/(0.9 f)], i.e. 90-110 Hz around 100 Hz.
class ControlClock {
public:
    ControlClock(double mean_hz, Jitter jitter, std::uint64_t seed);

    double next_interval();
    double mean_hz() const { return mean_hz_; }
    double nominal_dt() const { return 1.0 / mean_hz_; }

private:
    double mean_hz_;
    Jitter jitter_;
    std::mt19937_64 rng_;
    std::uniform_real_distribution<double> dist_;
};

/// First `count` control timestamps starting at 0.
std::vector<double> jittered_clock(double mean_hz, Jitter jitter, std::uint64_t seed,
                                   std::size_t count);

}  // namespace kmpc
