#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include <kmpc/errors.hpp>
#include <kmpc/plant.hpp>

#include "oracles.hpp"

namespace {

using kmpc::Disturbance;
using kmpc::Matrix;
using kmpc::PlantParams;
using kmpc::PlantState;
using kmpc::Vector;

constexpr double kPi = std::numbers::pi;

PlantParams frictionless(std::size_t dof) {
    PlantParams p = PlantParams::defaults(dof);
    p.friction.setZero();
    return p;
}

PlantState integrate(const PlantParams& p, PlantState s, const Vector& u, double T, double h) {
    const auto steps = static_cast<int>(std::llround(T / h));
    for (int k = 0; k < steps; ++k) s = kmpc::step(p, s, u, {}, h, h);
    return s;
}

TEST(PlantParams, DefaultsAreValid) {
    EXPECT_NO_THROW(PlantParams::default_1r().validate());
    EXPECT_NO_THROW(PlantParams::default_2r().validate());
    const PlantParams p = PlantParams::default_2r();
    EXPECT_EQ(p.torque_limit, 6.0);
    EXPECT_DOUBLE_EQ(p.inertia[0], 0.6 * 0.09 / 12.0);
    EXPECT_EQ(p.S(0, 1), -1.0);
    EXPECT_THROW(PlantParams::defaults(3), kmpc::ConfigError);
}

TEST(PlantParams, ValidationRejectsBadValues) {
    PlantParams p = PlantParams::default_2r();
    p.mass[1] = 0.0;
    EXPECT_THROW(p.validate(), kmpc::ConfigError);
    p = PlantParams::default_2r();
    p.S << 1.0, 1.0, 1.0, 1.0;
    EXPECT_THROW(p.validate(), kmpc::ConfigError);
    p = PlantParams::default_1r();
    p.torque_limit = 0.0;
    EXPECT_THROW(p.validate(), kmpc::ConfigError);
}

TEST(ForwardDynamics, HangingAtRestStaysPut) {
    const PlantParams p = PlantParams::default_1r();
    const Vector qdd = kmpc::forward_dynamics(p, {Vector::Zero(1), Vector::Zero(1)}, Vector::Zero(1), Vector());
    EXPECT_EQ(qdd[0], 0.0);
}

TEST(ForwardDynamics, HorizontalPendulumAcceleration) {
    PlantParams p = frictionless(1);
    p.payload_mass = 0.2;
    const double m = 0.6, l = 0.3, lc = 0.15, g = 9.81;
    const double I = m * l * l / 12.0 + m * lc * lc + 0.2 * l * l;
    const Vector qdd = kmpc::forward_dynamics(p, {Vector::Constant(1, kPi / 2.0), Vector::Zero(1)},
                                              Vector::Zero(1), Vector());
    EXPECT_NEAR(qdd[0], -(m * g * lc + 0.2 * g * l) / I, 1e-12);
}

TEST(ForwardDynamics, MatchesLagrangianOracle) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> ang(-kPi, kPi), vel(-3.0, 3.0), tau(-2.0, 2.0);
    for (std::size_t dof : {1u, 2u}) {
        PlantParams p = PlantParams::defaults(dof);
        p.payload_mass = 0.3;
        for (int trial = 0; trial < 20; ++trial) {
            const auto n = static_cast<Eigen::Index>(dof);
            Vector q(n), qd(n), u(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                q[i] = ang(rng);
                qd[i] = vel(rng);
                u[i] = tau(rng);
            }
            const Vector joint = p.S.inverse() * u - p.friction.cwiseProduct(qd);
            const Vector oracle = kmpc::testing::arm_acceleration_lagrange(p, q, qd, joint);
            const Vector qdd = kmpc::forward_dynamics(p, {q, qd}, u, Vector());
            EXPECT_LT((qdd - oracle).lpNorm<Eigen::Infinity>(), 1e-5 * (1.0 + oracle.norm()));
        }
    }
}

TEST(MassMatrix, MatchesKinematicOracleAndIsSpd) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    PlantParams p = PlantParams::default_2r();
    p.payload_mass = 0.5;
    for (int trial = 0; trial < 20; ++trial) {
        const Vector q = Eigen::Vector2d(ang(rng), ang(rng));
        const Matrix M = kmpc::mass_matrix(p, q);
        EXPECT_LT((M - kmpc::testing::arm_mass_matrix_kinematic(p, q)).norm(), 1e-8);
        EXPECT_LT((M - M.transpose()).norm(), 1e-15);
        EXPECT_EQ(M.llt().info(), Eigen::Success);
        EXPECT_NEAR(kmpc::potential_energy(p, q), kmpc::testing::arm_potential_kinematic(p, q), 1e-12);
    }
}

TEST(GravityTorque, PayloadIncreasesMagnitude) {
    for (std::size_t dof : {1u, 2u}) {
        PlantParams p = PlantParams::defaults(dof);
        Vector q = Vector::Zero(static_cast<Eigen::Index>(dof));
        q[0] = kPi / 2.0;
        double previous = kmpc::gravity_torque(p, q).norm();
        for (double mp : {0.1, 0.5, 1.0}) {
            p.payload_mass = mp;
            const double g = kmpc::gravity_torque(p, q).norm();
            EXPECT_GT(g, previous);
            previous = g;
        }
    }
}

TEST(Step, ExponentialDecayMatchesClosedForm) {
    // Zero gravity and friction equal to the joint inertia reduce the
    // velocity dynamics to omega' = -omega.
    PlantParams p = PlantParams::default_1r();
    p.gravity = 0.0;
    p.friction[0] = p.inertia[0] + p.mass[0] * p.com[0] * p.com[0];
    const PlantState s{Vector::Zero(1), Vector::Ones(1), 0.0};
    const PlantState next = kmpc::step(p, s, Vector::Zero(1), {}, 0.01, 0.01);
    EXPECT_NEAR(next.qdot[0], std::exp(-0.01), 1e-10);
    EXPECT_NEAR(next.q[0], 1.0 - std::exp(-0.01), 1e-10);
    EXPECT_DOUBLE_EQ(next.t, 0.01);
}

TEST(Step, FourthOrderConvergence) {
    const PlantParams p = PlantParams::default_1r();
    const PlantState s0{Vector::Constant(1, 2.0), Vector::Zero(1), 0.0};
    const Vector u = Vector::Zero(1);
    const Vector ref = integrate(p, s0, u, 1.0, 1e-5).x();
    const double e1 = (integrate(p, s0, u, 1.0, 0.04).x() - ref).norm();
    const double e2 = (integrate(p, s0, u, 1.0, 0.02).x() - ref).norm();
    const double e3 = (integrate(p, s0, u, 1.0, 0.01).x() - ref).norm();
    const double order1 = std::log2(e1 / e2);
    const double order2 = std::log2(e2 / e3);
    EXPECT_GE(order1, 3.7);
    EXPECT_LE(order1, 4.3);
    EXPECT_GE(order2, 3.7);
    EXPECT_LE(order2, 4.3);
}

TEST(Step, ClampsMotorTorque) {
    const PlantParams p = PlantParams::default_2r();
    const PlantState s{Vector::Zero(2), Vector::Zero(2), 0.0};
    const auto a = kmpc::step(p, s, Eigen::Vector2d(40.0, -9.0), {}, 0.01);
    const auto b = kmpc::step(p, s, Eigen::Vector2d(6.0, -6.0), {}, 0.01);
    EXPECT_EQ(a.x(), b.x());
    EXPECT_EQ(kmpc::clamp_torque(p, Eigen::Vector2d(-7.0, 3.0)), Vector(Eigen::Vector2d(-6.0, 3.0)));
}

TEST(Step, SubstepsEvenlyDivideInterval) {
    const PlantParams p = PlantParams::default_1r();
    const PlantState s{Vector::Constant(1, 0.5), Vector::Zero(1), 0.0};
    const auto once = kmpc::step(p, s, Vector::Zero(1), {}, 0.0105);
    PlantState manual = s;
    for (int k = 0; k < 11; ++k) manual = kmpc::step(p, manual, Vector::Zero(1), {}, 0.0105 / 11.0, 1.0);
    EXPECT_LT((once.x() - manual.x()).norm(), 1e-14);
}

TEST(Step, NonFiniteStateThrows) {
    const PlantParams p = PlantParams::default_1r();
    const PlantState s{Vector::Constant(1, std::nan("")), Vector::Zero(1), 0.0};
    EXPECT_THROW(kmpc::step(p, s, Vector::Zero(1), {}, 0.01), kmpc::NumericalError);
    EXPECT_THROW(kmpc::step(p, {Vector::Zero(1), Vector::Zero(1), 0.0}, Vector::Zero(1), {}, 0.0),
                 kmpc::InputError);
}

TEST(Disturbance, PushIsActiveOnlyInsideWindow) {
    Disturbance d;
    d.kind = Disturbance::Kind::ConstantPush;
    d.t_start = 1.0;
    d.t_end = 1.3;
    d.magnitude = Vector::Constant(1, 1.5);
    EXPECT_EQ(d.joint_torque(0.9, 2), Vector::Zero(2));
    EXPECT_EQ(d.joint_torque(1.1, 2), Vector(Eigen::Vector2d(1.5, 0.0)));
    EXPECT_EQ(d.joint_torque(1.31, 2), Vector::Zero(2));
    EXPECT_EQ(Disturbance::kind_from_string("constant_push"), Disturbance::Kind::ConstantPush);
    EXPECT_THROW(Disturbance::kind_from_string("gust"), kmpc::ConfigError);
}

TEST(Disturbance, PushChangesTrajectory) {
    const PlantParams p = PlantParams::default_1r();
    const PlantState s{Vector::Zero(1), Vector::Zero(1), 0.0};
    Disturbance d;
    d.kind = Disturbance::Kind::ConstantPush;
    d.t_start = 0.0;
    d.t_end = 1.0;
    d.magnitude = Vector::Constant(1, 0.5);
    const auto pushed = kmpc::step(p, s, Vector::Zero(1), d, 0.01);
    const auto driven = kmpc::step(p, s, Vector::Constant(1, 0.5), {}, 0.01);
    EXPECT_LT((pushed.x() - driven.x()).norm(), 1e-15);
}

TEST(Disturbance, PayloadChangeAddsTipMass) {
    const PlantParams p = PlantParams::default_1r();
    PlantParams heavy = p;
    heavy.payload_mass = 0.5;
    Disturbance d;
    d.kind = Disturbance::Kind::PayloadChange;
    d.t_start = 0.0;
    d.t_end = 10.0;
    d.magnitude = Vector::Constant(1, 0.5);
    const PlantState s{Vector::Constant(1, 1.0), Vector::Zero(1), 0.0};
    EXPECT_LT((kmpc::step(p, s, Vector::Zero(1), d, 0.01).x() -
               kmpc::step(heavy, s, Vector::Zero(1), {}, 0.01).x()).norm(), 1e-15);
}

TEST(PlantProperty, FrictionlessEnergyIsConserved) {
    for (std::size_t dof : {1u, 2u}) {
        const PlantParams p = frictionless(dof);
        const auto n = static_cast<Eigen::Index>(dof);
        PlantState s{Vector::Constant(n, 1.0), Vector::Constant(n, 0.5), 0.0};
        const double e0 = kmpc::total_energy(p, s);
        double drift = 0.0;
        for (int k = 0; k < 10000; ++k) {
            s = kmpc::step(p, s, Vector::Zero(n), {}, 1e-3);
            drift = std::max(drift, std::abs(kmpc::total_energy(p, s) - e0));
        }
        EXPECT_LT(drift / std::abs(e0), 1e-5) << dof << "R";
    }
}

TEST(PlantProperty, FrictionIsPassive) {
    for (std::size_t dof : {1u, 2u}) {
        const PlantParams p = PlantParams::defaults(dof);
        const auto n = static_cast<Eigen::Index>(dof);
        PlantState s{Vector::Constant(n, 2.0), Vector::Constant(n, -1.0), 0.0};
        double e = kmpc::total_energy(p, s);
        for (int k = 0; k < 2000; ++k) {
            s = kmpc::step(p, s, Vector::Zero(n), {}, 1e-3);
            const double next = kmpc::total_energy(p, s);
            EXPECT_LE(next, e + 1e-12);
            e = next;
        }
    }
}

TEST(PlantProperty, StructureMatrixMatchesJointTorqueModel) {
    const PlantParams belt = PlantParams::default_2r();
    PlantParams direct = belt;
    direct.S = Matrix::Identity(2, 2);
    direct.torque_limit = 1e9;
    PlantParams belt_unlimited = belt;
    belt_unlimited.torque_limit = 1e9;
    PlantState a{Eigen::Vector2d(0.3, -0.2), Eigen::Vector2d(0.0, 0.0), 0.0};
    PlantState b = a;
    for (int k = 0; k < 300; ++k) {
        const Vector joint = Eigen::Vector2d(std::sin(0.05 * k), 0.5 * std::cos(0.03 * k));
        a = kmpc::step(belt_unlimited, a, belt.S * joint, {}, 0.01);
        b = kmpc::step(direct, b, joint, {}, 0.01);
    }
    EXPECT_LT((a.x() - b.x()).norm(), 1e-12);
}

TEST(ControlClock, NoJitterIsNominal) {
    kmpc::ControlClock c(100.0, kmpc::Jitter::None, 1);
    for (int i = 0; i < 10; ++i) EXPECT_EQ(c.next_interval(), 0.01);
    EXPECT_EQ(c.nominal_dt(), 0.01);
}

TEST(ControlClock, UniformJitterStaysInBand) {
    kmpc::ControlClock c(100.0, kmpc::Jitter::Uniform, 7);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 5000; ++i) {
        const double dt = c.next_interval();
        lo = std::min(lo, dt);
        hi = std::max(hi, dt);
    }
    EXPECT_GE(lo, 1.0 / 110.0);
    EXPECT_LE(hi, 1.0 / 90.0);
    EXPECT_LT(lo, 1.0 / 108.0);
    EXPECT_GT(hi, 1.0 / 92.0);
}

TEST(ControlClock, SeedDeterminesSequence) {
    const auto a = kmpc::jittered_clock(100.0, kmpc::Jitter::Uniform, 3, 100);
    const auto b = kmpc::jittered_clock(100.0, kmpc::Jitter::Uniform, 3, 100);
    const auto c = kmpc::jittered_clock(100.0, kmpc::Jitter::Uniform, 4, 100);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
    EXPECT_EQ(a.front(), 0.0);
    EXPECT_THROW(kmpc::ControlClock(0.0, kmpc::Jitter::None, 1), kmpc::ConfigError);
}

}  // namespace
