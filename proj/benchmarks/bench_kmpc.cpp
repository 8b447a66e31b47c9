#include <benchmark/benchmark.h>

#include <kmpc/baselines.hpp>
#include <kmpc/buffer.hpp>
#include <kmpc/dictionary.hpp>
#include <kmpc/edmd.hpp>
#include <kmpc/mpc.hpp>
#include <kmpc/plant.hpp>
#include <kmpc/qp_solver.hpp>

namespace {

using kmpc::Matrix;
using kmpc::Vector;

/// Buffer of 200 samples from a sinusoidally excited arm.
kmpc::TrajectoryBuffer excited_buffer(std::size_t dof) {
    const auto p = kmpc::PlantParams::defaults(dof);
    const auto m = static_cast<Eigen::Index>(dof);
    kmpc::TrajectoryBuffer buffer;
    kmpc::PlantState s = kmpc::PlantState::from_x(Vector::Zero(2 * m));
    kmpc::ControlClock clock(100.0, kmpc::Jitter::Uniform, 1);
    while (!buffer.full()) {
        const Vector u = Vector::Constant(m, 0.5 * std::sin(6.28 * s.t));
        buffer.push({s.t, s.x(), u});
        s = kmpc::step(p, s, u, {}, clock.next_interval());
    }
    return buffer;
}

kmpc::MpcConfig mpc_config(std::size_t dof, std::size_t lifted) {
    kmpc::MpcConfig c;
    c.horizon = 30;
    const auto m = static_cast<Eigen::Index>(dof);
    c.Q = kmpc::physical_state_weights(lifted, dof, 100.0, 1.0);
    c.R = Vector::Constant(m, 0.1);
    c.u_lower = Vector::Constant(m, -6.0);
    c.u_upper = Vector::Constant(m, 6.0);
    return c;
}

void BM_EdmdFit(benchmark::State& state) {
    const auto dof = static_cast<std::size_t>(state.range(0));
    const auto d = kmpc::make_robot_dictionary(dof);
    const auto data = excited_buffer(dof).resample(0.01);
    for (auto _ : state) {
        benchmark::DoNotOptimize(kmpc::fit(d, data.X, data.Xbar, data.U, data.dt));
    }
}
BENCHMARK(BM_EdmdFit)->Arg(1)->Arg(2)->Unit(benchmark::kMicrosecond);

void BM_Resample(benchmark::State& state) {
    const auto buffer = excited_buffer(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(buffer.resample(buffer.mean_dt()));
}
BENCHMARK(BM_Resample)->Arg(1)->Arg(2)->Unit(benchmark::kMicrosecond);

void BM_QpSolveCondensed(benchmark::State& state) {
    const auto dof = static_cast<std::size_t>(state.range(0));
    const auto d = kmpc::make_robot_dictionary(dof);
    const auto data = excited_buffer(dof).resample(0.01);
    const auto model = kmpc::fit(d, data.X, data.Xbar, data.U, data.dt);
    const auto cfg = mpc_config(dof, d.lifted_dim());
    const auto pm = kmpc::prediction_matrices(kmpc::augment(model), cfg.horizon);
    const auto n = static_cast<Eigen::Index>(2 * dof);
    const auto m = static_cast<Eigen::Index>(dof);
    Vector zhat0(static_cast<Eigen::Index>(d.lifted_dim()) + m);
    zhat0 << d.lift(Vector::Zero(n)), Vector::Zero(m);
    Matrix ref = Matrix::Zero(n, 30);
    ref.row(0).setConstant(0.3);
    const auto qp = kmpc::condense(pm, cfg, zhat0, kmpc::lift_reference(d, ref, dof), Vector::Zero(m));
    for (auto _ : state) {
        kmpc::QpSolver solver;
        benchmark::DoNotOptimize(solver.solve(qp));
    }
}
BENCHMARK(BM_QpSolveCondensed)->Arg(1)->Arg(2)->Unit(benchmark::kMicrosecond);

void BM_MpcStep(benchmark::State& state) {
    const auto dof = static_cast<std::size_t>(state.range(0));
    const auto d = kmpc::make_robot_dictionary(dof);
    const auto data = excited_buffer(dof).resample(0.01);
    const auto model = kmpc::fit(d, data.X, data.Xbar, data.U, data.dt);
    const auto cfg = mpc_config(dof, d.lifted_dim());
    const auto n = static_cast<Eigen::Index>(2 * dof);
    Matrix ref = Matrix::Zero(n, 30);
    ref.row(0).setConstant(0.3);
    kmpc::QpSolver solver;
    for (auto _ : state) {
        benchmark::DoNotOptimize(kmpc::mpc_step(model, cfg, Vector::Zero(n),
                                                Vector::Zero(static_cast<Eigen::Index>(dof)), ref,
                                                d, solver));
    }
}
BENCHMARK(BM_MpcStep)->Arg(1)->Arg(2)->Unit(benchmark::kMicrosecond);

void BM_PlantStep(benchmark::State& state) {
    const auto dof = static_cast<std::size_t>(state.range(0));
    const auto p = kmpc::PlantParams::defaults(dof);
    const auto m = static_cast<Eigen::Index>(dof);
    kmpc::PlantState s = kmpc::PlantState::from_x(Vector::Constant(2 * m, 0.3));
    for (auto _ : state) benchmark::DoNotOptimize(kmpc::step(p, s, Vector::Zero(m), {}, 0.01));
}
BENCHMARK(BM_PlantStep)->Arg(1)->Arg(2);

void BM_LinearizationMpcStep(benchmark::State& state) {
    const auto dof = static_cast<std::size_t>(state.range(0));
    const auto p = kmpc::PlantParams::defaults(dof);
    const auto n = static_cast<Eigen::Index>(2 * dof);
    const auto cfg = mpc_config(dof, 2 * dof);
    Matrix ref = Matrix::Zero(n, 30);
    ref.row(0).setConstant(0.3);
    kmpc::QpSolver solver;
    for (auto _ : state) {
        benchmark::DoNotOptimize(kmpc::linearization_mpc_step(
            p, cfg, Vector::Zero(n), Vector::Zero(static_cast<Eigen::Index>(dof)), ref, 0.01, solver));
    }
}
BENCHMARK(BM_LinearizationMpcStep)->Arg(1)->Arg(2)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
