#pragma once

#include <cstddef>
#include <limits>
#include <optional>

#include "kmpc/types.hpp"

namespace kmpc {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// min 1/2 x'Px + q'x  s.t.  lower <= G x <= upper. Bounds may be +-inf.
struct QpProblem {
    Matrix P;
    Vector q;
    Matrix G;
    Vector lower;
    Vector upper;

    std::size_t num_vars() const { return static_cast<std::size_t>(q.size()); }
    std::size_t num_constraints() const { return static_cast<std::size_t>(G.rows()); }
    double objective(const Vector& x) const { return 0.5 * x.dot(P * x) + q.dot(x); }
};

enum class QpStatus { Solved, MaxIterations, Infeasible };

const char* to_string(QpStatus s);

struct QpSolution {
    Vector x;
    Vector y;  ///< constraint multipliers, sign convention Px + q + G'y = 0
    QpStatus status = QpStatus::MaxIterations;
    double primal_residual = kInf;
    double dual_residual = kInf;
    std::size_t iterations = 0;
    bool polished = false;
};

struct SolverConfig {
    double rho = 0.1;
    double sigma = 1e-6;
    double alpha = 1.6;
    double eps_abs = 1e-6;
    std::size_t max_iterations = 4000;
    std::size_t check_every = 5;
    /// Ruiz equilibration passes on [[P, G'], [G, 0]] followed by cost
    /// scaling. The default 0 iterates on the raw problem, where the fixed
    /// rho is tuned for the MPC cost magnitudes. Residuals are always
    /// checked on the unscaled problem. A raw factorization that fails is
    /// retried with equilibration.
    std::size_t scaling_iterations = 0;
    /// Guess the active set from the final multipliers and solve the
    /// equality-constrained KKT system exactly. The polished point replaces
    /// the ADMM iterate only if it is sign consistent and has smaller KKT
    /// residuals; an iterate that hit the cap counts as solved when the
    /// polished residuals meet eps_abs.
    bool polish = true;
};

struct WarmStart {
    Vector x;
    Vector y;
};

struct KktResiduals {
    double primal = 0.0;
    double dual = 0.0;
};

/// primal = max violation of lower <= Gx <= upper, dual = |Px + q + G'y|_inf.
KktResiduals kkt_residuals(const QpProblem& p, const Vector& x, const Vector& y);

/// Over-relaxed ADMM for dense box-constrained QPs.
///
/// The factorization of P + sigma I + rho G'G is kept between calls and
/// reused when the next problem has bitwise identical P and G.
class QpSolver {
public:
    explicit QpSolver(SolverConfig cfg = {}) : cfg_(cfg) {}

    /// Throws InputError on inconsistent dimensions.
    QpSolution solve(const QpProblem& p, const std::optional<WarmStart>& warm = std::nullopt);

    const SolverConfig& config() const { return cfg_; }
    std::size_t factorizations() const { return factorizations_; }

private:
    void refactor(const QpProblem& p, std::size_t passes);
    bool polish(const QpProblem& p, QpSolution& sol) const;

    SolverConfig cfg_;
    Matrix cached_P_;
    Matrix cached_G_;
    // Equilibrated data: Ps = c D P D, Gs = E G D.
    Matrix Ps_;
    Matrix Gs_;
    Vector D_;
    Vector E_;
    double c_ = 1.0;
    Eigen::LLT<Matrix> llt_;
    bool have_factor_ = false;
    std::size_t factorizations_ = 0;
};

/// One-shot convenience wrapper around QpSolver.
QpSolution solve(const QpProblem& p, const SolverConfig& cfg = {},
                 const std::optional<WarmStart>& warm = std::nullopt);

}  // namespace kmpc
