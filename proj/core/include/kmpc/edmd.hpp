#pragma once

#include <cstddef>
#include <nlohmann/json_fwd.hpp>

#include "kmpc/dictionary.hpp"
#include "kmpc/types.hpp"

namespace kmpc {

/// Default relative singular value cutoff used for the EDMD pseudoinverse.
inline constexpr double kDefaultPinvTolerance = 1e-10;

/// Linear lifted dynamics z+ = A z + B u with state read-out x = C z.
struct KoopmanModel {
    Matrix A;  ///< p x p
    Matrix B;  ///< p x m
    Matrix C;  ///< n x p, [I_n 0]
    double dt = 0.0;

    std::size_t lifted_dim() const { return static_cast<std::size_t>(A.rows()); }
    std::size_t input_dim() const { return static_cast<std::size_t>(B.cols()); }
    std::size_t state_dim() const { return static_cast<std::size_t>(C.rows()); }
};

/// SVD pseudoinverse; singular values below rel_tol * sigma_max count as zero.
Matrix pseudo_inverse(const Matrix& M, double rel_tol = kDefaultPinvTolerance);

struct FitOptions {
    double rel_tol = kDefaultPinvTolerance;
    /// Tikhonov weight on K; 0 gives the plain least-squares/minimum-norm fit.
    double ridge = 0.0;
    std::size_t state_dim = 0;  ///< n for C; 0 means C = I_p
    double dt = 0.0;
};

/// Least-squares fit of [A B] = Xbar_lift * Omega^+, Omega = [X_lift; U].
/// Throws InputError on inconsistent sizes or non-finite data.
KoopmanModel fit(const Matrix& Xlift, const Matrix& Xbarlift, const Matrix& U,
                 const FitOptions& opts = {});

/// Lifts resampled data with d and fits; C and dt are taken from d and data.
KoopmanModel fit(const LiftingDictionary& d, const Matrix& X, const Matrix& Xbar,
                 const Matrix& U, double dt, const FitOptions& opts = {});

/// A z + B u.
Vector predict(const KoopmanModel& model, const Vector& z, const Vector& u);

/// Frobenius norm of Xbar_lift - [A B] Omega.
double fit_residual(const Matrix& K, const Matrix& Xlift, const Matrix& Xbarlift,
                    const Matrix& U);

/// Rollout RMSE over every start index: lift X[:,s] once, iterate the model
/// with U[:,s..s+horizon-1] and compare C z against X[:,s+1..s+horizon].
/// Throws InputError if horizon >= X.cols().
double multi_step_rmse(const KoopmanModel& model, const LiftingDictionary& d,
                       const Matrix& X, const Matrix& U, std::size_t horizon);

/// Row-major JSON document {"p","n","m","dt","A","B","C"}.
nlohmann::json to_json(const KoopmanModel& model);
/// Throws InputError on missing fields or inconsistent shapes.
KoopmanModel koopman_model_from_json(const nlohmann::json& j);

}  // namespace kmpc
