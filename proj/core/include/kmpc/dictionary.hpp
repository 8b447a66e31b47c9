#pragma once

#include <cstddef>
#include <vector>

#include "kmpc/types.hpp"

namespace kmpc {

/// One scalar observable of the state.
struct BasisFunction {
    enum class Kind {
        Coordinate,       ///< x[index]
        Sin,              ///< sin(x[index])
        Cos,              ///< cos(x[index])
        VelocityTimesSin, ///< x[aux] * sin(x[index])
        VelocityTimesCos, ///< x[aux] * cos(x[index])
    };

    Kind kind = Kind::Coordinate;
    std::size_t index = 0;
    std::size_t aux = 0;

    double operator()(const Vector& x) const;
};

/// Lifting map from an n-dimensional state to p observables.
///
/// The first n observables are always the coordinate projections, so the
/// original state is recovered by C = [I_n 0]. Instances are immutable.
class LiftingDictionary {
public:
    /// Throws InputError if the first n entries are not x_0..x_{n-1}.
    LiftingDictionary(std::size_t state_dim, std::vector<BasisFunction> basis);

    std::size_t state_dim() const { return n_; }
    std::size_t lifted_dim() const { return basis_.size(); }
    const std::vector<BasisFunction>& basis() const { return basis_; }

    Vector lift(const Vector& x) const;
    /// Applies lift() column wise.
    Matrix lift_matrix(const Matrix& X) const;
    Vector reconstruct(const Vector& z) const;
    /// The n x p selector [I_n 0].
    Matrix selector() const;

private:
    std::size_t n_;
    std::vector<BasisFunction> basis_;
};

/// Trigonometric dictionary for a 1R or 2R arm with state (θ..., ω...).
///
/// Layout: θ_i, ω_i, then sin θ_i, cos θ_i, ω_i sin θ_i, ω_i cos θ_i, each
/// group running over all joints. Angles are lifted unwrapped.
LiftingDictionary make_robot_dictionary(std::size_t n_joints);

/// Identity lifting (p = n).
LiftingDictionary make_identity_dictionary(std::size_t state_dim);

}  // namespace kmpc
