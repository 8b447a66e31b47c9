#include "kmpc/dictionary.hpp"

#include <cmath>
#include <string>

#include "kmpc/errors.hpp"

namespace kmpc {

double BasisFunction::operator()(const Vector& x) const {
    switch (kind) {
        case Kind::Coordinate: return x[index];
        case Kind::Sin: return std::sin(x[index]);
        case Kind::Cos: return std::cos(x[index]);
        case Kind::VelocityTimesSin: return x[aux] * std::sin(x[index]);
        case Kind::VelocityTimesCos: return x[aux] * std::cos(x[index]);
    }
    return 0.0;
}

LiftingDictionary::LiftingDictionary(std::size_t state_dim, std::vector<BasisFunction> basis)
    : n_(state_dim), basis_(std::move(basis)) {
    if (basis_.size() < n_) {
        throw InputError("dictionary needs at least n basis functions");
    }
    for (std::size_t i = 0; i < n_; ++i) {
        if (basis_[i].kind != BasisFunction::Kind::Coordinate || basis_[i].index != i) {
            throw InputError("basis function " + std::to_string(i) +
                             " must be the coordinate projection x_" + std::to_string(i));
        }
    }
    for (const auto& b : basis_) {
        if (b.index >= n_ || b.aux >= n_) {
            throw InputError("basis function references a coordinate outside the state");
        }
    }
}

Vector LiftingDictionary::lift(const Vector& x) const {
    if (static_cast<std::size_t>(x.size()) != n_) {
        throw InputError("lift: state has length " + std::to_string(x.size()) + ", expected " +
                         std::to_string(n_));
    }
    Vector z(basis_.size());
    for (std::size_t j = 0; j < basis_.size(); ++j) {
        z[static_cast<Eigen::Index>(j)] = basis_[j](x);
    }
    return z;
}

Matrix LiftingDictionary::lift_matrix(const Matrix& X) const {
    if (static_cast<std::size_t>(X.rows()) != n_) {
        throw InputError("lift_matrix: expected " + std::to_string(n_) + " rows");
    }
    Matrix Z(basis_.size(), X.cols());
    for (Eigen::Index k = 0; k < X.cols(); ++k) {
        Z.col(k) = lift(X.col(k));
    }
    return Z;
}

Vector LiftingDictionary::reconstruct(const Vector& z) const {
    if (static_cast<std::size_t>(z.size()) != basis_.size()) {
        throw InputError("reconstruct: lifted state has wrong length");
    }
    return z.head(static_cast<Eigen::Index>(n_));
}

Matrix LiftingDictionary::selector() const {
    Matrix C = Matrix::Zero(n_, basis_.size());
    C.leftCols(n_).setIdentity();
    return C;
}

LiftingDictionary make_robot_dictionary(std::size_t n_joints) {
    if (n_joints != 1 && n_joints != 2) {
        throw ConfigError("robot dictionary supports 1 or 2 joints, got " +
                          std::to_string(n_joints));
    }
    using K = BasisFunction::Kind;
    const std::size_t n = 2 * n_joints;
    std::vector<BasisFunction> basis;
    basis.reserve(6 * n_joints);
    for (std::size_t i = 0; i < n; ++i) basis.push_back({K::Coordinate, i, 0});
    for (std::size_t i = 0; i < n_joints; ++i) basis.push_back({K::Sin, i, 0});
    for (std::size_t i = 0; i < n_joints; ++i) basis.push_back({K::Cos, i, 0});
    for (std::size_t i = 0; i < n_joints; ++i) basis.push_back({K::VelocityTimesSin, i, n_joints + i});
    for (std::size_t i = 0; i < n_joints; ++i) basis.push_back({K::VelocityTimesCos, i, n_joints + i});
    return LiftingDictionary(n, std::move(basis));
}

LiftingDictionary make_identity_dictionary(std::size_t state_dim) {
    std::vector<BasisFunction> basis;
    for (std::size_t i = 0; i < state_dim; ++i) {
        basis.push_back({BasisFunction::Kind::Coordinate, i, 0});
    }
    return LiftingDictionary(state_dim, std::move(basis));
}

}  // namespace kmpc
