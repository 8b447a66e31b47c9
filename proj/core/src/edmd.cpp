#include "kmpc/edmd.hpp"

#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "kmpc/errors.hpp"

namespace kmpc {

Matrix pseudo_inverse(const Matrix& M, double rel_tol) {
    if (!M.allFinite()) throw InputError("pseudo_inverse: non-finite entries");
    if (rel_tol < 0.0) throw InputError("pseudo_inverse: negative tolerance");
    if (M.size() == 0) return Matrix::Zero(M.cols(), M.rows());

    Eigen::BDCSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw NumericalError("pseudo_inverse: SVD failed");

    const Vector& s = svd.singularValues();
    const double cutoff = rel_tol * (s.size() > 0 ? s[0] : 0.0);
    Vector s_inv = Vector::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s[i] > cutoff && s[i] > 0.0) s_inv[i] = 1.0 / s[i];
    }
    return svd.matrixV() * s_inv.asDiagonal() * svd.matrixU().transpose();
}

KoopmanModel fit(const Matrix& Xlift, const Matrix& Xbarlift, const Matrix& U,
                 const FitOptions& opts) {
    const Eigen::Index p = Xlift.rows();
    const Eigen::Index m = U.rows();
    const Eigen::Index N = Xlift.cols();
    if (N < 1) throw InputError("fit: need at least one data column");
    if (Xbarlift.rows() != p || Xbarlift.cols() != N || U.cols() != N) {
        throw InputError("fit: inconsistent data dimensions");
    }
    if (!Xlift.allFinite() || !Xbarlift.allFinite() || !U.allFinite()) {
        throw InputError("fit: non-finite data");
    }
    const auto n = opts.state_dim == 0 ? p : static_cast<Eigen::Index>(opts.state_dim);
    if (n > p) throw InputError("fit: state dimension exceeds lifted dimension");

    Matrix Omega(p + m, N);
    Omega << Xlift, U;

    Matrix K;
    if (opts.ridge > 0.0) {
        // K = Xbar Omega' (Omega Omega' + ridge I)^-1
        Matrix G = Omega * Omega.transpose();
        G.diagonal().array() += opts.ridge;
        K = G.ldlt().solve(Omega * Xbarlift.transpose()).transpose();
    } else {
        K = Xbarlift * pseudo_inverse(Omega, opts.rel_tol);
    }

    KoopmanModel model;
    model.A = K.leftCols(p);
    model.B = K.rightCols(m);
    model.C = Matrix::Zero(n, p);
    model.C.leftCols(n).setIdentity();
    model.dt = opts.dt;
    return model;
}

KoopmanModel fit(const LiftingDictionary& d, const Matrix& X, const Matrix& Xbar,
                 const Matrix& U, double dt, const FitOptions& opts) {
    FitOptions o = opts;
    o.state_dim = d.state_dim();
    o.dt = dt;
    return fit(d.lift_matrix(X), d.lift_matrix(Xbar), U, o);
}

Vector predict(const KoopmanModel& model, const Vector& z, const Vector& u) {
    if (z.size() != model.A.cols() || u.size() != model.B.cols()) {
        throw InputError("predict: dimension mismatch");
    }
    return model.A * z + model.B * u;
}

double fit_residual(const Matrix& K, const Matrix& Xlift, const Matrix& Xbarlift,
                    const Matrix& U) {
    Matrix Omega(Xlift.rows() + U.rows(), Xlift.cols());
    Omega << Xlift, U;
    return (Xbarlift - K * Omega).norm();
}

double multi_step_rmse(const KoopmanModel& model, const LiftingDictionary& d, const Matrix& X,
                       const Matrix& U, std::size_t horizon) {
    const auto h = static_cast<Eigen::Index>(horizon);
    if (horizon == 0) throw InputError("multi_step_rmse: horizon must be positive");
    if (h >= X.cols()) throw InputError("multi_step_rmse: horizon longer than trajectory");
    if (U.cols() < X.cols() - 1) throw InputError("multi_step_rmse: too few inputs");

    double sq = 0.0;
    std::size_t count = 0;
    for (Eigen::Index s = 0; s + h < X.cols(); ++s) {
        Vector z = d.lift(X.col(s));
        for (Eigen::Index j = 0; j < h; ++j) {
            z = model.A * z + model.B * U.col(s + j);
            const Vector err = model.C * z - X.col(s + j + 1);
            sq += err.squaredNorm();
            count += static_cast<std::size_t>(err.size());
        }
    }
    return std::sqrt(sq / static_cast<double>(count));
}

namespace {

nlohmann::json matrix_to_json(const Matrix& M) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols,
                        const char* name) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
        throw InputError(std::string("model json: ") + name + " has wrong row count");
    }
    Matrix M(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw InputError(std::string("model json: ") + name + " has wrong column count");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            M(r, c) = row[static_cast<std::size_t>(c)].get<double>();
        }
    }
    return M;
}

}  // namespace

nlohmann::json to_json(const KoopmanModel& model) {
    return {
        {"p", model.lifted_dim()},
        {"n", model.state_dim()},
        {"m", model.input_dim()},
        {"dt", model.dt},
        {"A", matrix_to_json(model.A)},
        {"B", matrix_to_json(model.B)},
        {"C", matrix_to_json(model.C)},
    };
}

KoopmanModel koopman_model_from_json(const nlohmann::json& j) {
    try {
        const auto p = j.at("p").get<Eigen::Index>();
        const auto n = j.at("n").get<Eigen::Index>();
        const auto m = j.at("m").get<Eigen::Index>();
        KoopmanModel model;
        model.dt = j.at("dt").get<double>();
        model.A = matrix_from_json(j.at("A"), p, p, "A");
        model.B = matrix_from_json(j.at("B"), p, m, "B");
        model.C = matrix_from_json(j.at("C"), n, p, "C");
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("model json: ") + e.what());
    }
}

}  // namespace kmpc
