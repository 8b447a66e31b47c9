#include "oracles.hpp"

#include <cmath>
#include <limits>

#include <Eigen/LU>
#include <Eigen/QR>

namespace kmpc::testing {

EnumerationResult enumerate_qp(const Matrix& P, const Vector& q, const Matrix& G,
                               const Vector& lower, const Vector& upper, const Matrix& Aeq,
                               const Vector& beq) {
    const Eigen::Index d = q.size();
    const Eigen::Index c = G.rows();
    const Eigen::Index neq = Aeq.rows();
    std::size_t patterns = 1;
    for (Eigen::Index i = 0; i < c; ++i) patterns *= 3;

    EnumerationResult best;
    best.objective = std::numeric_limits<double>::infinity();
    std::vector<int> state(static_cast<std::size_t>(c));
    for (std::size_t code = 0; code < patterns; ++code) {
        std::size_t rest = code;
        Eigen::Index active = 0;
        bool usable = true;
        for (Eigen::Index i = 0; i < c; ++i) {
            const int s = static_cast<int>(rest % 3);
            rest /= 3;
            state[static_cast<std::size_t>(i)] = s;
            if (s == 1 && !std::isfinite(lower[i])) usable = false;
            if (s == 2 && !std::isfinite(upper[i])) usable = false;
            if (s != 0) ++active;
        }
        if (!usable) continue;

        const Eigen::Index rows = neq + active;
        Matrix K = Matrix::Zero(d + rows, d + rows);
        Vector rhs = Vector::Zero(d + rows);
        K.topLeftCorner(d, d) = P;
        rhs.head(d) = -q;
        if (neq > 0) {
            K.block(d, 0, neq, d) = Aeq;
            K.block(0, d, d, neq) = Aeq.transpose();
            rhs.segment(d, neq) = beq;
        }
        Eigen::Index r = d + neq;
        for (Eigen::Index i = 0; i < c; ++i) {
            const int s = state[static_cast<std::size_t>(i)];
            if (s == 0) continue;
            K.block(r, 0, 1, d) = G.row(i);
            K.block(0, r, d, 1) = G.row(i).transpose();
            rhs[r] = s == 1 ? lower[i] : upper[i];
            ++r;
        }
        Eigen::FullPivLU<Matrix> lu(K);
        if (lu.rank() < K.rows()) continue;
        const Vector sol = lu.solve(rhs);
        const Vector x = sol.head(d);

        const double scale = 1.0 + rhs.lpNorm<Eigen::Infinity>();
        bool ok = true;
        if (c > 0) {
            const Vector gx = G * x;
            for (Eigen::Index i = 0; i < c && ok; ++i) {
                if (gx[i] < lower[i] - 1e-9 * scale || gx[i] > upper[i] + 1e-9 * scale) ok = false;
            }
        }
        if (ok && neq > 0 && (Aeq * x - beq).lpNorm<Eigen::Infinity>() > 1e-8 * scale) ok = false;
        if (!ok) continue;

        const double obj = 0.5 * x.dot(P * x) + q.dot(x);
        if (obj < best.objective) {
            best.feasible = true;
            best.objective = obj;
            best.x = x;
        }
    }
    return best;
}

SparseMpcSolution sparse_mpc(const Matrix& A, const Matrix& B, const Vector& Q,
                             const Vector& R, const Vector& z0, const Vector& u_prev,
                             const Matrix& lifted_ref, const Vector& u_lower,
                             const Vector& u_upper) {
    const Eigen::Index p = A.rows();
    const Eigen::Index m = B.cols();
    const Eigen::Index H = lifted_ref.cols();
    const Eigen::Index nzv = p * H;
    const Eigen::Index nuv = m * H;
    const Eigen::Index d = nzv + nuv;

    Matrix P = Matrix::Zero(d, d);
    Vector q = Vector::Zero(d);
    double constant = 0.0;
    for (Eigen::Index k = 0; k < H; ++k) {
        const Vector rk = lifted_ref.col(k).head(p);
        P.block(k * p, k * p, p, p) = 2.0 * Q.asDiagonal().toDenseMatrix();
        q.segment(k * p, p) = -2.0 * Q.cwiseProduct(rk);
        constant += rk.dot(Q.cwiseProduct(rk));
    }
    // du = D u - e u_prev with D the block first-difference operator.
    Matrix D = Matrix::Zero(nuv, nuv);
    for (Eigen::Index k = 0; k < H; ++k) {
        D.block(k * m, k * m, m, m).setIdentity();
        if (k > 0) D.block(k * m, (k - 1) * m, m, m) = -Matrix::Identity(m, m);
    }
    Vector e = Vector::Zero(nuv);
    e.head(m) = u_prev;
    const Matrix Rbar = R.replicate(H, 1).asDiagonal().toDenseMatrix();
    P.bottomRightCorner(nuv, nuv) = 2.0 * D.transpose() * Rbar * D;
    q.tail(nuv) = -2.0 * D.transpose() * Rbar * e;
    constant += e.dot(Rbar * e);

    Matrix Aeq = Matrix::Zero(nzv, d);
    Vector beq = Vector::Zero(nzv);
    for (Eigen::Index k = 0; k < H; ++k) {
        Aeq.block(k * p, k * p, p, p).setIdentity();
        Aeq.block(k * p, nzv + k * m, p, m) = -B;
        if (k == 0) {
            beq.head(p) = A * z0;
        } else {
            Aeq.block(k * p, (k - 1) * p, p, p) = -A;
        }
    }
    Matrix G = Matrix::Zero(nuv, d);
    G.rightCols(nuv).setIdentity();
    const Vector lo = u_lower.replicate(H, 1);
    const Vector hi = u_upper.replicate(H, 1);

    const EnumerationResult r = enumerate_qp(P, q, G, lo, hi, Aeq, beq);
    SparseMpcSolution out;
    out.feasible = r.feasible;
    if (!r.feasible) return out;
    out.Z = r.x.head(nzv).reshaped(p, H);
    out.U = r.x.tail(nuv).reshaped(m, H);
    out.dU = (D * r.x.tail(nuv) - e).reshaped(m, H);
    out.cost = r.objective + constant;
    return out;
}

double mpc_rollout_cost(const Matrix& A, const Matrix& B, const Vector& Q, const Vector& R,
                        const Vector& z0, const Vector& u_prev, const Matrix& lifted_ref,
                        const Vector& du, Matrix* Z) {
    const Eigen::Index p = A.rows();
    const Eigen::Index m = B.cols();
    const Eigen::Index H = lifted_ref.cols();
    Vector z = z0;
    Vector u = u_prev;
    double cost = 0.0;
    if (Z) Z->resize(p, H);
    for (Eigen::Index k = 0; k < H; ++k) {
        const Vector dk = du.segment(k * m, m);
        u += dk;
        z = A * z + B * u;
        const Vector e = z - lifted_ref.col(k).head(p);
        cost += e.dot(Q.cwiseProduct(e)) + dk.dot(R.cwiseProduct(dk));
        if (Z) Z->col(k) = z;
    }
    return cost;
}

LqSolution riccati_lq(const Matrix& A, const Matrix& B, const Vector& c, const Matrix& Q,
                      const Matrix& R, const Matrix& Qf, const Vector& x0, const Vector& xf,
                      std::size_t T) {
    const Eigen::Index n = A.rows();
    const Eigen::Index m = B.cols();
    std::vector<Matrix> K(T);
    std::vector<Vector> kff(T);
    Matrix S = Qf;
    Vector s = -Qf * xf;
    for (std::size_t k = T; k-- > 0;) {
        const Vector Sc_s = S * c + s;
        const Matrix Quu = R + B.transpose() * S * B;
        const Matrix Qux = B.transpose() * S * A;
        const Vector Qu = B.transpose() * Sc_s;
        const Matrix Qxx = Q + A.transpose() * S * A;
        const Vector Qx = -Q * xf + A.transpose() * Sc_s;
        const Eigen::LDLT<Matrix> ldlt(Quu);
        K[k] = -ldlt.solve(Qux);
        kff[k] = -ldlt.solve(Qu);
        S = Qxx + Qux.transpose() * K[k];
        S = 0.5 * (S + S.transpose()).eval();
        s = Qx + Qux.transpose() * kff[k];
    }
    LqSolution out;
    out.X.resize(n, static_cast<Eigen::Index>(T) + 1);
    out.U.resize(m, static_cast<Eigen::Index>(T));
    out.X.col(0) = x0;
    for (std::size_t k = 0; k < T; ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        const Vector x = out.X.col(kk);
        const Vector u = K[k] * x + kff[k];
        out.U.col(kk) = u;
        out.X.col(kk + 1) = A * x + B * u + c;
        const Vector e = x - xf;
        out.cost += 0.5 * e.dot(Q * e) + 0.5 * u.dot(R * u);
    }
    const Vector eT = out.X.col(static_cast<Eigen::Index>(T)) - xf;
    out.cost += 0.5 * eT.dot(Qf * eT);
    return out;
}

Vector arm_com_positions(const PlantParams& p, const Vector& q) {
    Vector pos(2 * static_cast<Eigen::Index>(p.dof));
    double angle = 0.0, x = 0.0, y = 0.0;
    for (std::size_t i = 0; i < p.dof; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        angle += q[ii];
        pos[2 * ii] = x + p.com[ii] * std::sin(angle);
        pos[2 * ii + 1] = y - p.com[ii] * std::cos(angle);
        x += p.length[ii] * std::sin(angle);
        y -= p.length[ii] * std::cos(angle);
    }
    return pos;
}

Vector arm_tip_position(const PlantParams& p, const Vector& q) {
    double angle = 0.0, x = 0.0, y = 0.0;
    for (std::size_t i = 0; i < p.dof; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        angle += q[ii];
        x += p.length[ii] * std::sin(angle);
        y -= p.length[ii] * std::cos(angle);
    }
    Vector tip(2);
    tip << x, y;
    return tip;
}

namespace {

template <class F>
Matrix fd_jacobian(const F& f, const Vector& q, double h) {
    const Vector f0 = f(q);
    Matrix J(f0.size(), q.size());
    for (Eigen::Index j = 0; j < q.size(); ++j) {
        Vector qp = q, qm = q;
        qp[j] += h;
        qm[j] -= h;
        J.col(j) = (f(qp) - f(qm)) / (2.0 * h);
    }
    return J;
}

}  // namespace

Matrix arm_mass_matrix_kinematic(const PlantParams& p, const Vector& q) {
    const auto dof = static_cast<Eigen::Index>(p.dof);
    const Matrix Jc = fd_jacobian([&](const Vector& v) { return arm_com_positions(p, v); }, q, 1e-6);
    const Matrix Jt = fd_jacobian([&](const Vector& v) { return arm_tip_position(p, v); }, q, 1e-6);
    Matrix M = Matrix::Zero(dof, dof);
    for (Eigen::Index i = 0; i < dof; ++i) {
        const Matrix Jv = Jc.middleRows(2 * i, 2);
        // Absolute link angle is the sum of the first i+1 joint angles.
        Matrix Jw = Matrix::Zero(1, dof);
        Jw.leftCols(i + 1).setOnes();
        M += p.mass[i] * Jv.transpose() * Jv + p.inertia[i] * Jw.transpose() * Jw;
    }
    M += p.payload_mass * Jt.transpose() * Jt;
    return M;
}

double arm_potential_kinematic(const PlantParams& p, const Vector& q) {
    const Vector pos = arm_com_positions(p, q);
    double v = 0.0;
    for (std::size_t i = 0; i < p.dof; ++i) {
        v += p.mass[static_cast<Eigen::Index>(i)] * p.gravity * pos[2 * static_cast<Eigen::Index>(i) + 1];
    }
    v += p.payload_mass * p.gravity * arm_tip_position(p, q)[1];
    return v;
}

Vector arm_acceleration_lagrange(const PlantParams& p, const Vector& q, const Vector& qdot,
                                 const Vector& joint_torque) {
    const Eigen::Index dof = q.size();
    const double h = 1e-4;
    const Matrix M = arm_mass_matrix_kinematic(p, q);
    Matrix Mdot = Matrix::Zero(dof, dof);
    Vector dT = Vector::Zero(dof);
    for (Eigen::Index j = 0; j < dof; ++j) {
        Vector qp = q, qm = q;
        qp[j] += h;
        qm[j] -= h;
        const Matrix dM = (arm_mass_matrix_kinematic(p, qp) - arm_mass_matrix_kinematic(p, qm)) / (2.0 * h);
        Mdot += dM * qdot[j];
        dT[j] = 0.5 * qdot.dot(dM * qdot);
    }
    Vector grad_v(dof);
    for (Eigen::Index j = 0; j < dof; ++j) {
        Vector qp = q, qm = q;
        qp[j] += h;
        qm[j] -= h;
        grad_v[j] = (arm_potential_kinematic(p, qp) - arm_potential_kinematic(p, qm)) / (2.0 * h);
    }
    const Vector rhs = joint_torque - Mdot * qdot + dT - grad_v;
    return M.ldlt().solve(rhs);
}

Matrix random_spd(std::mt19937_64& rng, Eigen::Index d, double lo, double hi) {
    std::uniform_real_distribution<double> eig(lo, hi);
    const Matrix X = random_matrix(rng, d, d);
    const Matrix Qo = Eigen::HouseholderQR<Matrix>(X).householderQ();
    Vector lam(d);
    for (Eigen::Index i = 0; i < d; ++i) lam[i] = eig(rng);
    Matrix S = Qo * lam.asDiagonal() * Qo.transpose();
    return 0.5 * (S + S.transpose());
}

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double scale) {
    std::normal_distribution<double> n(0.0, scale);
    Matrix M(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) M(i, j) = n(rng);
    }
    return M;
}

}  // namespace kmpc::testing
