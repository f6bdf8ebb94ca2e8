#include "sympint/reference_oracles.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace sympint {

namespace oracle_detail {

// sin(w t)/w, continuous through w = 0 (limit t).
static double sine_over(double w, double t) {
    const double x = w * t;
    if (std::abs(x) < 1e-4) {
        const double x2 = x * x;
        return t * (1.0 - x2 / 6.0 * (1.0 - x2 / 20.0));
    }
    return std::sin(x) / w;
}

// (1 - cos(w t))/w, continuous through w = 0 (limit 0).
static double versine_over(double w, double t) {
    const double x = w * t;
    if (std::abs(x) < 1e-4) {
        const double x2 = x * x;
        return 0.5 * t * x * (1.0 - x2 / 12.0 * (1.0 - x2 / 30.0));
    }
    return (1.0 - std::cos(x)) / w;
}

double int_cos_cos(double a, double b, double t) {
    return 0.5 * (sine_over(a - b, t) + sine_over(a + b, t));
}

double int_sin_sin(double a, double b, double t) {
    return 0.5 * (sine_over(a - b, t) - sine_over(a + b, t));
}

double int_cos_sin(double a, double b, double t) {
    return 0.5 * (versine_over(b + a, t) + versine_over(b - a, t));
}

}  // namespace oracle_detail

namespace {

using oracle_detail::int_cos_cos;
using oracle_detail::int_cos_sin;
using oracle_detail::int_sin_sin;

Matrix symmetrized(const Matrix& M) { return 0.5 * (M + M.transpose()); }

// Coupling kernel in the eigenframe: S~ = integral_0^t R(s)' W~ R(s) ds where
// R(s) acts per mode as [cos(w s), sin(w s)/w; -w sin(w s), cos(w s)] on the
// position half only (W~ couples positions alone). Entry by entry this is a
// product of two mode solutions, integrated in closed form.
Matrix kernel_eigenframe(const Matrix& W, const Vector& omega, double t) {
    const Index d = W.rows();
    Matrix S(2 * d, 2 * d);
    for (Index j = 0; j < d; ++j) {
        for (Index k = 0; k < d; ++k) {
            const double wj = omega[j], wk = omega[k], w = W(j, k);
            S(j, k) = w * int_cos_cos(wj, wk, t);
            S(j, d + k) = w * int_cos_sin(wj, wk, t) / wk;
            S(d + j, k) = w * int_cos_sin(wk, wj, t) / wj;
            S(d + j, d + k) = w * int_sin_sin(wj, wk, t) / (wj * wk);
        }
    }
    return S;
}

Matrix conjugate_pairwise(const Matrix& U, const Matrix& S) {
    const Index d = U.rows();
    Matrix out(2 * d, 2 * d);
    out.topLeftCorner(d, d) = U * S.topLeftCorner(d, d) * U.transpose();
    out.topRightCorner(d, d) = U * S.topRightCorner(d, d) * U.transpose();
    out.bottomLeftCorner(d, d) = U * S.bottomLeftCorner(d, d) * U.transpose();
    out.bottomRightCorner(d, d) = U * S.bottomRightCorner(d, d) * U.transpose();
    return out;
}

}  // namespace

DiagonalizedStiffness diagonalize_stiffness(const Matrix& K, double epsilon) {
    detail::require(K.rows() == K.cols(), "diagonalize_stiffness: K not square");
    detail::require(epsilon > 0.0, "diagonalize_stiffness: epsilon must be positive");
    detail::require_finite(K, "diagonalize_stiffness: non-finite K");

    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(K));
    if (es.info() != Eigen::Success)
        throw std::runtime_error("diagonalize_stiffness: eigensolver failed");
    DiagonalizedStiffness out;
    out.U = es.eigenvectors();
    out.omega.resize(K.rows());
    for (Index j = 0; j < K.rows(); ++j) {
        const double lambda = es.eigenvalues()[j];
        if (!(lambda > 0.0))
            throw std::domain_error(
                "diagonalize_stiffness: stiffness matrix is not positive definite");
        out.omega[j] = std::sqrt(lambda / epsilon);
    }
    return out;
}

Matrix expm_diagonalization(const Matrix& K, double epsilon, double t) {
    const DiagonalizedStiffness dg = diagonalize_stiffness(K, epsilon);
    const Index d = K.rows();
    Vector c(d), s_over(d), s_times(d);
    for (Index j = 0; j < d; ++j) {
        const double w = dg.omega[j];
        c[j] = std::cos(w * t);
        s_over[j] = oracle_detail::sine_over(w, t);
        s_times[j] = -w * std::sin(w * t);
    }
    Matrix F(2 * d, 2 * d);
    F.topLeftCorner(d, d) = dg.U * c.asDiagonal() * dg.U.transpose();
    F.topRightCorner(d, d) = dg.U * s_over.asDiagonal() * dg.U.transpose();
    F.bottomLeftCorner(d, d) = dg.U * s_times.asDiagonal() * dg.U.transpose();
    F.bottomRightCorner(d, d) = F.topLeftCorner(d, d);
    return F;
}

Matrix expm_neg_transpose_diagonalization(const Matrix& K, double epsilon,
                                          double t) {
    const DiagonalizedStiffness dg = diagonalize_stiffness(K, epsilon);
    const Index d = K.rows();
    Vector c(d), s_over(d), s_times(d);
    for (Index j = 0; j < d; ++j) {
        const double w = dg.omega[j];
        c[j] = std::cos(w * t);
        s_times[j] = w * std::sin(w * t);
        s_over[j] = -oracle_detail::sine_over(w, t);
    }
    Matrix F(2 * d, 2 * d);
    F.topLeftCorner(d, d) = dg.U * c.asDiagonal() * dg.U.transpose();
    F.topRightCorner(d, d) = dg.U * s_times.asDiagonal() * dg.U.transpose();
    F.bottomLeftCorner(d, d) = dg.U * s_over.asDiagonal() * dg.U.transpose();
    F.bottomRightCorner(d, d) = F.topLeftCorner(d, d);
    return F;
}

Matrix expm_taylor_squaring(const Matrix& X, int n) {
    detail::require(X.rows() == X.cols(), "expm_taylor_squaring: X not square");
    detail::require(n >= 0, "expm_taylor_squaring: negative squaring count");
    detail::require_finite(X, "expm_taylor_squaring: non-finite input");
    Matrix Y = Matrix::Identity(X.rows(), X.cols()) + X / std::ldexp(1.0, n);
    for (int j = 0; j < n; ++j) Y = (Y * Y).eval();
    return Y;
}

Matrix expm_dense(const Matrix& X) {
    detail::require(X.rows() == X.cols(), "expm_dense: X not square");
    detail::require_finite(X, "expm_dense: non-finite input");
    const Index d = X.rows();
    const Matrix I = Matrix::Identity(d, d);
    if (d == 0) return X;

    const double norm = X.cwiseAbs().rowwise().sum().maxCoeff();
    int s = 0;
    if (norm > 0.03125) s = static_cast<int>(std::ceil(std::log2(norm))) + 5;

    const Matrix Y = X / std::ldexp(1.0, s);
    Matrix R = I;
    for (int k = 18; k >= 1; --k) R = I + (Y * R) / static_cast<double>(k);
    for (int j = 0; j < s; ++j) R = (R * R).eval();
    return R;
}

std::vector<Matrix> stiffness_quadratic_kernels(const Matrix& K,
                                                const std::vector<Matrix>& dK,
                                                double epsilon, double t) {
    const DiagonalizedStiffness dg = diagonalize_stiffness(K, epsilon);
    std::vector<Matrix> out;
    out.reserve(dK.size());
    for (const Matrix& D : dK) {
        detail::require(D.rows() == K.rows() && D.cols() == K.cols(),
                        "stiffness_quadratic_kernels: derivative shape mismatch");
        const Matrix W =
            dg.U.transpose() * (symmetrized(D) / epsilon) * dg.U;
        out.push_back(conjugate_pairwise(dg.U, kernel_eigenframe(W, dg.omega, t)));
    }
    return out;
}

PhaseState analytic_flow_1d(const PhaseState& s, double K, const Vector& dK,
                            double epsilon, double H) {
    detail::require(s.dim_fast() == 1, "analytic_flow_1d: needs d_f = 1");
    detail::require(dK.size() == s.dim_slow(),
                    "analytic_flow_1d: dK size must match slow dimension");
    detail::require(epsilon > 0.0, "analytic_flow_1d: epsilon must be positive");
    detail::require(std::isfinite(H), "analytic_flow_1d: non-finite step");
    if (!(K > 0.0))
        throw std::domain_error("analytic_flow_1d: stiffness must be positive");

    const double w = std::sqrt(K / epsilon);
    const double q = s.q_fast[0], p = s.p_fast[0];
    const double c = std::cos(w * H), sn = std::sin(w * H);

    // integral_0^H q_fast(t)^2 dt for the rotating solution, in closed form.
    const double quad =
        (2.0 * w * (H * p * p + p * q + w * w * H * q * q) -
         2.0 * w * p * q * std::cos(2.0 * w * H) +
         (-p * p + w * w * q * q) * std::sin(2.0 * w * H)) /
        (4.0 * w * w * w);

    PhaseState out = s;
    out.q_fast[0] = c * q + sn / w * p;
    out.p_fast[0] = -w * sn * q + c * p;
    for (Index i = 0; i < s.dim_slow(); ++i)
        out.p_slow[i] -= 0.5 / epsilon * dK[i] * quad;
    return out;
}

PhaseState exact_frozen_flow(const PhaseState& s, const Matrix& K,
                             const std::vector<Matrix>& dK, double epsilon,
                             double H) {
    detail::require(s.dim_fast() == K.rows(),
                    "exact_frozen_flow: state/stiffness dimension mismatch");
    detail::require(static_cast<Index>(dK.size()) == s.dim_slow(),
                    "exact_frozen_flow: dK count must match slow dimension");
    detail::require(std::isfinite(H), "exact_frozen_flow: non-finite step");

    const DiagonalizedStiffness dg = diagonalize_stiffness(K, epsilon);
    const Index d = K.rows();
    const Vector qt = dg.U.transpose() * s.q_fast;
    const Vector pt = dg.U.transpose() * s.p_fast;

    Vector z(2 * d);
    z << qt, pt;

    PhaseState out = s;
    Vector qn(d), pn(d);
    for (Index j = 0; j < d; ++j) {
        const double w = dg.omega[j];
        const double c = std::cos(w * H), sn = std::sin(w * H);
        qn[j] = c * qt[j] + sn / w * pt[j];
        pn[j] = -w * sn * qt[j] + c * pt[j];
    }
    out.q_fast = dg.U * qn;
    out.p_fast = dg.U * pn;

    for (Index i = 0; i < s.dim_slow(); ++i) {
        const Matrix W =
            dg.U.transpose() * (symmetrized(dK[static_cast<size_t>(i)]) / epsilon) *
            dg.U;
        const Matrix S = kernel_eigenframe(W, dg.omega, H);
        out.p_slow[i] -= 0.5 * z.dot(S * z);
    }
    return out;
}

VerletSeed diagonalization_seed(const Matrix& K, const std::vector<Matrix>& dK,
                                double epsilon, double h) {
    detail::require(h >= 0.0 && std::isfinite(h),
                    "diagonalization_seed: step must be finite and nonnegative");
    const DiagonalizedStiffness dg = diagonalize_stiffness(K, epsilon);
    const Index d = K.rows();

    VerletSeed seed;
    seed.h = h;
    seed.A = expm_neg_transpose_diagonalization(K, epsilon, h);
    seed.C = expm_diagonalization(K, epsilon, h);

    // Eigenframe version of A for the coupling blocks: B_i = A S_i with the
    // products done mode-wise before rotating back.
    Matrix At = Matrix::Zero(2 * d, 2 * d);
    for (Index j = 0; j < d; ++j) {
        const double w = dg.omega[j];
        const double c = std::cos(w * h), sn = std::sin(w * h);
        At(j, j) = c;
        At(j, d + j) = w * sn;
        At(d + j, j) = -oracle_detail::sine_over(w, h);
        At(d + j, d + j) = c;
    }
    seed.B.reserve(dK.size());
    for (const Matrix& D : dK) {
        const Matrix W = dg.U.transpose() * (symmetrized(D) / epsilon) * dg.U;
        const Matrix S = kernel_eigenframe(W, dg.omega, h);
        seed.B.push_back(conjugate_pairwise(dg.U, At * S));
    }
    return seed;
}

namespace {

struct VerletWorkspace {
    Matrix K;                  // frozen stiffness (FrozenSlow only)
    std::vector<Matrix> dK;
    double fast_energy(const QuasiQuadraticSystem& sys, const PhaseState& s) const {
        return 0.5 * s.p_fast.squaredNorm() +
               0.5 / sys.epsilon * s.q_fast.dot(K * s.q_fast);
    }
};

void verlet_steps(const QuasiQuadraticSystem& sys, PhaseState& s, double h,
                  long nsteps, VerletMode mode, const VerletWorkspace& ws,
                  double e_ref) {
    const double blow_up = 10.0 * std::abs(e_ref) + 1.0;
    try {
    for (long k = 0; k < nsteps; ++k) {
        if (mode == VerletMode::FullSystem) {
            const Vector qf = s.q_fast + 0.5 * h * s.p_fast;
            const Vector qs = s.q_slow + 0.5 * h * s.p_slow;
            const Vector g = sys.grad_V(qf, qs);
            detail::require(g.size() == sys.d_f + sys.d_s,
                            "fine_verlet_flow: grad_V has wrong size");
            const Stiffness st = stiffness_at(sys, qs);
            s.p_fast -= h * (g.head(sys.d_f) + (1.0 / sys.epsilon) * (st.K * qf));
            for (Index i = 0; i < sys.d_s; ++i) {
                const double pull =
                    0.5 / sys.epsilon * qf.dot(st.dK[static_cast<size_t>(i)] * qf);
                s.p_slow[i] -= h * (g[sys.d_f + i] + pull);
            }
            s.q_fast = qf + 0.5 * h * s.p_fast;
            s.q_slow = qs + 0.5 * h * s.p_slow;
        } else {
            const Vector qf = s.q_fast + 0.5 * h * s.p_fast;
            s.p_fast -= h * (1.0 / sys.epsilon) * (ws.K * qf);
            for (Index i = 0; i < sys.d_s; ++i)
                s.p_slow[i] -=
                    h * 0.5 / sys.epsilon * qf.dot(ws.dK[static_cast<size_t>(i)] * qf);
            s.q_fast = qf + 0.5 * h * s.p_fast;
        }
        if ((k & 127) == 127 || k + 1 == nsteps) {
            // An energy that overflows past evaluability is the extreme case
            // of the blow-up this guard exists to catch.
            double e = std::numeric_limits<double>::infinity();
            try {
                e = mode == VerletMode::FullSystem ? energy(sys, s)
                                                   : ws.fast_energy(sys, s);
            } catch (const std::exception&) {
            }
            if (!std::isfinite(e) || std::abs(e) > blow_up)
                throw std::runtime_error(
                    "fine_verlet_flow: energy blow-up, step size unstable");
        }
    }
    } catch (const std::runtime_error&) {
        throw;
    } catch (const std::exception&) {
        // A state validation tripped inside a callback: if the trajectory has
        // overflowed, report it as the blow-up it is; otherwise it is a
        // genuine callback error and propagates untouched.
        const auto huge = [](const Vector& v) {
            if (v.size() == 0) return false;
            return !v.allFinite() || v.cwiseAbs().maxCoeff() > 1e50;
        };
        if (huge(s.q_fast) || huge(s.p_fast) || huge(s.q_slow) ||
            huge(s.p_slow))
            throw std::runtime_error(
                "fine_verlet_flow: energy blow-up, step size unstable");
        throw;
    }
}

double stability_limit(const QuasiQuadraticSystem& sys, const PhaseState& s0) {
    if (sys.d_f == 0) return std::numeric_limits<double>::infinity();
    const Stiffness st = stiffness_at(sys, s0.q_slow);
    const double knorm = st.K.cwiseAbs().rowwise().sum().maxCoeff();
    if (knorm <= 0.0) return std::numeric_limits<double>::infinity();
    return 0.2 * std::sqrt(sys.epsilon) / std::sqrt(knorm);
}

}  // namespace

double verlet_stability_step(const QuasiQuadraticSystem& sys,
                             const PhaseState& s0) {
    return stability_limit(sys, s0);
}

PhaseState fine_verlet_flow(const QuasiQuadraticSystem& sys,
                            const PhaseState& s0, double h_micro, double T,
                            VerletMode mode) {
    detail::require(h_micro > 0.0 && std::isfinite(h_micro),
                    "fine_verlet_flow: micro step must be positive");
    detail::require(T >= 0.0 && std::isfinite(T),
                    "fine_verlet_flow: horizon must be nonnegative");
    detail::require(s0.dim_fast() == sys.d_f && s0.dim_slow() == sys.d_s,
                    "fine_verlet_flow: state does not match system");
    detail::require(h_micro <= stability_limit(sys, s0),
                    "fine_verlet_flow: micro step exceeds stability limit "
                    "0.2 sqrt(eps)/||K||^(1/2)");
    if (mode == VerletMode::FullSystem)
        detail::require(bool(sys.grad_V), "fine_verlet_flow: system has no grad_V");

    PhaseState s = s0;
    const long nsteps = static_cast<long>(std::ceil(T / h_micro - 1e-9));
    if (nsteps <= 0) return s;
    const double h = T / static_cast<double>(nsteps);

    VerletWorkspace ws;
    if (sys.d_f > 0) {
        const Stiffness st = stiffness_at(sys, s0.q_slow);
        ws.K = st.K;
        ws.dK = st.dK;
    }
    const double e_ref =
        mode == VerletMode::FullSystem ? energy(sys, s0) : ws.fast_energy(sys, s0);
    verlet_steps(sys, s, h, nsteps, mode, ws, e_ref);
    return s;
}

std::vector<PhaseState> fine_verlet_trajectory(const QuasiQuadraticSystem& sys,
                                               const PhaseState& s0,
                                               double h_micro,
                                               const std::vector<double>& times,
                                               VerletMode mode) {
    detail::require(h_micro > 0.0 && std::isfinite(h_micro),
                    "fine_verlet_trajectory: micro step must be positive");
    detail::require(h_micro <= stability_limit(sys, s0),
                    "fine_verlet_trajectory: micro step exceeds stability limit "
                    "0.2 sqrt(eps)/||K||^(1/2)");
    if (mode == VerletMode::FullSystem)
        detail::require(bool(sys.grad_V),
                        "fine_verlet_trajectory: system has no grad_V");

    VerletWorkspace ws;
    if (sys.d_f > 0) {
        const Stiffness st = stiffness_at(sys, s0.q_slow);
        ws.K = st.K;
        ws.dK = st.dK;
    }
    const double e_ref =
        mode == VerletMode::FullSystem ? energy(sys, s0) : ws.fast_energy(sys, s0);

    std::vector<PhaseState> out;
    out.reserve(times.size());
    PhaseState s = s0;
    double t = 0.0;
    for (double target : times) {
        detail::require(target >= t - 1e-12,
                        "fine_verlet_trajectory: times must be nondecreasing");
        const double dt = target - t;
        if (dt > 1e-12) {
            const long nsteps = static_cast<long>(std::ceil(dt / h_micro - 1e-9));
            verlet_steps(sys, s, dt / static_cast<double>(nsteps), nsteps, mode, ws,
                         e_ref);
        }
        t = target;
        out.push_back(s);
    }
    return out;
}

}  // namespace sympint
