#include "sympint/phase_core.hpp"

#include <cmath>
#include <stdexcept>

namespace sympint {

namespace detail {

void require(bool cond, const char* what) {
    if (!cond) throw std::invalid_argument(what);
}

void require_finite(double x, const char* what) {
    if (!std::isfinite(x))
        throw std::invalid_argument(std::string(what) + " must be finite");
}

void require_finite(const Vector& v, const char* what) {
    if (!v.allFinite()) throw std::invalid_argument(what);
}

void require_finite(const Matrix& m, const char* what) {
    if (!m.allFinite()) throw std::invalid_argument(what);
}

}  // namespace detail

Vector PhaseState::fast() const {
    Vector qp(q_fast.size() + p_fast.size());
    qp << q_fast, p_fast;
    return qp;
}

void PhaseState::set_fast(const Vector& qp) {
    detail::require(qp.size() == q_fast.size() + p_fast.size(),
                    "PhaseState::set_fast: size mismatch");
    q_fast = qp.head(q_fast.size());
    p_fast = qp.tail(p_fast.size());
}

PhaseState make_state(const Vector& q_fast, const Vector& p_fast,
                      const Vector& q_slow, const Vector& p_slow) {
    detail::require(q_fast.size() == p_fast.size(),
                    "make_state: fast position/momentum size mismatch");
    detail::require(q_slow.size() == p_slow.size(),
                    "make_state: slow position/momentum size mismatch");
    return PhaseState{q_fast, p_fast, q_slow, p_slow};
}

PhaseState zero_state(Index d_f, Index d_s) {
    detail::require(d_f >= 0 && d_s >= 0,
                    "zero_state: dimensions must be nonnegative");
    return PhaseState{Vector::Zero(d_f), Vector::Zero(d_f), Vector::Zero(d_s),
                      Vector::Zero(d_s)};
}

Stiffness stiffness_at(const QuasiQuadraticSystem& sys, const Vector& q_slow) {
    detail::require(static_cast<Index>(q_slow.size()) == sys.d_s,
                    "stiffness_at: slow position has wrong dimension");
    detail::require(bool(sys.K), "stiffness_at: system has no stiffness function");
    detail::require_finite(q_slow, "stiffness_at: non-finite slow position");

    Matrix K = sys.K(q_slow);
    detail::require(K.rows() == sys.d_f && K.cols() == sys.d_f,
                    "stiffness_at: K has wrong shape");
    detail::require_finite(K, "stiffness_at: non-finite stiffness");
    K = 0.5 * (K + K.transpose()).eval();

    Stiffness out;
    out.K = std::move(K);
    out.dK.reserve(static_cast<size_t>(sys.d_s));
    if (sys.d_s > 0) {
        detail::require(bool(sys.grad_K),
                        "stiffness_at: system has no stiffness gradient");
        std::vector<Matrix> dK = sys.grad_K(q_slow);
        detail::require(static_cast<Index>(dK.size()) == sys.d_s,
                        "stiffness_at: grad_K returned wrong count");
        for (Matrix& D : dK) {
            detail::require(D.rows() == sys.d_f && D.cols() == sys.d_f,
                            "stiffness_at: grad_K entry has wrong shape");
            detail::require_finite(D, "stiffness_at: non-finite stiffness gradient");
            out.dK.push_back(0.5 * (D + D.transpose()).eval());
        }
    }
    return out;
}

double energy(const QuasiQuadraticSystem& sys, const PhaseState& s) {
    detail::require(s.dim_fast() == sys.d_f && s.dim_slow() == sys.d_s,
                    "energy: state does not match system dimensions");
    detail::require(sys.epsilon > 0.0, "energy: epsilon must be positive");
    detail::require_finite(s.q_fast, "energy: non-finite q_fast");
    detail::require_finite(s.p_fast, "energy: non-finite p_fast");
    detail::require_finite(s.q_slow, "energy: non-finite q_slow");
    detail::require_finite(s.p_slow, "energy: non-finite p_slow");

    const double kinetic = 0.5 * (s.p_fast.squaredNorm() + s.p_slow.squaredNorm());
    const double soft = sys.V ? sys.V(s.q_fast, s.q_slow) : 0.0;
    double stiff = 0.0;
    if (sys.d_f > 0) {
        const Stiffness st = stiffness_at(sys, s.q_slow);
        stiff = 0.5 / sys.epsilon * s.q_fast.dot(st.K * s.q_fast);
    }
    const double total = kinetic + soft + stiff;
    detail::require(std::isfinite(total), "energy: non-finite result");
    return total;
}

Matrix symplectic_form(Index d) {
    detail::require(d >= 0, "symplectic_form: negative dimension");
    Matrix J = Matrix::Zero(2 * d, 2 * d);
    J.topRightCorner(d, d) = Matrix::Identity(d, d);
    J.bottomLeftCorner(d, d) = -Matrix::Identity(d, d);
    return J;
}

Matrix split_symplectic_form(Index d_f, Index d_s) {
    Matrix J = Matrix::Zero(2 * (d_f + d_s), 2 * (d_f + d_s));
    J.topLeftCorner(2 * d_f, 2 * d_f) = symplectic_form(d_f);
    J.bottomRightCorner(2 * d_s, 2 * d_s) = symplectic_form(d_s);
    return J;
}

}  // namespace sympint
