#include "sympint/iterative_expm.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "sympint/reference_oracles.hpp"

namespace sympint {

namespace {

void require_square_same(const Matrix& a, const Matrix& b, const char* what) {
    detail::require(a.rows() == a.cols() && b.rows() == b.cols() &&
                        a.rows() == b.rows(),
                    what);
}

}  // namespace

IterUpdate stiffness_update(const Matrix& K_prev, const Matrix& K_new,
                            const std::vector<Matrix>& dK_prev,
                            const std::vector<Matrix>& dK_new, double epsilon,
                            double h) {
    require_square_same(K_prev, K_new, "stiffness blocks must be square and of equal size");
    detail::require(dK_prev.size() == dK_new.size(),
                    "stiffness derivative lists must have equal length");
    detail::require(epsilon > 0.0, "epsilon must be positive");
    detail::require_finite(h, "micro step");

    const Index d = K_new.rows();
    IterUpdate upd;
    upd.D = Matrix::Zero(2 * d, 2 * d);
    upd.D.topRightCorner(d, d) = (h / epsilon) * (K_new - K_prev).transpose();
    upd.E.reserve(dK_new.size());
    for (std::size_t i = 0; i < dK_new.size(); ++i) {
        require_square_same(dK_prev[i], dK_new[i],
                            "stiffness derivative blocks must be square and of equal size");
        detail::require(dK_new[i].rows() == d,
                        "stiffness derivative blocks must match the stiffness size");
        Matrix E = Matrix::Zero(2 * d, 2 * d);
        E.topLeftCorner(d, d) = (h / epsilon) * (dK_new[i] - dK_prev[i]);
        upd.E.push_back(std::move(E));
    }
    return upd;
}

Matrix lie_trotter_exp(const Matrix& X_prev_exp, const Matrix& X_prev,
                       const Matrix& X_new, int n) {
    require_square_same(X_prev, X_new, "generators must be square and of equal size");
    require_square_same(X_prev_exp, X_prev,
                        "carried exponential must match the generator size");
    detail::require(n >= 0 && n <= 62, "squaring count out of range");

    const double scale = std::ldexp(1.0, -n);
    const Matrix diff = (X_new - X_prev) * scale;

    Matrix inner;
    if ((diff * diff).isZero(0.0)) {
        inner = Matrix::Identity(diff.rows(), diff.cols()) + diff;
    } else {
        inner = expm_dense(diff);
    }

    Matrix result = X_prev_exp * inner;
    for (int k = 0; k < n; ++k) result = result * result;
    return result;
}

IterState iter_init(const Matrix& K0, const std::vector<Matrix>& dK0,
                    double epsilon, double H, int n,
                    const SeedBackend& seed_backend) {
    detail::require(epsilon > 0.0, "epsilon must be positive");
    detail::require(H >= 0.0, "macro step must be nonnegative");
    detail::require(n >= 1 && n <= max_squarings(epsilon),
                    "squaring count out of range");

    const double h = H * std::ldexp(1.0, -n);
    VerletSeed seed = seed_backend ? seed_backend(K0, dK0, epsilon, h)
                                   : verlet_seed(K0, dK0, epsilon, h);

    IterState state;
    state.A = std::move(seed.A);
    state.B = std::move(seed.B);
    state.C = std::move(seed.C);
    state.K_prev = 0.5 * (K0 + K0.transpose());
    state.dK_prev.reserve(dK0.size());
    for (const Matrix& dK : dK0)
        state.dK_prev.push_back(0.5 * (dK + dK.transpose()));
    state.h = h;
    state.epsilon = epsilon;
    state.n = n;
    return state;
}

std::pair<IterState, ExpTriple> iter_update(IterState state, const Matrix& K_new,
                                            const std::vector<Matrix>& dK_new,
                                            int n) {
    detail::require(n == state.n,
                    "squaring count must match the initialized state");
    detail::require(dK_new.size() == state.dK_prev.size(),
                    "stiffness derivative lists must have equal length");

    const Index d = state.K_prev.rows();
    const Matrix K_sym = 0.5 * (K_new + K_new.transpose());
    // W is the top-right block of D; with symmetric stiffness the transpose in
    // the definition is cosmetic but kept so the update reads like the formula.
    const Matrix W = (state.h / state.epsilon) * (K_sym - state.K_prev).transpose();

    Matrix A_next = state.A;
    A_next.rightCols(d) += state.A.leftCols(d) * W;  // A (I + D)

    Matrix C_next = state.C;
    C_next.leftCols(d) -= state.C.rightCols(d) * W.transpose();  // C (I - D')

    std::vector<Matrix> B_next;
    B_next.reserve(state.B.size());
    std::vector<Matrix> dK_sym;
    dK_sym.reserve(dK_new.size());
    for (std::size_t i = 0; i < dK_new.size(); ++i) {
        detail::require(dK_new[i].rows() == d && dK_new[i].cols() == d,
                        "stiffness derivative blocks must match the stiffness size");
        dK_sym.push_back(0.5 * (dK_new[i] + dK_new[i].transpose()));
        const Matrix U = (state.h / state.epsilon) * (dK_sym[i] - state.dK_prev[i]);
        Matrix B = state.B[i];
        // B + A E_i - B D': E_i hits the left block column, D' the right one.
        B.leftCols(d) += state.A.leftCols(d) * U - state.B[i].rightCols(d) * W.transpose();
        B_next.push_back(std::move(B));
    }

    state.A = std::move(A_next);
    state.B = std::move(B_next);
    state.C = std::move(C_next);
    state.K_prev = K_sym;
    state.dK_prev = std::move(dK_sym);

    ExpTriple triple;
    triple.F2 = state.A;
    triple.G2 = state.B;
    triple.F3 = state.C;
    triple.H = state.h;
    triple.mult_count = 0;
    for (int k = 0; k < state.n; ++k) triple = square_triple(std::move(triple));

    return {std::move(state), std::move(triple)};
}

TripleBlockResult triple_block_exp(const Matrix& N, const Matrix& M, double t,
                                   const DenseExpm& backend) {
    require_square_same(N, M, "generator blocks must be square and of equal size");
    detail::require(N.rows() % 2 == 0, "generator size must be even");
    detail::require_finite(t, "time");

    const Index m = N.rows();
    const Matrix J = symplectic_form(m / 2);

    Matrix X = Matrix::Zero(3 * m, 3 * m);
    X.block(0, 0, m, m) = -N.transpose();
    X.block(0, m, m, m) = M * J;
    X.block(m, m, m, m) = -N.transpose();
    X.block(m, 2 * m, m, m) = M;
    X.block(2 * m, 2 * m, m, m) = N;

    const Matrix E = backend ? backend(X * t) : expm_dense(X * t);

    TripleBlockResult r;
    r.alpha = E.block(0, 0, m, m);
    r.beta = E.block(0, m, m, m);
    r.gamma = E.block(0, 2 * m, m, m);
    r.F2 = E.block(m, m, m, m);
    r.G2 = E.block(m, 2 * m, m, m);
    r.F3 = E.block(2 * m, 2 * m, m, m);
    return r;
}

Matrix partial_G2(const Matrix& N, const Matrix& M, const Matrix& dM, double t) {
    require_square_same(N, M, "generator blocks must be square and of equal size");
    require_square_same(M, dM, "generator blocks must be square and of equal size");
    detail::require(N.rows() % 2 == 0, "generator size must be even");

    const Index m = N.rows();
    const Matrix J = symplectic_form(m / 2);
    const TripleBlockResult tb = triple_block_exp(N, M, t);

    // int_0^t F3' dM F3 ds from the two-block exponential with dM coupling.
    Matrix X = Matrix::Zero(2 * m, 2 * m);
    X.block(0, 0, m, m) = -N.transpose();
    X.block(0, m, m, m) = dM;
    X.block(m, m, m, m) = N;
    const Matrix E = expm_dense(X * t);
    const Matrix S_dM = tb.F3.transpose() * E.block(0, m, m, m);

    const Matrix F3t_gamma = tb.F3.transpose() * tb.gamma;
    const Matrix quad = tb.G2.transpose() * J * tb.G2;
    return tb.F2 * (F3t_gamma.transpose() + F3t_gamma + S_dM + quad);
}

}  // namespace sympint
