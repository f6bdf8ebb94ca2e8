#include "sympint/symplectic_expm.hpp"

#include <cmath>
#include <stdexcept>

namespace sympint {

namespace {

void check_stiffness_args(const Matrix& K, const std::vector<Matrix>& dK,
                          double epsilon) {
    detail::require(K.rows() == K.cols(), "stiffness matrix must be square");
    detail::require(epsilon > 0.0, "epsilon must be positive");
    detail::require_finite(K, "non-finite stiffness matrix");
    for (const Matrix& D : dK) {
        detail::require(D.rows() == K.rows() && D.cols() == K.cols(),
                        "stiffness derivative has wrong shape");
        detail::require_finite(D, "non-finite stiffness derivative");
    }
}

}  // namespace

BlockGenerator build_generator(const Matrix& K, const std::vector<Matrix>& dK,
                               double epsilon) {
    check_stiffness_args(K, dK, epsilon);
    const Index d = K.rows();
    BlockGenerator g;
    g.N = Matrix::Zero(2 * d, 2 * d);
    g.N.topRightCorner(d, d) = Matrix::Identity(d, d);
    g.N.bottomLeftCorner(d, d) = -(1.0 / epsilon) * K;
    g.M.reserve(dK.size());
    for (const Matrix& D : dK) {
        Matrix M = Matrix::Zero(2 * d, 2 * d);
        M.topLeftCorner(d, d) = (1.0 / epsilon) * D;
        g.M.push_back(std::move(M));
    }
    return g;
}

VerletSeed verlet_seed(const Matrix& K, const std::vector<Matrix>& dK,
                       double epsilon, double h) {
    check_stiffness_args(K, dK, epsilon);
    detail::require(h >= 0.0, "verlet_seed: step must be nonnegative");
    detail::require(std::isfinite(h), "verlet_seed: non-finite step");

    const Index d = K.rows();
    const Matrix I = Matrix::Identity(d, d);
    const Matrix W = (1.0 / epsilon) * K;          // eps^{-1} K
    const Matrix half = I - 0.5 * h * h * W;       // I - eps^{-1} K h^2 / 2
    const Matrix quarter = I - 0.25 * h * h * W;   // I - eps^{-1} K h^2 / 4

    VerletSeed s;
    s.h = h;
    s.A.resize(2 * d, 2 * d);
    s.A.topLeftCorner(d, d) = half;
    s.A.topRightCorner(d, d) = h * W;
    s.A.bottomLeftCorner(d, d) = -h * quarter;
    s.A.bottomRightCorner(d, d) = half;

    s.C.resize(2 * d, 2 * d);
    s.C.topLeftCorner(d, d) = half;
    s.C.topRightCorner(d, d) = h * quarter;
    s.C.bottomLeftCorner(d, d) = -h * W;
    s.C.bottomRightCorner(d, d) = half;

    s.B.reserve(dK.size());
    for (const Matrix& D : dK) {
        const Matrix Wi = (1.0 / epsilon) * D;
        Matrix B(2 * d, 2 * d);
        B.topLeftCorner(d, d) = h * Wi;
        B.topRightCorner(d, d) = 0.5 * h * h * Wi;
        B.bottomLeftCorner(d, d) = -0.5 * h * h * Wi;
        B.bottomRightCorner(d, d) = -0.25 * h * h * h * Wi;
        s.B.push_back(std::move(B));
    }
    return s;
}

ExpTriple square_triple(ExpTriple t) {
    detail::require(t.F2.rows() == t.F2.cols() && t.F3.rows() == t.F3.cols() &&
                        t.F2.rows() == t.F3.rows(),
                    "square_triple: blocks must be square and equally sized");
    Matrix F2n = t.F2 * t.F2;
    Matrix F3n = t.F3 * t.F3;
    for (Matrix& G : t.G2) {
        detail::require(G.rows() == t.F2.rows() && G.cols() == t.F2.cols(),
                        "square_triple: coupling block has wrong shape");
        G = (t.F2 * G + G * t.F3).eval();
    }
    t.F2 = std::move(F2n);
    t.F3 = std::move(F3n);
    t.H *= 2.0;
    t.mult_count += 2 + 2 * static_cast<long>(t.G2.size());
    return t;
}

int max_squarings(double epsilon) {
    detail::require(epsilon > 0.0, "max_squarings: epsilon must be positive");
    const double stiff_bits = std::ceil(std::log2(1.0 / epsilon));
    const int n_stiff = stiff_bits > 0 ? static_cast<int>(stiff_bits) + 4 : 4;
    return n_stiff < 12 ? 12 : n_stiff;
}

ExpTriple symplectic_expm(const Matrix& K, const std::vector<Matrix>& dK,
                          double epsilon, double H, int n) {
    check_stiffness_args(K, dK, epsilon);
    detail::require(H >= 0.0 && std::isfinite(H),
                    "symplectic_expm: macro step must be finite and nonnegative");
    detail::require(n >= 1, "symplectic_expm: need at least one squaring");
    detail::require(n <= max_squarings(epsilon),
                    "symplectic_expm: squaring count exceeds accuracy guard");

    const double h = H / std::ldexp(1.0, n);   // H / 2^n
    VerletSeed seed = verlet_seed(K, dK, epsilon, h);

    ExpTriple t;
    t.F2 = std::move(seed.A);
    t.G2 = std::move(seed.B);
    t.F3 = std::move(seed.C);
    t.H = h;
    t.mult_count = 0;
    for (int j = 0; j < n; ++j) t = square_triple(std::move(t));
    t.H = H;   // avoid accumulated 2*...*2*h roundoff in the reported step
    return t;
}

}  // namespace sympint
