#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

// Core state and model types for separable Hamiltonians of the form
//
//   H(q,p) = 1/2 p.p + V(q) + (1/eps) * 1/2 * q_fast' K(q_slow) q_fast
//
// with unit masses. Coordinates are split into a fast block of dimension d_f
// (stiff, frequencies ~ 1/sqrt(eps)) and a slow block of dimension d_s. The
// stiffness matrix K and the soft potential V may depend on the slow
// positions; K must be symmetric positive definite wherever it is evaluated.

namespace sympint {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Phase-space point, stored split. All four blocks are owned copies; states
// are passed and returned by value throughout the library.
struct PhaseState {
    Vector q_fast;
    Vector p_fast;
    Vector q_slow;
    Vector p_slow;

    Index dim_fast() const { return q_fast.size(); }
    Index dim_slow() const { return q_slow.size(); }

    // Stacked fast half [q_fast; p_fast], the vector the fast-flow matrices
    // act on.
    Vector fast() const;
    void set_fast(const Vector& qp);
};

PhaseState make_state(const Vector& q_fast, const Vector& p_fast,
                      const Vector& q_slow, const Vector& p_slow);

// All-zero state of the given dimensions.
PhaseState zero_state(Index d_f, Index d_s);

// Model description. The callables must accept vectors of the declared
// dimensions; K(q_slow) returns a d_f x d_f matrix and grad_K(q_slow) the
// list of its d_s partial derivative matrices.
struct QuasiQuadraticSystem {
    Index d_f = 0;
    Index d_s = 0;
    double epsilon = 1.0;

    // V(q_fast, q_slow) and its gradient stacked as [dV/dq_fast; dV/dq_slow].
    std::function<double(const Vector&, const Vector&)> V;
    std::function<Vector(const Vector&, const Vector&)> grad_V;

    std::function<Matrix(const Vector&)> K;
    std::function<std::vector<Matrix>(const Vector&)> grad_K;
};

// Stiffness data at a fixed slow position. Both K and the entries of dK are
// symmetrized defensively (0.5*(M + M')) so downstream code may rely on exact
// symmetry. Positive definiteness is *not* checked here; it is verified
// lazily by the diagonalization-based routines that require it.
struct Stiffness {
    Matrix K;
    std::vector<Matrix> dK;
};

Stiffness stiffness_at(const QuasiQuadraticSystem& sys, const Vector& q_slow);

// Total energy H(q,p). Throws std::invalid_argument on dimension mismatch or
// non-finite data.
double energy(const QuasiQuadraticSystem& sys, const PhaseState& s);

// Canonical symplectic structure matrix J = [[0, I], [-I, 0]] acting on a
// (q, p) pair of d degrees of freedom, i.e. a 2d x 2d matrix.
Matrix symplectic_form(Index d);

// Structure matrix for the full split ordering (q_fast, p_fast, q_slow,
// p_slow): block-diagonal with symplectic_form(d_f) and symplectic_form(d_s).
Matrix split_symplectic_form(Index d_f, Index d_s);

namespace detail {
void require(bool cond, const char* what);
void require_finite(double x, const char* what);
void require_finite(const Vector& v, const char* what);
void require_finite(const Matrix& m, const char* what);
}  // namespace detail

}  // namespace sympint
