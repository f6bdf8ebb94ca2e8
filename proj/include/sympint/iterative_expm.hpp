#pragma once

#include "sympint/symplectic_expm.hpp"

// Exponentiation for slowly varying stiffness: instead of rebuilding the
// micro-step seed from scratch at every macro step, the previous seed blocks
// are corrected by the (nilpotent, exactly integrable) generator difference
// and then squared as usual. Also contains the block machinery for
// differentiating the coupling blocks G2 with respect to parameters of the
// generator, used to probe higher-order variants.

namespace sympint {

// Seed-level blocks carried between macro steps, together with the stiffness
// they were last synchronized to. h is the micro step H / 2^n.
struct IterState {
    Matrix A;
    std::vector<Matrix> B;
    Matrix C;
    Matrix K_prev;
    std::vector<Matrix> dK_prev;
    double h = 0.0;
    double epsilon = 1.0;
    int n = 0;
};

// Generator-difference blocks between two stiffness evaluations:
//   D   = [[0, eps^{-1} (K_new - K_prev)' h], [0, 0]]
//   E_i = [[eps^{-1} (dK_new_i - dK_prev_i) h, 0], [0, 0]]
// Both are nilpotent and D E_i = E_i D' = 0 exactly, so the seed correction
//   A <- A (I + D),   B_i <- B_i + A E_i - B_i D',   C <- C (I - D')
// multiplies by an *exactly* symplectic factor.
struct IterUpdate {
    Matrix D;
    std::vector<Matrix> E;
};

IterUpdate stiffness_update(const Matrix& K_prev, const Matrix& K_new,
                            const std::vector<Matrix>& dK_prev,
                            const std::vector<Matrix>& dK_new, double epsilon,
                            double h);

// Generic split exponential update: approximates exp(X_new) as
// [X_prev_exp * exp((X_new - X_prev)/2^n)]^(2^n) with n squarings, where the
// caller supplies X_prev_exp ~ exp(X_prev / 2^n). If the difference is
// nilpotent of index 2 (its square vanishes identically) the inner factor
// I + (X_new - X_prev)/2^n is exact; otherwise it is evaluated by the dense
// oracle exponential.
Matrix lie_trotter_exp(const Matrix& X_prev_exp, const Matrix& X_prev,
                       const Matrix& X_new, int n);

// Factory for the initial seed blocks; defaults to verlet_seed.
using SeedBackend = std::function<VerletSeed(
    const Matrix&, const std::vector<Matrix>&, double, double)>;

IterState iter_init(const Matrix& K0, const std::vector<Matrix>& dK0,
                    double epsilon, double H, int n,
                    const SeedBackend& seed_backend = {});

// Advances the carried seed to the new stiffness and returns the squared
// macro-step triple. n must equal the value used at initialization.
std::pair<IterState, ExpTriple> iter_update(IterState state, const Matrix& K_new,
                                            const std::vector<Matrix>& dK_new,
                                            int n);

// Blocks of exp([[-N', M J, 0], [0, -N', M], [0, 0, N]] t): the third-column
// blocks feed the closed-form identity
//   F3(t)' gamma(t) = integral_0^t F3(s)' M J G2(s) ds.
struct TripleBlockResult {
    Matrix alpha;
    Matrix beta;
    Matrix gamma;
    Matrix F2;
    Matrix G2;
    Matrix F3;
};

using DenseExpm = std::function<Matrix(const Matrix&)>;

TripleBlockResult triple_block_exp(const Matrix& N, const Matrix& M, double t,
                                   const DenseExpm& backend = {});

// Derivative of G2(t) with respect to a parameter that moves the generator
// along its structural direction: requires M = M', F2' F3 = I and
// dF3/dtheta = J G2 (which holds when N and M come from a stiffness family
// and theta is the coordinate M belongs to). dM is dM/dtheta. Evaluated as
//   dG2 = F2 [ (F3' gamma)' + F3' gamma + int F3' dM F3 + G2' J G2 ].
Matrix partial_G2(const Matrix& N, const Matrix& M, const Matrix& dM, double t);

}  // namespace sympint
