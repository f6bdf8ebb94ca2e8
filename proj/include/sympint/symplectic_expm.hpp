#pragma once

#include "sympint/phase_core.hpp"

// Structure-preserving exponentiation of the stiff linear fast flow.
//
// For a fixed slow position the fast subsystem is linear with generator
//
//   N = [[0, I], [-eps^{-1} K, 0]]          (2 d_f x 2 d_f)
//
// and the slow-momentum coupling is driven by the matrices
//
//   M_i = [[eps^{-1} dK_i, 0], [0, 0]],   i = 1..d_s.
//
// The flow over a macro step H needs the triple
//
//   F2(H) = exp(-N' H),   F3(H) = exp(N H),
//   G2_i(H)  with  F3(H)' G2_i(H) = integral_0^H exp(N' s) M_i exp(N s) ds,
//
// the (1,1), (1,2) and (2,2) blocks of exp([[-N', M_i], [0, N]] H).
//
// Instead of a generic matrix exponential, the triple is built from one
// leapfrog micro-step at h = H/2^n and squared n times. Each factor of the
// seed is exactly symplectic, and the squaring recursion
//
//   F2 <- F2 F2,   G2_i <- F2 G2_i + G2_i F3,   F3 <- F3 F3
//
// preserves that structure bit-for-bit in exact arithmetic, so the result is
// symplectic by construction (up to roundoff) while costing exactly
// 2 (d_s + 1) n matrix products.

namespace sympint {

// Generator blocks for the fast flow at one slow position.
struct BlockGenerator {
    Matrix N;                // 2 d_f x 2 d_f
    std::vector<Matrix> M;   // d_s entries, each 2 d_f x 2 d_f
};

BlockGenerator build_generator(const Matrix& K, const std::vector<Matrix>& dK,
                               double epsilon);

// One leapfrog micro-step of the stacked system at step h:
//   A approximates exp(-N' h), C approximates exp(N h), B_i approximates the
//   G2_i block at step h. All three are exactly symplectic for any h, and
//   A' C = I holds exactly.
struct VerletSeed {
    Matrix A;
    std::vector<Matrix> B;
    Matrix C;
    double h = 0.0;
};

VerletSeed verlet_seed(const Matrix& K, const std::vector<Matrix>& dK,
                       double epsilon, double h);

// Exponential triple with its accumulated matrix-product count. mult_count
// tallies every 2 d_f x 2 d_f product spent building the triple.
struct ExpTriple {
    Matrix F2;
    std::vector<Matrix> G2;
    Matrix F3;
    double H = 0.0;
    long mult_count = 0;
};

// Doubles the step of a triple: (F2, G2_i, F3) at step t becomes the triple
// at step 2t. Spends exactly 2 + 2 * G2.size() matrix products.
ExpTriple square_triple(ExpTriple t);

// Full macro-step exponentiation: leapfrog seed at h = H / 2^n followed by n
// squarings. mult_count of the result equals 2 * (dK.size() + 1) * n.
// Requires H >= 0 and 1 <= n <= max(12, ceil(log2(1/epsilon)) + 4); larger n
// buys nothing but roundoff and is rejected.
ExpTriple symplectic_expm(const Matrix& K, const std::vector<Matrix>& dK,
                          double epsilon, double H, int n);

// Largest admissible n for the given epsilon (the guard used above).
int max_squarings(double epsilon);

}  // namespace sympint
