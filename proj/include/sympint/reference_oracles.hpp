#pragma once

#include "sympint/phase_core.hpp"
#include "sympint/symplectic_expm.hpp"

// Independent reference routes for everything the structure-preserving
// exponentiation computes. These are deliberately built on different
// mathematics (eigen-decomposition, closed-form mode flows, plain Taylor
// scaling-and-squaring, fine-step leapfrog) so the production code and the
// oracles can be cross-checked without shared failure modes.

namespace sympint {

// Eigen-decomposition of eps^{-1} K: K = U diag(lambda) U', columns of U are
// eigenvectors, omega_j = sqrt(lambda_j / eps). Throws std::domain_error if
// any eigenvalue of K is <= 0.
struct DiagonalizedStiffness {
    Matrix U;
    Vector omega;
};

DiagonalizedStiffness diagonalize_stiffness(const Matrix& K, double epsilon);

// exp(N t) for N = [[0, I], [-eps^{-1} K, 0]] assembled mode by mode:
// per mode the 2x2 rotation [[cos(w t), sin(w t)/w], [-w sin(w t), cos(w t)]].
Matrix expm_diagonalization(const Matrix& K, double epsilon, double t);

// Same route for exp(-N' t); per mode [[cos, w sin], [-sin/w, cos]].
Matrix expm_neg_transpose_diagonalization(const Matrix& K, double epsilon,
                                          double t);

// [I + X/2^n]^(2^n) by n squarings: first-order scaling-and-squaring. Cheap
// and consistent, but drifts off the symplectic group at finite n; kept as
// the cautionary comparator.
Matrix expm_taylor_squaring(const Matrix& X, int n);

// Oracle-grade dense exponential: 18-term Taylor on X/2^s with
// ||X/2^s|| <= 2^-5, then s squarings. Truncation is far below double
// roundoff for any norm that fits in a double.
Matrix expm_dense(const Matrix& X);

// Closed-form coupling kernels S_i(t) = integral_0^t exp(N' s) M_i exp(N s) ds
// for M_i = [[eps^{-1} dK_i, 0], [0, 0]], via per-mode-pair trigonometric
// integrals in the eigenframe. Equals F3(t)' G2_i(t) of the exact flow.
std::vector<Matrix> stiffness_quadratic_kernels(const Matrix& K,
                                                const std::vector<Matrix>& dK,
                                                double epsilon, double t);

// Exact flow of the frozen-slow fast subsystem for d_f = 1: rotates
// (q_fast, p_fast) at frequency w = sqrt(K/eps) and applies the closed-form
// slow-momentum drift
//   p_slow_i -= eps^{-1}/2 * dK_i * integral_0^H q_fast(s)^2 ds.
// K is the scalar stiffness, dK its d_s partial derivatives.
PhaseState analytic_flow_1d(const PhaseState& s, double K, const Vector& dK,
                            double epsilon, double H);

// Exact frozen-slow flow for any d_f, assembled per eigenmode: the fast pair
// rotates in the eigenframe and p_slow drifts by the closed-form quadratic
// integrals. This is the reference the macro-step map is measured against.
PhaseState exact_frozen_flow(const PhaseState& s, const Matrix& K,
                             const std::vector<Matrix>& dK, double epsilon,
                             double H);

// Seed blocks from the diagonalization route (exact at step h, unlike the
// leapfrog seed): A = exp(-N' h), C = exp(N h), B_i = A * S_i(h).
VerletSeed diagonalization_seed(const Matrix& K, const std::vector<Matrix>& dK,
                                double epsilon, double h);

// Fine-step position-leapfrog (drift-kick-drift) reference integrator.
//   FullSystem: integrates the complete Hamiltonian.
//   FrozenSlow: integrates the fast subsystem with q_slow pinned, including
//               the accumulated slow-momentum drift.
// The caller must keep h_micro <= 0.2 sqrt(eps) / ||K||^(1/2) (infinity norm
// at the initial slow position); larger steps are rejected. A detected
// blow-up (energy growth beyond 10x) raises std::runtime_error.
enum class VerletMode { FullSystem, FrozenSlow };

PhaseState fine_verlet_flow(const QuasiQuadraticSystem& sys,
                            const PhaseState& s0, double h_micro, double T,
                            VerletMode mode);

// Same integrator, sampled at the given increasing times (first may be 0).
// Each interval is covered by ceil(dt/h_micro) equal steps.
std::vector<PhaseState> fine_verlet_trajectory(const QuasiQuadraticSystem& sys,
                                               const PhaseState& s0,
                                               double h_micro,
                                               const std::vector<double>& times,
                                               VerletMode mode);

// Largest micro step fine_verlet_flow accepts for this system and state
// (0.2 sqrt(eps) / ||K||_inf^(1/2) at the initial slow position; infinite
// when there is no stiff block).
double verlet_stability_step(const QuasiQuadraticSystem& sys,
                             const PhaseState& s0);

namespace oracle_detail {
// integral_0^t cos(a s) cos(b s) ds and friends, stable near coinciding or
// vanishing frequencies.
double int_cos_cos(double a, double b, double t);
double int_cos_sin(double a, double b, double t);   // cos(a s) sin(b s)
double int_sin_sin(double a, double b, double t);
}  // namespace oracle_detail

}  // namespace sympint
