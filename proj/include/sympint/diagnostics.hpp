#pragma once

#include <functional>
#include <string>

#include "sympint/multiscale_integrator.hpp"
#include "sympint/phase_core.hpp"

// Measurement layer: symplecticity residuals, finite-difference Jacobians,
// invariants, convergence and resonance studies, and the aggregated
// verification table the CLI exposes.

namespace sympint {

// ||A' J A - J||_inf for a given bilinear form J.
double symplectic_residual(const Matrix& A, const Matrix& J);

// Same with the canonical form of matching (even) size.
double symplectic_residual(const Matrix& A);

// Central-difference Jacobian of a phase-space map. Coordinates are flattened
// in the order (q_fast, p_fast, q_slow, p_slow); column j is the derivative
// along coordinate j. Map failures propagate.
Matrix jacobian_fd(const std::function<PhaseState(const PhaseState&)>& map,
                   const PhaseState& at, double delta = 1e-6);

// Flattening used by jacobian_fd, exposed for tests.
Vector flatten_state(const PhaseState& s);
PhaseState unflatten_state(const Vector& v, Index d_f, Index d_s);

// Action-like invariant of the one-fast/one-slow benchmark:
//   I = p_fast^2 / (2 sqrt(1+x^2)) + sqrt(1+x^2) omega^2 q_fast^2 / 2
// with x the slow position. Requires d_f = d_s = 1.
double adiabatic_invariant_ex1(const PhaseState& state, double omega);

// sqrt(q'q + eps p'p): the norm in which convergence is uniform in the
// stiffness scale.
double energy_norm(const Vector& q, const Vector& p, double epsilon);

// A stiffness family that is affine in the slow position:
//   K(s) = K0 + sum_i s_i dirs[i]
// used to drive randomized identity checks; dK is constant.
struct StiffnessFamily {
    Matrix K0;
    std::vector<Matrix> dirs;

    Matrix K(const Vector& s) const;
    const std::vector<Matrix>& dK() const { return dirs; }
};

// Random family with K0 = Q diag(lambda) Q' for a Haar-ish orthogonal Q and
// eigenvalues in [lambda_min, lambda_max]; direction norms are scaled so K
// stays positive definite for |s|_inf <= 1. Deterministic in the seed.
StiffnessFamily random_stiffness_family(Index d_f, Index d_s, unsigned seed,
                                        double lambda_min = 0.25,
                                        double lambda_max = 4.0);

// A scenario family maps the stiffness scale to a concrete system plus
// initial state (initial data may depend on the scale, e.g. fast amplitudes
// shrinking like sqrt(eps)); convergence studies sweep it over epsilons.
struct ScenarioRealizationRef {
    QuasiQuadraticSystem system;
    PhaseState initial;
};
using ScenarioFamily = std::function<ScenarioRealizationRef(double epsilon)>;

struct ConvergenceSeries {
    double epsilon = 0.0;
    std::vector<double> errors;  // per H: max_k |q(t_k) - q_ref(t_k)|_2
    double constant = 0.0;       // geometric mean of error / H
};

struct ConvergenceReport {
    std::vector<double> H_values;
    std::vector<ConvergenceSeries> series;
    double slope = 0.0;          // log-log least squares fit, all series pooled
    bool slope_defined = false;  // false when some error vanishes
};

struct ConvergenceOptions {
    int n = 10;
    ExpBackend backend = ExpBackend::SymplecticExpm;
    // Reference micro step = stability limit / reference_safety; the margin
    // keeps the reference's fast-phase error well under the method error at
    // the smallest H studied.
    double reference_safety = 8.0;
};

// Position error against a fine-leapfrog reference, per (eps, H): the max
// over the coarse time grid of the Euclidean distance between all positions
// (fast and slow). One reference trajectory per epsilon, sampled on the union
// of the coarse grids. Every H must divide T (within roundoff).
ConvergenceReport convergence_study(const ScenarioFamily& family,
                                    const std::vector<double>& H_list,
                                    const std::vector<double>& epsilons,
                                    double T,
                                    const ConvergenceOptions& options = {});

struct ResonanceReport {
    std::vector<double> H_grid;
    // First-slow-coordinate ratio method(T)/benchmark(T) per H. A diverged or
    // failed run is recorded as +infinity (an out-of-band marker), never an
    // abort.
    std::vector<double> ratios;
};

struct ResonanceOptions {
    int n = 10;
    ExpBackend backend = ExpBackend::SymplecticExpm;
};

ResonanceReport resonance_scan(const QuasiQuadraticSystem& system,
                               const PhaseState& initial,
                               const std::vector<double>& H_grid, double T,
                               double bench_h,
                               const ResonanceOptions& options = {});

// One row of the verification table. pass is residual <= threshold, or
// residual >= threshold when at_least is set (used for ratio-style checks).
struct VerificationCheck {
    std::string name;
    double residual = 0.0;
    double threshold = 0.0;
    bool at_least = false;
    bool pass = false;
};

struct VerificationReport {
    std::vector<VerificationCheck> checks;
    bool all_pass() const;
};

// Randomized structural-identity suite over `trials` stiffness draws plus the
// benchmark-system map checks. Deterministic in the seed.
VerificationReport run_verification(unsigned seed = 12345, int trials = 20);

}  // namespace sympint
