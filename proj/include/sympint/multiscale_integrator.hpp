#pragma once

#include <chrono>
#include <optional>
#include <string>

#include "sympint/iterative_expm.hpp"
#include "sympint/phase_core.hpp"
#include "sympint/symplectic_expm.hpp"

// The coarse-step integrator. One macro step of size H is the composition of
//   - a slow drift plus soft-force kick (phi12): the slow positions drift by
//     H p_slow, then both momenta receive -H grad V evaluated at the drifted
//     slow position and the unchanged fast position;
//   - the stiff flow with the slow position frozen at its drifted value
//     (phi3): the fast pair advances by F3 and each slow momentum absorbs the
//     quadratic reaction -1/2 [q_fast;p_fast]' F3'G2_i [q_fast;p_fast].
// The triple (F2, G2, F3) is produced by a pluggable backend; the symplectic
// scaling-and-squaring backend is the production path, the others exist for
// cross-checks and cost/accuracy comparisons.

namespace sympint {

enum class ExpBackend {
    SymplecticExpm,   // Verlet seed + symplectic squaring
    Iterative,        // carried seed corrected by stiffness differences
    DiagOracle,       // exact frozen flow via eigendecomposition (reference)
    TaylorSquaring,   // first-order Taylor seed + squaring (non-symplectic)
    FineVerletPhi3,   // phi3 replaced by fine Verlet on the frozen system
};

struct StepperConfig {
    double H = 0.0;  // coarse step
    double T = 0.0;  // total simulated time
    int n = 10;      // squaring depth for the squaring backends
    ExpBackend backend = ExpBackend::SymplecticExpm;
    // Optional per-step observable recorded alongside energy (e.g. an
    // adiabatic invariant); NaN is recorded when absent.
    std::function<double(const PhaseState&)> observable;
    // Micro step for FineVerletPhi3; 0 selects H / 2^n.
    double fine_phi3_h = 0.0;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<PhaseState> states;
    std::vector<double> energies;
    std::vector<double> observables;
    std::vector<long long> mult_counts;  // per-step d_f x d_f products
    std::vector<double> wall_times;      // per-step seconds
    std::string error;  // empty on success; on failure the prefix is kept

    bool ok() const { return error.empty(); }
    std::size_t size() const { return times.size(); }
};

// Slow drift + soft kick, exactly in this order:
//   q_slow' = q_slow + H p_slow
//   g       = grad V(q_fast, q_slow')
//   p_fast  -= H g_fast,   p_slow -= H g_slow
PhaseState phi12_step(const QuasiQuadraticSystem& system, PhaseState state,
                      double H);

// Frozen-slow stiff flow from precomputed blocks:
//   p_slow_i -= 1/2 z' (F3' G2_i) z     with z = [q_fast; p_fast] incoming
//   z        <- F3 z
// q_slow is untouched.
PhaseState phi3_step(PhaseState state, const ExpTriple& triple);

// First-order symplectic (variational) Euler on the full stiff system:
// momentum kick by -h grad(V + eps^{-1} U) at the current position, then
// position drift by the updated momentum. Baseline integrator; requires h
// within the stiff stability limit, non-finite results throw.
PhaseState variational_euler_step(const QuasiQuadraticSystem& system,
                                  PhaseState state, double h);

class Stepper {
  public:
    Stepper(QuasiQuadraticSystem system, StepperConfig config);

    const StepperConfig& config() const { return config_; }
    const QuasiQuadraticSystem& system() const { return system_; }

    // One macro step; throws on backend or dynamics failure.
    PhaseState step(const PhaseState& state);

    // d_f x d_f products consumed by the most recent step().
    long long last_mult_count() const { return last_mult_count_; }

    // ceil(T / H) macro steps with per-step diagnostics; a failing step
    // truncates the trajectory and records the reason instead of throwing.
    Trajectory simulate(const PhaseState& initial);

    // Exposed for cross-checks: the backend-built triple at a slow position.
    ExpTriple exponentials_at(const Vector& q_slow);

  private:
    QuasiQuadraticSystem system_;
    StepperConfig config_;
    std::optional<IterState> iter_state_;
    long long last_mult_count_ = 0;
};

}  // namespace sympint
