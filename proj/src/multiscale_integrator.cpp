#include "sympint/multiscale_integrator.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "sympint/reference_oracles.hpp"

namespace sympint {

namespace {

void check_dims(const QuasiQuadraticSystem& system, const PhaseState& state) {
    detail::require(state.q_fast.size() == system.d_f &&
                        state.p_fast.size() == system.d_f &&
                        state.q_slow.size() == system.d_s &&
                        state.p_slow.size() == system.d_s,
                    "state dimensions do not match the system");
}

}  // namespace

PhaseState phi12_step(const QuasiQuadraticSystem& system, PhaseState state,
                      double H) {
    check_dims(system, state);
    detail::require_finite(H, "step size");

    state.q_slow += H * state.p_slow;
    const Vector g = system.grad_V(state.q_fast, state.q_slow);
    detail::require(g.size() == system.d_f + system.d_s,
                    "grad_V returned a vector of the wrong length");
    if (!g.allFinite())
        throw std::runtime_error("soft-force gradient is not finite");
    state.p_fast -= H * g.head(system.d_f);
    state.p_slow -= H * g.tail(system.d_s);
    return state;
}

PhaseState phi3_step(PhaseState state, const ExpTriple& triple) {
    const Index d_f = state.q_fast.size();
    const Index d_s = state.q_slow.size();
    detail::require(triple.F3.rows() == 2 * d_f && triple.F3.cols() == 2 * d_f,
                    "fast-flow block does not match the fast dimension");
    detail::require(static_cast<Index>(triple.G2.size()) == d_s,
                    "coupling block count does not match the slow dimension");

    const Vector z = state.fast();
    for (Index i = 0; i < d_s; ++i) {
        detail::require(triple.G2[i].rows() == 2 * d_f &&
                            triple.G2[i].cols() == 2 * d_f,
                        "coupling block does not match the fast dimension");
        state.p_slow[i] -= 0.5 * z.dot(triple.F3.transpose() * (triple.G2[i] * z));
    }
    state.set_fast(triple.F3 * z);
    return state;
}

PhaseState variational_euler_step(const QuasiQuadraticSystem& system,
                                  PhaseState state, double h) {
    check_dims(system, state);
    detail::require_finite(h, "step size");

    const Vector g = system.grad_V(state.q_fast, state.q_slow);
    detail::require(g.size() == system.d_f + system.d_s,
                    "grad_V returned a vector of the wrong length");
    Stiffness st;
    try {
        st = stiffness_at(system, state.q_slow);
    } catch (const std::invalid_argument&) {
        // A diverging trajectory can overflow inside the stiffness callback
        // before the post-step finiteness check sees it.
        const auto huge = [](const Vector& v) {
            if (v.size() == 0) return false;
            return !v.allFinite() || v.cwiseAbs().maxCoeff() > 1e50;
        };
        if (!g.allFinite() || huge(state.q_slow) || huge(state.q_fast))
            throw std::runtime_error("step diverged (non-finite state)");
        throw;
    }

    state.p_fast -= h * (g.head(system.d_f) +
                         (1.0 / system.epsilon) * (st.K * state.q_fast));
    for (Index i = 0; i < system.d_s; ++i) {
        const double stiff_grad =
            0.5 / system.epsilon * state.q_fast.dot(st.dK[i] * state.q_fast);
        state.p_slow[i] -= h * (g[system.d_f + i] + stiff_grad);
    }
    state.q_fast += h * state.p_fast;
    state.q_slow += h * state.p_slow;

    if (!state.q_fast.allFinite() || !state.p_fast.allFinite() ||
        !state.q_slow.allFinite() || !state.p_slow.allFinite())
        throw std::runtime_error("step diverged (non-finite state)");
    return state;
}

Stepper::Stepper(QuasiQuadraticSystem system, StepperConfig config)
    : system_(std::move(system)), config_(std::move(config)) {
    detail::require(config_.H > 0.0 && std::isfinite(config_.H),
                    "coarse step must be positive");
    detail::require(config_.T >= config_.H && std::isfinite(config_.T),
                    "total time must be at least one step");
    detail::require(config_.n >= 1 && config_.n <= max_squarings(system_.epsilon),
                    "squaring count out of range");
    detail::require(config_.fine_phi3_h >= 0.0, "micro step must be nonnegative");
}

ExpTriple Stepper::exponentials_at(const Vector& q_slow) {
    const Stiffness st = stiffness_at(system_, q_slow);
    switch (config_.backend) {
        case ExpBackend::SymplecticExpm:
            return symplectic_expm(st.K, st.dK, system_.epsilon, config_.H,
                                   config_.n);
        case ExpBackend::Iterative: {
            if (!iter_state_)
                iter_state_ = iter_init(st.K, st.dK, system_.epsilon, config_.H,
                                        config_.n);
            auto [next, triple] = iter_update(std::move(*iter_state_), st.K,
                                              st.dK, config_.n);
            iter_state_ = std::move(next);
            return triple;
        }
        case ExpBackend::DiagOracle: {
            VerletSeed seed = diagonalization_seed(st.K, st.dK, system_.epsilon,
                                                   config_.H);
            ExpTriple triple;
            triple.F2 = std::move(seed.A);
            triple.G2 = std::move(seed.B);
            triple.F3 = std::move(seed.C);
            triple.H = config_.H;
            triple.mult_count = 0;
            return triple;
        }
        case ExpBackend::TaylorSquaring: {
            // First-order Taylor base step I + h X in place of the Verlet
            // blocks; squared with the same recursion. Kept as the cautionary
            // comparison: accuracy is first order but symplecticity is lost.
            const double h = config_.H * std::ldexp(1.0, -config_.n);
            const Index d = system_.d_f;
            const Matrix W = (1.0 / system_.epsilon) * st.K;
            ExpTriple triple;
            triple.F2 = Matrix::Identity(2 * d, 2 * d);
            triple.F2.topRightCorner(d, d) = h * W;
            triple.F2.bottomLeftCorner(d, d) = -h * Matrix::Identity(d, d);
            triple.F3 = Matrix::Identity(2 * d, 2 * d);
            triple.F3.topRightCorner(d, d) = h * Matrix::Identity(d, d);
            triple.F3.bottomLeftCorner(d, d) = -h * W;
            triple.G2.reserve(st.dK.size());
            for (const Matrix& dK : st.dK) {
                Matrix B = Matrix::Zero(2 * d, 2 * d);
                B.topLeftCorner(d, d) = (h / system_.epsilon) * dK;
                triple.G2.push_back(std::move(B));
            }
            triple.H = h;
            triple.mult_count = 0;
            for (int k = 0; k < config_.n; ++k)
                triple = square_triple(std::move(triple));
            return triple;
        }
        case ExpBackend::FineVerletPhi3:
            break;
    }
    throw std::logic_error("backend does not produce exponential blocks");
}

PhaseState Stepper::step(const PhaseState& state) {
    PhaseState mid = phi12_step(system_, state, config_.H);

    if (config_.backend == ExpBackend::FineVerletPhi3) {
        const double h = config_.fine_phi3_h > 0.0
                             ? config_.fine_phi3_h
                             : config_.H * std::ldexp(1.0, -config_.n);
        last_mult_count_ = 0;
        return fine_verlet_flow(system_, mid, h, config_.H,
                                VerletMode::FrozenSlow);
    }

    ExpTriple triple = exponentials_at(mid.q_slow);
    last_mult_count_ = triple.mult_count;
    return phi3_step(std::move(mid), triple);
}

Trajectory Stepper::simulate(const PhaseState& initial) {
    iter_state_.reset();  // each trajectory carries its own seed history

    const auto steps =
        static_cast<long long>(std::ceil(config_.T / config_.H - 1e-12));
    const double nan = std::numeric_limits<double>::quiet_NaN();

    Trajectory traj;
    traj.times.reserve(steps + 1);
    traj.states.reserve(steps + 1);
    traj.energies.reserve(steps + 1);
    traj.observables.reserve(steps + 1);
    traj.mult_counts.reserve(steps + 1);
    traj.wall_times.reserve(steps + 1);

    // Evaluate the throwing parts (energy, user observable) before any
    // push_back so a failed row never leaves the columns ragged.
    auto record = [&](double t, const PhaseState& s, long long mults,
                      double seconds) {
        const double e = energy(system_, s);
        const double obs = config_.observable ? config_.observable(s) : nan;
        traj.times.push_back(t);
        traj.states.push_back(s);
        traj.energies.push_back(e);
        traj.observables.push_back(obs);
        traj.mult_counts.push_back(mults);
        traj.wall_times.push_back(seconds);
    };

    PhaseState current = initial;
    try {
        record(0.0, current, 0, 0.0);
        for (long long k = 1; k <= steps; ++k) {
            const auto tic = std::chrono::steady_clock::now();
            current = step(current);
            const std::chrono::duration<double> elapsed =
                std::chrono::steady_clock::now() - tic;
            record(static_cast<double>(k) * config_.H, current,
                   last_mult_count_, elapsed.count());
        }
    } catch (const std::exception& ex) {
        traj.error = ex.what();
    }
    return traj;
}

}  // namespace sympint
