#include "sympint/scenarios.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace sympint {

namespace {

double check_omega(double omega) {
    detail::require(omega > 0.0 && std::isfinite(omega),
                    "omega must be positive and finite");
    return omega;
}

// V = (|q|^2 - 1)^2 over the concatenated position vector; the gradient with
// respect to any coordinate u is 4 u (|q|^2 - 1).
double double_well(const Vector& q_fast, const Vector& q_slow) {
    const double s = q_fast.squaredNorm() + q_slow.squaredNorm() - 1.0;
    return s * s;
}

Vector double_well_grad(const Vector& q_fast, const Vector& q_slow) {
    const double s = q_fast.squaredNorm() + q_slow.squaredNorm() - 1.0;
    Vector g(q_fast.size() + q_slow.size());
    g.head(q_fast.size()) = 4.0 * s * q_fast;
    g.tail(q_slow.size()) = 4.0 * s * q_slow;
    return g;
}

}  // namespace

Vector seeded_gaussian_vector(Index size, unsigned seed, double stddev) {
    detail::require(size >= 0, "size must be nonnegative");
    detail::require(stddev >= 0.0, "stddev must be nonnegative");
    std::mt19937 rng(seed);
    auto uniform = [&rng]() {
        // (0, 1]: avoids log(0) below.
        return (static_cast<double>(rng()) + 1.0) / 4294967296.0;
    };
    Vector v(size);
    for (Index i = 0; i < size; i += 2) {
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        v[i] = stddev * r * std::cos(2.0 * M_PI * u2);
        if (i + 1 < size) v[i + 1] = stddev * r * std::sin(2.0 * M_PI * u2);
    }
    return v;
}

ScenarioRealization make_diag1d(double omega) {
    check_omega(omega);
    ScenarioRealization sc;
    sc.name = "diag1d";
    sc.omega = omega;
    sc.system.d_f = 1;
    sc.system.d_s = 1;
    sc.system.epsilon = 1.0 / (omega * omega);
    sc.system.V = double_well;
    sc.system.grad_V = double_well_grad;
    sc.system.K = [](const Vector& s) {
        return Matrix::Constant(1, 1, 1.0 + s[0] * s[0]);
    };
    sc.system.grad_K = [](const Vector& s) {
        return std::vector<Matrix>{Matrix::Constant(1, 1, 2.0 * s[0])};
    };
    sc.initial = zero_state(1, 1);
    sc.initial.q_fast[0] = 0.7 / omega;
    sc.initial.q_slow[0] = 1.1;
    return sc;
}

ScenarioRealization make_nondiag3d(double omega) {
    check_omega(omega);
    ScenarioRealization sc;
    sc.name = "nondiag3d";
    sc.omega = omega;
    sc.system.d_f = 2;
    sc.system.d_s = 1;
    sc.system.epsilon = 1.0 / (omega * omega);
    sc.system.V = double_well;
    sc.system.grad_V = double_well_grad;
    sc.system.K = [](const Vector& s) {
        const double x2 = s[0] * s[0];
        Matrix K(2, 2);
        K << 1.0 + x2, x2 - 1.0, x2 - 1.0, 3.0 * x2;
        return K;
    };
    sc.system.grad_K = [](const Vector& s) {
        const double x = s[0];
        Matrix dK(2, 2);
        dK << 2.0 * x, 2.0 * x, 2.0 * x, 6.0 * x;
        return std::vector<Matrix>{dK};
    };
    sc.initial = zero_state(2, 1);
    sc.initial.q_fast[0] = 0.2 / omega;
    sc.initial.q_fast[1] = 0.1 / omega;
    sc.initial.q_slow[0] = 1.1;
    return sc;
}

ScenarioRealization make_toeplitz(double omega, Index d_f, unsigned seed) {
    check_omega(omega);
    detail::require(d_f >= 1, "toeplitz needs at least one fast coordinate");
    ScenarioRealization sc;
    sc.name = "toeplitz";
    sc.omega = omega;
    sc.system.d_f = d_f;
    sc.system.d_s = 1;
    sc.system.epsilon = 1.0 / (omega * omega);
    sc.system.V = double_well;
    sc.system.grad_V = double_well_grad;
    sc.system.K = [d_f](const Vector& s) {
        const double r = 0.5 * s[0];
        Matrix K(d_f, d_f);
        for (Index j = 0; j < d_f; ++j)
            for (Index k = 0; k < d_f; ++k)
                K(j, k) = std::pow(r, static_cast<double>(std::abs(j - k)));
        return K;
    };
    sc.system.grad_K = [d_f](const Vector& s) {
        const double r = 0.5 * s[0];
        Matrix dK(d_f, d_f);
        for (Index j = 0; j < d_f; ++j)
            for (Index k = 0; k < d_f; ++k) {
                const auto m = std::abs(j - k);
                dK(j, k) = m == 0 ? 0.0
                                  : 0.5 * static_cast<double>(m) *
                                        std::pow(r, static_cast<double>(m - 1));
            }
        return std::vector<Matrix>{dK};
    };
    sc.initial = zero_state(d_f, 1);
    // Variance 1/(omega^2 sqrt(d_f)) keeps the total stiff energy near
    // sqrt(d_f)/2 independent of omega, matching the ~1/omega fast amplitudes
    // of the other benchmark scenarios.
    const double variance =
        1.0 / (omega * omega * std::sqrt(static_cast<double>(d_f)));
    sc.initial.q_fast = seeded_gaussian_vector(d_f, seed, std::sqrt(variance));
    sc.initial.q_slow[0] = 1.05;
    return sc;
}

ScenarioRealization make_scenario(const ScenarioParams& params) {
    if (params.name == "diag1d") return make_diag1d(params.omega);
    if (params.name == "nondiag3d") return make_nondiag3d(params.omega);
    if (params.name == "toeplitz")
        return make_toeplitz(params.omega, params.d_f, params.seed);
    throw std::invalid_argument("unknown scenario: " + params.name);
}

}  // namespace sympint
