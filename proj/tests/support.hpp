#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "sympint/phase_core.hpp"

// Shared helpers for the test binaries. Deliberately independent of the
// library's own random/quadrature utilities so cross-checks do not share code
// paths with the code under test.

namespace testsupport {

using sympint::Index;
using sympint::Matrix;
using sympint::PhaseState;
using sympint::QuasiQuadraticSystem;
using sympint::Vector;

// Deterministic standard normals from the raw mt19937 stream (the engine is
// specified bit-for-bit by the standard; distributions are not).
class Rng {
  public:
    explicit Rng(unsigned seed) : eng_(seed) {}

    double uniform() {  // (0, 1)
        return (static_cast<double>(eng_()) + 1.0) / 4294967297.0;
    }

    double gauss() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u = uniform();
        const double v = uniform();
        const double r = std::sqrt(-2.0 * std::log(u));
        spare_ = r * std::sin(6.283185307179586476925286766559 * v);
        have_spare_ = true;
        return r * std::cos(6.283185307179586476925286766559 * v);
    }

    Matrix gauss_matrix(Index rows, Index cols) {
        Matrix m(rows, cols);
        for (Index i = 0; i < rows; ++i)
            for (Index j = 0; j < cols; ++j) m(i, j) = gauss();
        return m;
    }

    Vector gauss_vector(Index size) {
        Vector v(size);
        for (Index i = 0; i < size; ++i) v[i] = gauss();
        return v;
    }

  private:
    std::mt19937 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Random symmetric positive definite matrix with eigenvalues in
// [lambda_min, lambda_max].
inline Matrix random_spd(Rng& rng, Index d, double lambda_min = 0.5,
                         double lambda_max = 4.0) {
    const Matrix G = rng.gauss_matrix(d, d);
    const Eigen::HouseholderQR<Matrix> qr(G);
    Matrix Q = qr.householderQ();
    Vector lambda(d);
    for (Index i = 0; i < d; ++i)
        lambda[i] = lambda_min + (lambda_max - lambda_min) * rng.uniform();
    Matrix K = Q * lambda.asDiagonal() * Q.transpose();
    return 0.5 * (K + K.transpose());
}

inline Matrix random_symmetric(Rng& rng, Index d, double scale = 1.0) {
    Matrix S = rng.gauss_matrix(d, d);
    S = 0.5 * (S + S.transpose()).eval();
    return scale * S;
}

// 2x2 rotation [[cos t, sin t], [-sin t, cos t]].
inline Matrix rotation2(double t) {
    Matrix r(2, 2);
    r << std::cos(t), std::sin(t), -std::sin(t), std::cos(t);
    return r;
}

// Composite Simpson quadrature of a matrix-valued integrand over [0, t].
inline Matrix simpson(const std::function<Matrix(double)>& f, double t,
                      int panels) {
    const double h = t / (2.0 * panels);
    Matrix acc = f(0.0) + f(t);
    for (int k = 1; k < 2 * panels; ++k)
        acc += f(k * h) * (k % 2 == 1 ? 4.0 : 2.0);
    return (h / 3.0) * acc;
}

inline double simpson_scalar(const std::function<double(double)>& f, double t,
                             int panels) {
    const double h = t / (2.0 * panels);
    double acc = f(0.0) + f(t);
    for (int k = 1; k < 2 * panels; ++k)
        acc += f(k * h) * (k % 2 == 1 ? 4.0 : 2.0);
    return (h / 3.0) * acc;
}

// Hand-built copy of the one-fast/one-slow benchmark (double-well soft
// potential, stiffness 1 + x^2), kept independent of the scenario factory so
// the two constructions can be compared.
inline QuasiQuadraticSystem hand_system_1d(double omega) {
    QuasiQuadraticSystem sys;
    sys.d_f = 1;
    sys.d_s = 1;
    sys.epsilon = 1.0 / (omega * omega);
    sys.V = [](const Vector& qf, const Vector& qs) {
        const double s = qf.squaredNorm() + qs.squaredNorm() - 1.0;
        return s * s;
    };
    sys.grad_V = [](const Vector& qf, const Vector& qs) {
        const double s = qf.squaredNorm() + qs.squaredNorm() - 1.0;
        Vector g(qf.size() + qs.size());
        g << 4.0 * s * qf, 4.0 * s * qs;
        return g;
    };
    sys.K = [](const Vector& qs) {
        Matrix k(1, 1);
        k(0, 0) = 1.0 + qs[0] * qs[0];
        return k;
    };
    sys.grad_K = [](const Vector& qs) {
        Matrix dk(1, 1);
        dk(0, 0) = 2.0 * qs[0];
        return std::vector<Matrix>{dk};
    };
    return sys;
}

inline PhaseState state1d(double q_fast, double p_fast, double q_slow,
                          double p_slow) {
    Vector qf(1), pf(1), qs(1), ps(1);
    qf << q_fast;
    pf << p_fast;
    qs << q_slow;
    ps << p_slow;
    return sympint::make_state(qf, pf, qs, ps);
}

}  // namespace testsupport
