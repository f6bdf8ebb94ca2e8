#pragma once

#include <string>

#include "sympint/phase_core.hpp"

// Benchmark systems. All share the soft double-well potential
// V = (|q|^2 - 1)^2 over the full position vector and differ in the stiffness
// map and dimensions:
//   diag1d    - one fast, one slow coordinate, K(x) = 1 + x^2
//   nondiag3d - two fast, one slow, a non-commuting 2x2 stiffness family
//   toeplitz  - d_f fast coordinates, one slow, Toeplitz stiffness with
//               entries (q/2)^|j-k| and a seeded random initial fast position
// The stiff frequency scale is omega = 1/sqrt(epsilon).

namespace sympint {

struct ScenarioRealization {
    std::string name;
    double omega = 0.0;
    QuasiQuadraticSystem system;
    PhaseState initial;
};

struct ScenarioParams {
    std::string name = "diag1d";
    double omega = 100.0;
    Index d_f = 100;    // toeplitz only
    unsigned seed = 0;  // toeplitz only: initial fast positions
};

ScenarioRealization make_diag1d(double omega);
ScenarioRealization make_nondiag3d(double omega);
ScenarioRealization make_toeplitz(double omega, Index d_f, unsigned seed);

// Dispatch by params.name; unknown names throw std::invalid_argument.
ScenarioRealization make_scenario(const ScenarioParams& params);

// Deterministic standard normals (Box-Muller over the mt19937 bit stream;
// avoids std::normal_distribution, whose output is implementation-defined).
Vector seeded_gaussian_vector(Index size, unsigned seed, double stddev);

}  // namespace sympint
