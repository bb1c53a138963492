#pragma once

// Numerical tolerances shared by the library, the CLI invariant checks and the tests.

namespace hybridswap::tol {

inline constexpr double kHermitian = 1e-10;    // max |M - M^dagger| elementwise
inline constexpr double kTrace = 1e-9;         // |tr(rho) - nominal|
inline constexpr double kPositivity = 1e-9;    // smallest admissible eigenvalue is -kPositivity
inline constexpr double kKetNorm = 1e-10;
inline constexpr double kEigenResidual = 1e-8; // ||M v - lambda v||
inline constexpr double kPpt = 1e-7;           // PT eigenvalues below -kPpt witness entanglement
inline constexpr double kDisplacementLeak = 1e-6;
inline constexpr double kDilationTail = 1e-10; // photon weight dropped by amplifier truncation
inline constexpr double kQubitNorm = 1e-10;

}  // namespace hybridswap::tol
