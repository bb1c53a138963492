#pragma once

#include <optional>

#include "hybridswap/fock.hpp"

namespace hybridswap {

// Conventions used throughout the library:
//   quadratures     x = (a + a^dagger)/sqrt(2), vacuum variance 1/2;
//   beam splitter   a^dagger -> sqrt(t) a^dagger + sqrt(1-t) e^{i phi} b^dagger,
//                   b^dagger -> -sqrt(1-t) e^{-i phi} a^dagger + sqrt(t) b^dagger
//                   (t is the intensity transmissivity, phi sits on the reflected arm);
//   displacement    D(alpha) a D(alpha)^dagger = a - alpha.

/// Composition of an imperfect split-photon source.
struct Impurity {
  double weight_ideal = 1.0;
  double weight_vacuum = 0.0;
  double weight_multiphoton = 0.0;
  /// Two-mode state carrying the multiphoton weight; |1,1><1,1| when empty.
  std::optional<FockDensityMatrix> multiphoton_state;
};

struct SplitPhotonSpec {
  double R = 0.5;  // beam-splitter reflectivity
  std::optional<Impurity> impurity;
  int cutoff = 1;
};

struct TmsvSpec {
  double r = 0.0;  // squeezing parameter
  int cutoff = 5;
};

/// sqrt(1-R)|1,0> + sqrt(R)|0,1>.
FockKet split_photon_ket(double R, int cutoff = 1);

/// Pure split photon, or the impurity mixture
/// w_ideal |psi><psi| + w_vac |0,0><0,0| + w_multi rho_multi.
FockDensityMatrix split_photon(const SplitPhotonSpec& spec);

/// sum_n lambda^n |n,n>, lambda = tanh r, renormalized over the truncated space.
FockKet tmsv(const TmsvSpec& spec);

/// Weight sum_{n > cutoff} (1 - lambda^2) lambda^{2n} lost by truncating the TMSV.
double tmsv_truncated_tail(double r, int cutoff);

/// Two-mode beam-splitter matrix on the (cutoff_i+1)(cutoff_j+1) product space.
/// Exact on every component whose total photon number fits into both modes;
/// amplitudes that would exceed a cutoff are dropped.
CMatrix beam_splitter_matrix(int cutoff_i, int cutoff_j, double t, double phi = 0.0);

FockKet beam_splitter(const FockKet& state, int i, int j, double t, double phi = 0.0);
FockDensityMatrix beam_splitter(const FockDensityMatrix& state, int i, int j, double t, double phi = 0.0);

/// Exact matrix elements <m|D(alpha)|n> for m, n <= cutoff.
CMatrix displacement_matrix(int cutoff, cplx alpha);

/// Displacement of one mode. The weight pushed beyond the cutoff is computed
/// exactly; the call throws std::invalid_argument when it exceeds
/// tol::kDisplacementLeak.
FockKet displacement(const FockKet& state, int mode, cplx alpha);
FockDensityMatrix displacement(const FockDensityMatrix& state, int mode, cplx alpha);

/// Amplitudes <n+k, k| S |n, 0>, k = 0..max_k, of a two-mode squeezer with
/// intensity gain G = cosh^2 s acting on |n> and a vacuum ancilla.
Eigen::VectorXd two_mode_squeeze_vacuum_ancilla(int n, double G, int max_k);

/// Applies a local operator acting on `modes` (listed in order, slowest first)
/// from the left: returns (1 (x) op (x) 1) * m, where m has rows in `basis`.
CMatrix apply_local_left(const CMatrix& m, const FockBasis& basis, std::span<const int> modes, const CMatrix& op);

}  // namespace hybridswap
