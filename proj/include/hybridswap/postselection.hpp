#pragma once

#include <array>
#include <cstdint>

#include <nlohmann/json.hpp>

#include "hybridswap/fock.hpp"

namespace hybridswap {

/// Elements of a two-mode state on {|00>, |01>, |10>, |11>} (mode A first):
/// the diagonal p_ij and the coherence d = <01|rho|10>. Every formula below
/// depends on d only through |d|^2.
struct QubitBlock {
  double p00 = 0, p01 = 0, p10 = 0, p11 = 0;
  cplx d = 0;

  /// Throws InvariantViolation unless p_ij >= 0, sum <= 1 and |d|^2 <= p01 p10 (slack 1e-9).
  void validate() const;
  /// 2(p00 p11 + p01 p10).
  double success_probability() const { return 2.0 * (p00 * p11 + p01 * p10); }
  double x() const;
  double y() const;
  /// The block as a normalized two-mode state at cutoff 1.
  FockDensityMatrix as_state() const;
};

QubitBlock extract_qubit_block(const FockDensityMatrix& rho);

/// Post-selected two-copy state over {A1D1, A1D2, A2D1, A2D2}, stored as two
/// modes at cutoff 1 (occupation 0 = rail 1, 1 = rail 2).
struct PurifiedState {
  FockDensityMatrix rho_ps;
  double P = 0;
};

/// Throws std::invalid_argument when P = 0.
PurifiedState purify(const QubitBlock& block);

/// Unnormalized 4x4 matrix obtained by projecting two explicit copies
/// rho (x) rho (modes A1, D1, A2, D2, cutoff 1) onto one photon per site.
CMatrix purify_by_projection(const FockDensityMatrix& rho);

/// Rotation by delta on the A rails and phi on the D rails.
CMatrix rail_rotation(double delta, double phi);

/// Closed-form coincidence correlation.
double chsh_correlation(const QubitBlock& block, double theta_a, double theta_d);

/// P11 - P12 - P21 + P22 of the rotated post-selected state.
double chsh_correlation_explicit(const QubitBlock& block, double theta_a, double theta_d);
double chsh_correlation_explicit(const FockDensityMatrix& rho_ps, double theta_a, double theta_d);

struct ChshAngles {
  double a = 0, a_prime = 0, d = 0, d_prime = 0;
  static ChshAngles canonical();
};

double chsh_s(const QubitBlock& block, const ChshAngles& angles = ChshAngles::canonical());

struct QubitTeleportResult {
  FockDensityMatrix rho_out;  // one mode at cutoff 1: occupation 0 = D1, 1 = D2
  double fidelity = 0;
  double success_prob = 0;    // trace before normalization, P/4
};

/// Post-selected teleportation of alpha|X> + beta|Y>.
QubitTeleportResult teleport_qubit(const QubitBlock& block, cplx alpha, cplx beta);

/// Closed form (|a|^4 + |b|^4) x + 2 |a|^2 |b|^2 (1 - x + y).
double teleport_fidelity_closed_form(const QubitBlock& block, cplx alpha, cplx beta);

struct MonteCarloMean {
  double mean = 0;
  double standard_error = 0;
};

/// Average of teleport_qubit fidelities over inputs uniform on the Bloch sphere.
MonteCarloMean bloch_average_fidelity(const QubitBlock& block, std::size_t samples, std::uint64_t seed);

struct PostSelectSummary {
  double P = 0;
  double x = 0;
  double y = 0;
  double S = 0;
  double E_ps = 0;
  double F_av = 0;
  double tele_success = 0;
  QubitBlock block;
  FockDensityMatrix rho_ps = FockDensityMatrix::uniform(2, 1, CMatrix::Zero(4, 4), false);
};

PostSelectSummary summarize(const FockDensityMatrix& rho_ad);

nlohmann::json to_json(const PostSelectSummary& s);

}  // namespace hybridswap
