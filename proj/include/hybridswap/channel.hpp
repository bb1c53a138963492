#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "hybridswap/fock.hpp"

namespace hybridswap {

/// CV teleportation channel acting on one mode. Loss knobs are intensity
/// transmissivities in (0, 1]; 1 switches them off.
struct ChannelSpec {
  double r = 0.0;              // resource squeezing
  double g = 0.0;              // feedforward gain
  double pre_loss = 1.0;       // before the teleporter (propagation of the input)
  double post_loss = 1.0;      // after the teleporter (propagation / detection of the output)
  double resource_loss = 1.0;  // on both resource modes before the Bell measurement

  /// Gain tuned to tanh r.
  static ChannelSpec optimal(double r) { return ChannelSpec{r, std::tanh(r)}; }
  void validate() const;
};

struct Dilation {
  double eta = 1.0;  // loss transmissivity
  double G = 1.0;    // quantum-limited amplifier gain
};

/// Phase-insensitive Gaussian channel x -> amplitude_gain * x + noise, with
/// the noise variance in vacuum-1/2 units and realized as loss followed by a
/// quantum-limited amplifier.
struct GaussianChannelParams {
  double amplitude_gain = 1.0;
  double added_noise = 0.0;
  Dilation dilation;
};

/// Excess quadrature variance of gain-g teleportation with an EPR resource of
/// squeezing r, [(1+g)^2 e^{-2r} + (1-g)^2 e^{2r}]/4, optionally degraded by
/// loss on both resource modes.
double teleportation_noise(double r, double g, double resource_loss = 1.0);

GaussianChannelParams channel_params(const ChannelSpec& spec);

/// Kraus representation of a single-mode channel from a space with
/// `in_cutoff` to one with `out_cutoff`, together with its superoperator.
struct SingleModeChannel {
  int in_cutoff = 0;
  int out_cutoff = 0;
  std::vector<CMatrix> kraus;  // each (out_cutoff+1) x (in_cutoff+1)
  CMatrix transfer;            // acts on row-major vec(rho): (m, m') <- (n, n')

  static SingleModeChannel from_kraus(int in_cutoff, int out_cutoff, std::vector<CMatrix> kraus);

  /// max |sum_k K^dagger K - 1| over the input space.
  double completeness_error() const;
};

/// Pure loss, dilated as a beam splitter with a vacuum ancilla.
SingleModeChannel loss_channel(double eta, int cutoff);

/// Quantum-limited amplifier, dilated as a two-mode squeezer with a vacuum ancilla.
SingleModeChannel amplifier_channel(double G, int in_cutoff, int out_cutoff);

/// Output cutoff used for an amplifier of gain G on inputs up to `in_cutoff`:
/// at least in_cutoff + ceil(4 (G-1)(in_cutoff+1)), grown until the dropped
/// weight of every input number state is below tol::kDilationTail. Throws
/// std::invalid_argument when that needs more than kMaxDilatedCutoff.
int amplifier_output_cutoff(double G, int in_cutoff);
inline constexpr int kMaxDilatedCutoff = 400;

/// `second` after `first`.
SingleModeChannel compose(const SingleModeChannel& second, const SingleModeChannel& first);

SingleModeChannel gaussian_channel(const GaussianChannelParams& params, int in_cutoff);

/// Applies a single-mode channel to `mode`; the mode's cutoff becomes the
/// channel's output cutoff.
FockDensityMatrix apply_single_mode(const FockDensityMatrix& rho, int mode, const SingleModeChannel& channel);

FockDensityMatrix apply_loss(const FockDensityMatrix& rho, int mode, double eta);

/// The teleportation channel on `mode` of a normalized state.
FockDensityMatrix apply_channel(const FockDensityMatrix& rho, int mode, const ChannelSpec& spec);

// ---------------------------------------------------------------------------
// Monte-Carlo oracle: explicit Bell measurement and feedforward.

struct McOptions {
  std::size_t n_trials = 20000;
  std::uint64_t seed = 1;
  int cutoff = 12;                 // input mode and resource modes
  int displacement_headroom = 45;  // extra photons kept on the output mode for displacements
  int grid_points = 1201;          // quadrature grid used for inverse-CDF sampling
  unsigned workers = 0;            // 0 = hardware concurrency; result does not depend on it
};

/// Averages the conditional output states of the measure-and-displace
/// protocol over sampled Bell-measurement outcomes. Trial k draws from an RNG
/// stream derived from (seed, k); partial sums are merged in a fixed block
/// order, so the output is bit-identical for any worker count. The output
/// mode sits at `mode` with cutoff options.cutoff + options.displacement_headroom.
FockDensityMatrix mc_teleport_oracle(const FockDensityMatrix& rho, int mode, const ChannelSpec& spec,
                                     const McOptions& options);

/// Normalized conditional output for the Bell-measurement outcome (x_u, p_v).
FockDensityMatrix mc_teleport_conditional(const FockDensityMatrix& rho, int mode, const ChannelSpec& spec, double x_u,
                                          double p_v, const McOptions& options);

}  // namespace hybridswap
