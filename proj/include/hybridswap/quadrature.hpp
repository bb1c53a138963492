#pragma once

#include <span>
#include <vector>

#include "hybridswap/fock.hpp"

namespace hybridswap {

/// Position-space number states psi_n(x) = <x|n>, n = 0..max_n, in the
/// convention x = (a + a^dagger)/sqrt(2) (vacuum variance 1/2).
Eigen::VectorXd hermite_functions(int max_n, double x);

/// Rows are grid points, columns photon numbers.
Eigen::MatrixXd hermite_function_table(int max_n, std::span<const double> xs);

/// <x_theta|n> = e^{-i n theta} psi_n(x) for the rotated quadrature
/// x_theta = (a e^{-i theta} + a^dagger e^{i theta})/sqrt(2).
CVector quadrature_wavefunctions(int max_n, double x, double theta);

/// Half-width covering six standard deviations of every quadrature of a mode
/// with the given mean photon number (<x_theta^2> <= 2<n> + 1/2).
double quadrature_half_width(double mean_photons);

std::vector<double> uniform_grid(double half_width, int points);

/// Inverse-CDF sampler for a density given on a uniform grid and interpolated
/// linearly between grid points.
class GridSampler {
 public:
  GridSampler(double x0, double step, std::vector<double> density);
  GridSampler(std::span<const double> grid, std::vector<double> density);

  /// Maps u in [0, 1) to a sample.
  double sample(double u) const;
  /// Integral of the interpolated density.
  double total() const { return cumulative_.back(); }

 private:
  double x0_;
  double step_;
  std::vector<double> density_;
  std::vector<double> cumulative_;
};

}  // namespace hybridswap
