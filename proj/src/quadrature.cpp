#include "hybridswap/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hybridswap {

Eigen::VectorXd hermite_functions(int max_n, double x) {
  if (max_n < 0) throw std::invalid_argument("hermite_functions: max_n must be nonnegative");
  Eigen::VectorXd psi(max_n + 1);
  psi(0) = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * x * x);
  if (max_n >= 1) psi(1) = std::sqrt(2.0) * x * psi(0);
  for (int n = 1; n < max_n; ++n) {
    psi(n + 1) = std::sqrt(2.0 / (n + 1)) * x * psi(n) - std::sqrt(static_cast<double>(n) / (n + 1)) * psi(n - 1);
  }
  return psi;
}

Eigen::MatrixXd hermite_function_table(int max_n, std::span<const double> xs) {
  Eigen::MatrixXd table(static_cast<Eigen::Index>(xs.size()), max_n + 1);
  for (std::size_t i = 0; i < xs.size(); ++i) table.row(static_cast<Eigen::Index>(i)) = hermite_functions(max_n, xs[i]);
  return table;
}

CVector quadrature_wavefunctions(int max_n, double x, double theta) {
  const Eigen::VectorXd psi = hermite_functions(max_n, x);
  CVector out(max_n + 1);
  for (int n = 0; n <= max_n; ++n) out(n) = std::polar(psi(n), -n * theta);
  return out;
}

double quadrature_half_width(double mean_photons) {
  return 6.0 * std::sqrt(2.0 * std::max(mean_photons, 0.0) + 0.5);
}

std::vector<double> uniform_grid(double half_width, int points) {
  if (points < 2) throw std::invalid_argument("uniform_grid: need at least two points");
  std::vector<double> grid(static_cast<std::size_t>(points));
  const double step = 2.0 * half_width / (points - 1);
  for (int i = 0; i < points; ++i) grid[static_cast<std::size_t>(i)] = -half_width + i * step;
  return grid;
}

GridSampler::GridSampler(double x0, double step, std::vector<double> density)
    : x0_(x0), step_(step), density_(std::move(density)) {
  if (density_.size() < 2 || !(step_ > 0)) throw std::invalid_argument("GridSampler: need >= 2 points and positive step");
  cumulative_.assign(density_.size(), 0.0);
  for (std::size_t i = 0; i < density_.size(); ++i) density_[i] = std::max(density_[i], 0.0);
  for (std::size_t i = 1; i < density_.size(); ++i) {
    cumulative_[i] = cumulative_[i - 1] + 0.5 * step_ * (density_[i - 1] + density_[i]);
  }
  if (!(total() > 0)) throw std::invalid_argument("GridSampler: density integrates to zero");
}

GridSampler::GridSampler(std::span<const double> grid, std::vector<double> density)
    : GridSampler(grid.empty() ? 0.0 : grid.front(), grid.size() > 1 ? grid[1] - grid[0] : 0.0, std::move(density)) {}

double GridSampler::sample(double u) const {
  const double target = std::clamp(u, 0.0, 1.0) * total();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
  std::size_t cell = it == cumulative_.begin() ? 0 : static_cast<std::size_t>(it - cumulative_.begin()) - 1;
  cell = std::min(cell, density_.size() - 2);
  const double rest = target - cumulative_[cell];
  const double f0 = density_[cell];
  const double slope = (density_[cell + 1] - f0) / step_;
  // Solve f0 s + slope s^2 / 2 = rest for s in [0, step].
  const double disc = std::max(f0 * f0 + 2.0 * slope * rest, 0.0);
  const double denom = f0 + std::sqrt(disc);
  const double s = denom > 0 ? 2.0 * rest / denom : 0.0;
  return x0_ + cell * step_ + std::clamp(s, 0.0, step_);
}

}  // namespace hybridswap
