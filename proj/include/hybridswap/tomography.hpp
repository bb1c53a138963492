#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hybridswap/fock.hpp"

namespace hybridswap {

/// One joint homodyne outcome. Phases lie in [0, 2 pi); quadratures use
/// vacuum variance 1/2.
struct QuadratureSample {
  double theta1 = 0, theta2 = 0;
  double x1 = 0, x2 = 0;
};

struct PhaseSetting {
  double theta1 = 0, theta2 = 0;
};

/// `steps` relative phases theta1 - theta2 = k pi / steps, k = 0..steps-1,
/// with theta1 + theta2 = phase_sum.
std::vector<PhaseSetting> relative_phase_schedule(int steps = 12, double phase_sum = 0.0);

struct TomoDataset {
  std::vector<QuadratureSample> samples;
  std::uint64_t seed = 0;
  std::vector<PhaseSetting> schedule;
  std::string source;
};

/// Joint density p(x1, x2) on grid1 x grid2 (rows follow grid1). Throws
/// std::invalid_argument when its trapezoidal integral misses 1 by more
/// than 1e-4, which flags a grid that is too coarse or too narrow.
Eigen::MatrixXd homodyne_pdf(const FockDensityMatrix& rho, double theta1, double theta2, const std::vector<double>& grid1,
                             const std::vector<double>& grid2);

struct SamplingOptions {
  int grid_points = 801;
};

/// Draws n outcomes spread evenly over the schedule: x1 from the exact
/// marginal, then x2 from the conditional density. Each phase setting uses
/// its own stream derived from (seed, setting index).
TomoDataset sample_homodyne(const FockDensityMatrix& rho, const std::vector<PhaseSetting>& schedule, std::size_t n,
                            std::uint64_t seed, const SamplingOptions& options = {});

struct MleOptions {
  int cutoff = 3;
  int max_iter = 2000;
  double tol = 1e-10;    // relative log-likelihood change
  int bins = 201;        // per mode and phase setting
  double span_sigmas = 6.0;
};

struct MleDiagnostics {
  int iterations = 0;
  double final_loglik = 0;
  bool converged = false;
  int diluted_steps = 0;
  std::vector<double> loglik_history;  // entry 0 is the starting point
};

struct MleResult {
  FockDensityMatrix rho;
  MleDiagnostics diagnostics;
};

/// Binned maximum-likelihood reconstruction on two modes, starting from the
/// maximally mixed state. Steps are R rho R; when one fails to raise the
/// likelihood it is replaced by the diluted map (1 + eps R)/(1 + eps) with eps
/// halved until it does. No detector-efficiency correction is applied.
MleResult mle_reconstruct(const TomoDataset& data, const MleOptions& options = {});

/// Reconstructs `resamples` bootstrap copies of the data and returns
/// `statistic` of each.
std::vector<double> bootstrap(const TomoDataset& data, const MleOptions& options, int resamples, std::uint64_t seed,
                              const std::function<double(const FockDensityMatrix&)>& statistic);

void write_dataset_csv(std::ostream& os, const TomoDataset& data);
TomoDataset read_dataset_csv(std::istream& is);
nlohmann::json dataset_sidecar(const TomoDataset& data);
nlohmann::json to_json(const MleDiagnostics& d);

}  // namespace hybridswap
