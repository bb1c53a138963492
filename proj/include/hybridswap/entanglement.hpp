#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hybridswap/channel.hpp"
#include "hybridswap/fock.hpp"
#include "hybridswap/state_prep.hpp"
#include "hybridswap/tolerances.hpp"

namespace hybridswap {

struct NegativityReport {
  double log_negativity = 0;      // bits; 0 unless entangled
  double raw_log_negativity = 0;  // log2 of the trace norm before clamping
  double negativity = 0;          // (||rho^T_B|| - 1)/2; 0 unless entangled
  double min_pt_eigenvalue = 0;
  bool entangled = false;         // min_pt_eigenvalue < -ppt_tolerance
  double ppt_tolerance = tol::kPpt;
};

/// Logarithmic negativity of a normalized state with respect to the split
/// `part` | rest.
NegativityReport log_negativity(const FockDensityMatrix& rho, std::span<const int> part);
NegativityReport log_negativity(const FockDensityMatrix& rho, std::initializer_list<int> part);

/// Two-mode convenience: partial transpose on mode 1.
NegativityReport log_negativity(const FockDensityMatrix& rho);

/// g grid with `points` values evenly spaced over [lo, hi].
std::vector<double> gain_grid(double lo = 0.0, double hi = 1.2, int points = 21);

struct GainScanRow {
  double r = 0;
  double g = 0;
  NegativityReport report;
};

struct GainScanSpec {
  SplitPhotonSpec source;
  std::vector<double> r_values;
  std::vector<double> g_values = gain_grid();
  double pre_loss = 1.0;
  double post_loss = 1.0;
  double resource_loss = 1.0;
  int teleported_mode = 1;
  unsigned workers = 0;  // 0 = hardware concurrency
};

/// One row per (r, g), r-major, in the order given. Output does not depend
/// on the worker count.
std::vector<GainScanRow> gain_scan(const GainScanSpec& spec);

/// Header `r,g,log_negativity,negativity,min_pt_eigenvalue`, shortest
/// round-trip decimals.
void write_gain_scan_csv(std::ostream& os, const std::vector<GainScanRow>& rows);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace hybridswap
