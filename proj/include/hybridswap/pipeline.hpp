#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hybridswap/channel.hpp"
#include "hybridswap/config.hpp"
#include "hybridswap/state_prep.hpp"

namespace hybridswap {

inline constexpr const char* kToolVersion = "0.1.0";

/// Impurity weights for a split photon of reflectivity R whose log negativity
/// equals `target`: the multiphoton weight is fixed and the rest is split
/// between the ideal state and vacuum.
Impurity fit_impurity_weights(double R, double target, double multiphoton = 0.0);

// ---------------------------------------------------------------------------
// Model quantities and the published reference values.

/// Quantities of one (source, channel) configuration. Keys: E_AB, E_AD, P,
/// E_ps, S, F_av.
struct ModelResults {
  double R = 0, r = 0, g = 0;
  std::map<std::string, double> values;
  bool source_fitted = false;  // impurity weights fitted to a reference value
  bool losses_fitted = false;  // losses from fit_losses
};

ModelResults evaluate_model(const SplitPhotonSpec& source, const ChannelSpec& channel);

/// What a reference value needs before it can be compared.
enum class FitKind { none, source, losses };

struct ReferenceValue {
  std::string quantity;
  double R = 0;
  std::optional<double> r, g;  // unset for initial-state quantities
  double value = 0;
  double uncertainty = 0;
  double tolerance = 0;        // pass band; the printed uncertainty unless stated otherwise
  FitKind requires_fit = FitKind::none;  // source: impurity weights, losses: efficiency budget
  std::string note;
};

const std::vector<ReferenceValue>& reference_table();

struct ComparisonRow {
  ReferenceValue reference;
  std::optional<double> model;
  std::string status;  // pass | fail | not directly comparable (imperfection fit required)
  bool fitted = false;
};

/// Compares every reference entry that matches the configuration of
/// `results`. Entries that need a fit are judged only when `results` carries
/// that fit, and are then flagged as fitted. Throws std::invalid_argument when
/// a matching quantity is missing from `results`.
std::vector<ComparisonRow> compare_to_reference(const ModelResults& results, const std::vector<ReferenceValue>& table);

struct LossFit {
  double resource_loss = 1.0;
  double post_loss = 1.0;
  double chi2 = 0;
  int evaluations = 0;
  bool converged = false;
  std::vector<std::string> quantities;  // fitted targets
};

/// Least-squares fit of (resource_loss, post_loss) to the reference entries
/// of configuration (R, r, g) that need a loss fit, weighted by their printed
/// uncertainties. Levenberg-Marquardt on logit-transformed transmissivities.
LossFit fit_losses(const SplitPhotonSpec& source, double r, double g, const std::vector<ReferenceValue>& table);

nlohmann::json to_json(const ComparisonRow& row);
nlohmann::json to_json(const LossFit& fit);

// ---------------------------------------------------------------------------
// Runs.

struct RunResult {
  std::string directory;
  std::vector<std::string> files;  // relative to directory, in write order
  nlohmann::json summary;
};

/// Runs `experiment` and writes its artifacts plus manifest.json into
/// config.output. Every density matrix is validated before it is written.
/// Throws ConfigError, InvariantViolation or ConvergenceFailure.
RunResult run(const RunConfig& config, Experiment experiment);

/// SHA-256 of a byte string as lowercase hex.
std::string sha256_hex(const std::string& bytes);

}  // namespace hybridswap
