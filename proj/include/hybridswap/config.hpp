#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hybridswap/channel.hpp"
#include "hybridswap/postselection.hpp"
#include "hybridswap/state_prep.hpp"

namespace hybridswap {

/// Invalid run configuration. what() reads "<file>:<line>: <message>".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& file, int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

enum class Experiment { swap, scan, postselect, tomo, chsh, teleport };

std::string to_string(Experiment e);
/// Throws std::invalid_argument for unknown ids.
Experiment parse_experiment(const std::string& id);

struct ScanSettings {
  std::vector<double> r_values;
  std::vector<double> g_values;
};

struct TomographySettings {
  bool enabled = false;
  std::size_t samples = 100000;
  int phases = 12;
  double phase_sum = 0.0;
  std::optional<std::uint64_t> seed;  // defaults to the run seed
  int cutoff = 3;
  int max_iter = 2000;
  double tol = 1e-10;
  int bins = 201;
  int bootstrap = 0;  // resamples for error bars; 0 disables
};

struct ChshSettings {
  ChshAngles angles = ChshAngles::canonical();
  int grid = 10;  // correlation table points per angle over [0, pi)
};

struct TeleportSettings {
  cplx alpha = 1.0;
  cplx beta = 0.0;
  std::size_t bloch_samples = 100000;
};

struct CompareSettings {
  bool enabled = false;
  bool fit = true;
};

struct RunConfig {
  std::optional<Experiment> experiment;
  std::uint64_t seed = 1;
  std::string output = "runs/default";
  unsigned workers = 0;
  SplitPhotonSpec source;
  /// Log negativity the impurity weights were fitted to, when the config
  /// asks for a fitted source instead of explicit weights.
  std::optional<double> source_fit_target;
  ChannelSpec channel;
  bool channel_given = false;
  ScanSettings scan;
  bool postselection = true;
  TomographySettings tomography;
  ChshSettings chsh;
  TeleportSettings teleport;
  CompareSettings compare;
  std::string source_text;  // raw config bytes, hashed into the manifest
  std::string source_name;
};

/// Parses a YAML run configuration. Unknown keys, wrong types and out-of-range
/// values raise ConfigError with the offending line.
RunConfig parse_config(const std::string& text, const std::string& name = "<config>");
RunConfig load_config(const std::string& path);

/// Cross-section checks that depend on the experiment (for example, `scan`
/// needs r values and the others need a channel).
void validate_for(const RunConfig& config, Experiment experiment);

}  // namespace hybridswap
