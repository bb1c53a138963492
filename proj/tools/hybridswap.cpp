// hybridswap <experiment> --config <file> [--seed N] [--out DIR]
//
// Exit codes: 0 success, 2 configuration error, 3 invariant violation,
// 4 non-convergence.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hybridswap/config.hpp"
#include "hybridswap/errors.hpp"
#include "hybridswap/pipeline.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitInvariant = 3;
constexpr int kExitConvergence = 4;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entanglement swapping between discrete and continuous variables"};
  app.set_version_flag("--version", std::string("hybridswap ") + hybridswap::kToolVersion);
  std::string experiment_id, config_path, out_dir;
  std::uint64_t seed = 0;
  app.add_option("experiment", experiment_id, "swap | scan | postselect | tomo | chsh | teleport")->required();
  app.add_option("--config", config_path, "YAML run configuration")->required();
  auto* seed_opt = app.add_option("--seed", seed, "Override the configured seed");
  auto* out_opt = app.add_option("--out", out_dir, "Override the output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    const auto experiment = hybridswap::parse_experiment(experiment_id);
    auto config = hybridswap::load_config(config_path);
    if (*seed_opt) config.seed = seed;
    if (*out_opt) config.output = out_dir;
    const auto result = hybridswap::run(config, experiment);
    std::cout << result.summary.dump(2) << "\n";
    std::cerr << "wrote " << result.files.size() << " files to " << result.directory << "\n";
    return 0;
  } catch (const hybridswap::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const hybridswap::InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const hybridswap::ConvergenceFailure& e) {
    std::cerr << "no convergence: " << e.what() << "\n";
    return kExitConvergence;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
