#include "hybridswap/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "hybridswap/entanglement.hpp"
#include "hybridswap/pipeline.hpp"

namespace hybridswap {

ConfigError::ConfigError(const std::string& file, int line, const std::string& message)
    : std::runtime_error(file + ":" + std::to_string(line) + ": " + message), line_(line) {}

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::swap: return "swap";
    case Experiment::scan: return "scan";
    case Experiment::postselect: return "postselect";
    case Experiment::tomo: return "tomo";
    case Experiment::chsh: return "chsh";
    case Experiment::teleport: return "teleport";
  }
  return "?";
}

Experiment parse_experiment(const std::string& id) {
  static const std::map<std::string, Experiment> ids = {
      {"swap", Experiment::swap}, {"scan", Experiment::scan}, {"postselect", Experiment::postselect},
      {"tomo", Experiment::tomo}, {"chsh", Experiment::chsh}, {"teleport", Experiment::teleport}};
  const auto it = ids.find(id);
  if (it == ids.end()) {
    throw std::invalid_argument("unknown experiment '" + id + "' (expected swap, scan, postselect, tomo, chsh or teleport)");
  }
  return it->second;
}

namespace {

class Reader {
 public:
  explicit Reader(std::string file) : file_(std::move(file)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& message) const {
    throw ConfigError(file_, node.Mark().is_null() ? 0 : node.Mark().line + 1, message);
  }

  void expect_map(const YAML::Node& node, const std::string& where, const std::set<std::string>& keys) const {
    if (!node.IsMap()) fail(node, "'" + where + "' must be a mapping");
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (!keys.count(key)) {
        fail(kv.first, "unknown key '" + key + "'" + (where.empty() ? "" : " in section '" + where + "'"));
      }
    }
  }

  double number(const YAML::Node& node, const std::string& what) const {
    if (!node.IsScalar()) fail(node, what + " must be a number");
    try {
      const double v = node.as<double>();
      if (!std::isfinite(v)) fail(node, what + " must be finite");
      return v;
    } catch (const YAML::BadConversion&) {
      fail(node, what + " must be a number, got '" + node.Scalar() + "'");
    }
  }

  long long integer(const YAML::Node& node, const std::string& what) const {
    if (!node.IsScalar()) fail(node, what + " must be an integer");
    try {
      return node.as<long long>();
    } catch (const YAML::BadConversion&) {
      fail(node, what + " must be an integer, got '" + node.Scalar() + "'");
    }
  }

  bool boolean(const YAML::Node& node, const std::string& what) const {
    if (!node.IsScalar()) fail(node, what + " must be true or false");
    try {
      return node.as<bool>();
    } catch (const YAML::BadConversion&) {
      fail(node, what + " must be true or false, got '" + node.Scalar() + "'");
    }
  }

  std::string text(const YAML::Node& node, const std::string& what) const {
    if (!node.IsScalar()) fail(node, what + " must be a string");
    return node.Scalar();
  }

  double in_range(const YAML::Node& node, const std::string& what, double lo, double hi, bool open_lo = false) const {
    const double v = number(node, what);
    if (v > hi || v < lo || (open_lo && v == lo)) {
      std::ostringstream os;
      os << what << " = " << v << " must lie in " << (open_lo ? "(" : "[") << lo << ", " << hi << "]";
      fail(node, os.str());
    }
    return v;
  }

  long long positive(const YAML::Node& node, const std::string& what, long long min = 1) const {
    const long long v = integer(node, what);
    if (v < min) fail(node, what + " must be at least " + std::to_string(min));
    return v;
  }

  std::vector<double> number_list(const YAML::Node& node, const std::string& what) const {
    if (!node.IsSequence() || node.size() == 0) fail(node, what + " must be a nonempty list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < node.size(); ++i) out.push_back(number(node[i], what + "[" + std::to_string(i) + "]"));
    return out;
  }

  cplx complex(const YAML::Node& node, const std::string& what) const {
    if (node.IsScalar()) return number(node, what);
    if (!node.IsSequence() || node.size() != 2) fail(node, what + " must be a number or a [re, im] pair");
    return {number(node[0], what + "[0]"), number(node[1], what + "[1]")};
  }

 private:
  std::string file_;
};

void read_source(const Reader& rd, const YAML::Node& node, RunConfig& cfg) {
  rd.expect_map(node, "source", {"R", "cutoff", "impurity"});
  if (node["R"]) cfg.source.R = rd.in_range(node["R"], "source.R", 0.0, 1.0);
  if (node["cutoff"]) cfg.source.cutoff = static_cast<int>(rd.positive(node["cutoff"], "source.cutoff"));
  const YAML::Node imp = node["impurity"];
  if (!imp) return;
  rd.expect_map(imp, "source.impurity", {"ideal", "vacuum", "multiphoton", "fit_log_negativity"});
  if (imp["fit_log_negativity"]) {
    if (imp["ideal"] || imp["vacuum"]) rd.fail(imp, "source.impurity: give either fit_log_negativity or explicit weights");
    const double target = rd.in_range(imp["fit_log_negativity"], "source.impurity.fit_log_negativity", 0.0, 1.0, true);
    const double multi =
        imp["multiphoton"] ? rd.in_range(imp["multiphoton"], "source.impurity.multiphoton", 0.0, 1.0) : 0.0;
    try {
      cfg.source.impurity = fit_impurity_weights(cfg.source.R, target, multi);
    } catch (const std::exception& e) {
      rd.fail(imp, std::string("source.impurity: ") + e.what());
    }
    cfg.source_fit_target = target;
    return;
  }
  Impurity w;
  w.weight_ideal = imp["ideal"] ? rd.in_range(imp["ideal"], "source.impurity.ideal", 0.0, 1.0) : 1.0;
  w.weight_vacuum = imp["vacuum"] ? rd.in_range(imp["vacuum"], "source.impurity.vacuum", 0.0, 1.0) : 0.0;
  w.weight_multiphoton = imp["multiphoton"] ? rd.in_range(imp["multiphoton"], "source.impurity.multiphoton", 0.0, 1.0) : 0.0;
  const double total = w.weight_ideal + w.weight_vacuum + w.weight_multiphoton;
  if (std::abs(total - 1.0) > 1e-9) {
    std::ostringstream os;
    os << "source.impurity weights sum to " << total << ", expected 1";
    rd.fail(imp, os.str());
  }
  cfg.source.impurity = w;
}

void read_channel(const Reader& rd, const YAML::Node& node, RunConfig& cfg) {
  rd.expect_map(node, "channel", {"r", "g", "pre_loss", "post_loss", "resource_loss"});
  if (!node["r"]) rd.fail(node, "channel.r is required");
  cfg.channel.r = rd.in_range(node["r"], "channel.r", 0.0, 5.0);
  if (!node["g"] || (node["g"].IsScalar() && node["g"].Scalar() == "optimal")) {
    cfg.channel.g = std::tanh(cfg.channel.r);
  } else {
    cfg.channel.g = rd.in_range(node["g"], "channel.g", 0.0, 10.0);
  }
  if (node["pre_loss"]) cfg.channel.pre_loss = rd.in_range(node["pre_loss"], "channel.pre_loss", 0.0, 1.0, true);
  if (node["post_loss"]) cfg.channel.post_loss = rd.in_range(node["post_loss"], "channel.post_loss", 0.0, 1.0, true);
  if (node["resource_loss"]) {
    cfg.channel.resource_loss = rd.in_range(node["resource_loss"], "channel.resource_loss", 0.0, 1.0, true);
  }
  cfg.channel_given = true;
}

void read_scan(const Reader& rd, const YAML::Node& node, RunConfig& cfg) {
  rd.expect_map(node, "scan", {"r", "g"});
  if (!node["r"]) rd.fail(node, "scan.r is required");
  cfg.scan.r_values = rd.number_list(node["r"], "scan.r");
  for (std::size_t i = 0; i < cfg.scan.r_values.size(); ++i) {
    if (cfg.scan.r_values[i] < 0) rd.fail(node["r"][i], "scan.r values must be >= 0");
  }
  const YAML::Node g = node["g"];
  if (!g) {
    cfg.scan.g_values = gain_grid();
  } else if (g.IsSequence()) {
    cfg.scan.g_values = rd.number_list(g, "scan.g");
    for (std::size_t i = 0; i < cfg.scan.g_values.size(); ++i) {
      if (cfg.scan.g_values[i] < 0) rd.fail(g[i], "scan.g values must be >= 0");
    }
  } else {
    rd.expect_map(g, "scan.g", {"from", "to", "points"});
    const double lo = g["from"] ? rd.in_range(g["from"], "scan.g.from", 0.0, 10.0) : 0.0;
    const double hi = g["to"] ? rd.in_range(g["to"], "scan.g.to", 0.0, 10.0) : 1.2;
    const int points = g["points"] ? static_cast<int>(rd.positive(g["points"], "scan.g.points")) : 21;
    if (hi < lo) rd.fail(g, "scan.g.to must not be below scan.g.from");
    cfg.scan.g_values = gain_grid(lo, hi, points);
  }
}

void read_tomography(const Reader& rd, const YAML::Node& node, RunConfig& cfg) {
  rd.expect_map(node, "tomography",
                {"enabled", "samples", "phases", "phase_sum", "seed", "cutoff", "max_iter", "tol", "bins", "bootstrap"});
  auto& t = cfg.tomography;
  t.enabled = node["enabled"] ? rd.boolean(node["enabled"], "tomography.enabled") : true;
  if (node["samples"]) t.samples = static_cast<std::size_t>(rd.positive(node["samples"], "tomography.samples"));
  if (node["phases"]) t.phases = static_cast<int>(rd.positive(node["phases"], "tomography.phases"));
  if (node["phase_sum"]) t.phase_sum = rd.number(node["phase_sum"], "tomography.phase_sum");
  if (node["seed"]) t.seed = static_cast<std::uint64_t>(rd.positive(node["seed"], "tomography.seed", 0));
  if (node["cutoff"]) t.cutoff = static_cast<int>(rd.positive(node["cutoff"], "tomography.cutoff"));
  if (node["max_iter"]) t.max_iter = static_cast<int>(rd.positive(node["max_iter"], "tomography.max_iter"));
  if (node["tol"]) t.tol = rd.in_range(node["tol"], "tomography.tol", 0.0, 1.0, true);
  if (node["bins"]) t.bins = static_cast<int>(rd.positive(node["bins"], "tomography.bins", 2));
  if (node["bootstrap"]) t.bootstrap = static_cast<int>(rd.positive(node["bootstrap"], "tomography.bootstrap", 0));
}

void read_chsh(const Reader& rd, const YAML::Node& node, RunConfig& cfg) {
  rd.expect_map(node, "chsh", {"angles", "grid"});
  if (node["angles"]) {
    const auto a = rd.number_list(node["angles"], "chsh.angles");
    if (a.size() != 4) rd.fail(node["angles"], "chsh.angles needs four values (a, a', d, d')");
    cfg.chsh.angles = ChshAngles{a[0], a[1], a[2], a[3]};
  }
  if (node["grid"]) cfg.chsh.grid = static_cast<int>(rd.positive(node["grid"], "chsh.grid"));
}

void read_teleport(const Reader& rd, const YAML::Node& node, RunConfig& cfg) {
  rd.expect_map(node, "teleport", {"alpha", "beta", "bloch_samples"});
  auto& t = cfg.teleport;
  if (node["alpha"]) t.alpha = rd.complex(node["alpha"], "teleport.alpha");
  if (node["beta"]) t.beta = rd.complex(node["beta"], "teleport.beta");
  const double norm = std::norm(t.alpha) + std::norm(t.beta);
  if (std::abs(norm - 1.0) > tol::kQubitNorm) {
    std::ostringstream os;
    os << "teleport: |alpha|^2 + |beta|^2 = " << norm << ", expected 1";
    rd.fail(node, os.str());
  }
  if (node["bloch_samples"]) {
    t.bloch_samples = static_cast<std::size_t>(rd.positive(node["bloch_samples"], "teleport.bloch_samples", 2));
  }
}

void read_compare(const Reader& rd, const YAML::Node& node, RunConfig& cfg) {
  if (node.IsScalar()) {
    cfg.compare.enabled = rd.boolean(node, "compare");
    return;
  }
  rd.expect_map(node, "compare", {"enabled", "fit"});
  cfg.compare.enabled = node["enabled"] ? rd.boolean(node["enabled"], "compare.enabled") : true;
  if (node["fit"]) cfg.compare.fit = rd.boolean(node["fit"], "compare.fit");
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& name) {
  const Reader rd(name);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(name, e.mark.line + 1, e.msg);
  }
  RunConfig cfg;
  cfg.source_text = text;
  cfg.source_name = name;
  if (root.IsNull()) return cfg;
  rd.expect_map(root, "",
                {"experiment", "seed", "output", "workers", "source", "channel", "scan", "postselection", "tomography",
                 "chsh", "teleport", "compare"});
  if (root["experiment"]) {
    try {
      cfg.experiment = parse_experiment(rd.text(root["experiment"], "experiment"));
    } catch (const std::invalid_argument& e) {
      rd.fail(root["experiment"], e.what());
    }
  }
  if (root["seed"]) cfg.seed = static_cast<std::uint64_t>(rd.positive(root["seed"], "seed", 0));
  if (root["output"]) cfg.output = rd.text(root["output"], "output");
  if (root["workers"]) cfg.workers = static_cast<unsigned>(rd.positive(root["workers"], "workers", 0));
  if (root["source"]) read_source(rd, root["source"], cfg);
  if (root["channel"]) read_channel(rd, root["channel"], cfg);
  if (root["scan"]) read_scan(rd, root["scan"], cfg);
  if (root["postselection"]) cfg.postselection = rd.boolean(root["postselection"], "postselection");
  if (root["tomography"]) read_tomography(rd, root["tomography"], cfg);
  if (root["chsh"]) read_chsh(rd, root["chsh"], cfg);
  if (root["teleport"]) read_teleport(rd, root["teleport"], cfg);
  if (root["compare"]) read_compare(rd, root["compare"], cfg);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path, 0, "cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

void validate_for(const RunConfig& config, Experiment experiment) {
  const std::string& f = config.source_name;
  if (config.experiment && *config.experiment != experiment) {
    throw ConfigError(f, 1, "config is for experiment '" + to_string(*config.experiment) + "' but '" +
                                to_string(experiment) + "' was requested");
  }
  if (experiment == Experiment::scan) {
    if (config.scan.r_values.empty()) throw ConfigError(f, 0, "experiment 'scan' needs a scan section with r values");
  } else if (!config.channel_given) {
    throw ConfigError(f, 0, "experiment '" + to_string(experiment) + "' needs a channel section");
  }
}

}  // namespace hybridswap
