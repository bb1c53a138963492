#include "hybridswap/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <boost/math/tools/roots.hpp>
#include <openssl/evp.h>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include "hybridswap/entanglement.hpp"
#include "hybridswap/errors.hpp"
#include "hybridswap/postselection.hpp"
#include "hybridswap/tomography.hpp"

namespace hybridswap {

Impurity fit_impurity_weights(double R, double target, double multiphoton) {
  if (multiphoton < 0 || multiphoton >= 1) throw std::invalid_argument("fit_impurity_weights: multiphoton weight must lie in [0, 1)");
  auto entanglement = [&](double ideal) {
    SplitPhotonSpec s{R, Impurity{ideal, 1.0 - multiphoton - ideal, multiphoton, std::nullopt}, 1};
    return log_negativity(split_photon(s)).log_negativity;
  };
  const double hi = 1.0 - multiphoton;
  if (entanglement(hi) < target) {
    std::ostringstream os;
    os << "log negativity " << target << " is out of reach for R = " << R << " (at most " << entanglement(hi) << ")";
    throw std::invalid_argument(os.str());
  }
  const auto [a, b] = boost::math::tools::bisect([&](double w) { return entanglement(w) - target; }, 0.0, hi,
                                                 boost::math::tools::eps_tolerance<double>(50));
  const double ideal = 0.5 * (a + b);
  return Impurity{ideal, 1.0 - multiphoton - ideal, multiphoton, std::nullopt};
}

ModelResults evaluate_model(const SplitPhotonSpec& source, const ChannelSpec& channel) {
  ModelResults out;
  out.R = source.R;
  out.r = channel.r;
  out.g = channel.g;
  const auto rho_ab = split_photon(source);
  const auto rho_ad = apply_channel(rho_ab, 1, channel);
  out.values["E_AB"] = log_negativity(rho_ab).log_negativity;
  out.values["E_AD"] = log_negativity(rho_ad).log_negativity;
  if (extract_qubit_block(rho_ad).success_probability() > 0) {
    const auto s = summarize(rho_ad);
    out.values["P"] = s.P;
    out.values["E_ps"] = s.E_ps;
    out.values["S"] = s.S;
    out.values["F_av"] = s.F_av;
  }
  return out;
}

const std::vector<ReferenceValue>& reference_table() {
  static const std::vector<ReferenceValue> table = [] {
    std::vector<ReferenceValue> t;
    auto add = [&](std::string q, double R, std::optional<double> r, std::optional<double> g, double v, double u,
                   FitKind fit, std::string note = {}, double band = 0) {
      t.push_back(ReferenceValue{std::move(q), R, r, g, v, u, band > 0 ? band : u, fit, std::move(note)});
    };
    add("E_AB", 0.5, {}, {}, 0.71, 0.01, FitKind::none, "impurity model 0.806/0.183/0.011", 0.02);
    add("E_AB", 0.67, {}, {}, 0.64, 0.01, FitKind::source, "impurity weights fitted to this value", 0.02);
    add("E_AD", 0.5, 1.01, 0.79, 0.28, 0.01, FitKind::losses, "maximum of the measured gain scan");
    const struct {
      double R, r, g, P, sP, E, sE, S, sS, F, sF;
    } post[] = {{0.5, 0.71, 0.63, 0.125, 0.002, 0.67, 0.02, 2.08, 0.05, 0.86, 0.01},
                {0.5, 1.01, 0.79, 0.160, 0.003, 0.75, 0.02, 2.21, 0.05, 0.89, 0.01},
                {0.67, 0.71, 0.63, 0.103, 0.002, 0.70, 0.04, 2.11, 0.08, 0.87, 0.01},
                {0.67, 1.01, 0.79, 0.134, 0.003, 0.77, 0.02, 2.26, 0.04, 0.90, 0.01}};
    for (const auto& p : post) {
      add("P", p.R, p.r, p.g, p.P, p.sP, FitKind::losses);
      add("E_ps", p.R, p.r, p.g, p.E, p.sE, FitKind::losses);
      add("S", p.R, p.r, p.g, p.S, p.sS, FitKind::losses);
      add("F_av", p.R, p.r, p.g, p.F, p.sF, FitKind::losses);
    }
    return t;
  }();
  return table;
}

namespace {

constexpr double kConfigMatch = 1e-9;

bool matches(const ReferenceValue& ref, double R, double r, double g) {
  if (std::abs(ref.R - R) > kConfigMatch) return false;
  if (ref.r && std::abs(*ref.r - r) > kConfigMatch) return false;
  if (ref.g && std::abs(*ref.g - g) > kConfigMatch) return false;
  return true;
}

std::vector<ReferenceValue> loss_targets(double R, double r, double g, const std::vector<ReferenceValue>& table) {
  std::vector<ReferenceValue> out;
  for (const auto& ref : table) {
    if (ref.requires_fit == FitKind::losses && ref.r && matches(ref, R, r, g)) out.push_back(ref);
  }
  return out;
}

double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

struct LossResiduals {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  const SplitPhotonSpec* source;
  double r, g;
  const std::vector<ReferenceValue>* targets;
  int* evaluations;

  int inputs() const { return 2; }
  int values() const { return static_cast<int>(targets->size()); }

  int operator()(const Eigen::VectorXd& u, Eigen::VectorXd& f) const {
    ++*evaluations;
    const ChannelSpec ch{r, g, 1.0, logistic(u(1)), logistic(u(0))};
    const auto m = evaluate_model(*source, ch);
    for (std::size_t i = 0; i < targets->size(); ++i) {
      const auto& t = (*targets)[i];
      const auto it = m.values.find(t.quantity);
      // A vanishing post-selection probability only happens far from the data.
      const double v = it == m.values.end() ? 0.0 : it->second;
      f(static_cast<Eigen::Index>(i)) = (v - t.value) / t.uncertainty;
    }
    return 0;
  }
};

}  // namespace

std::vector<ComparisonRow> compare_to_reference(const ModelResults& results, const std::vector<ReferenceValue>& table) {
  std::vector<ComparisonRow> rows;
  for (const auto& ref : table) {
    if (!matches(ref, results.R, results.r, results.g)) continue;
    ComparisonRow row{ref, std::nullopt, {}, false};
    const auto it = results.values.find(ref.quantity);
    if (it == results.values.end()) {
      throw std::invalid_argument("compare_to_reference: results lack quantity '" + ref.quantity + "'");
    }
    row.model = it->second;
    const bool fit_available = ref.requires_fit == FitKind::none ||
                               (ref.requires_fit == FitKind::source && results.source_fitted) ||
                               (ref.requires_fit == FitKind::losses && results.losses_fitted);
    if (!fit_available) {
      row.status = "not directly comparable (imperfection fit required)";
    } else {
      row.fitted = ref.requires_fit != FitKind::none;
      row.status = std::abs(*row.model - ref.value) <= ref.tolerance + 1e-12 ? "pass" : "fail";
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

LossFit fit_losses(const SplitPhotonSpec& source, double r, double g, const std::vector<ReferenceValue>& table) {
  const auto targets = loss_targets(source.R, r, g, table);
  if (targets.size() < 2) throw std::invalid_argument("fit_losses: fewer than two reference values for this configuration");
  LossFit fit;
  for (const auto& t : targets) fit.quantities.push_back(t.quantity);
  LossResiduals functor{&source, r, g, &targets, &fit.evaluations};
  Eigen::NumericalDiff<LossResiduals> numdiff(functor);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<LossResiduals>> lm(numdiff);
  lm.parameters.xtol = 1e-10;
  lm.parameters.ftol = 1e-12;
  lm.parameters.maxfev = 400;
  Eigen::VectorXd u(2);
  u << logit(0.9), logit(0.8);
  const auto status = lm.minimize(u);
  Eigen::VectorXd f(targets.size());
  functor(u, f);
  fit.resource_loss = logistic(u(0));
  fit.post_loss = logistic(u(1));
  fit.chi2 = f.squaredNorm();
  fit.converged = status == Eigen::LevenbergMarquardtSpace::RelativeReductionTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::RelativeErrorTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::RelativeErrorAndReductionTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::CosinusTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::XtolTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::FtolTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::GtolTooSmall;
  return fit;
}

nlohmann::json to_json(const ComparisonRow& row) {
  const auto& ref = row.reference;
  nlohmann::json j{{"quantity", ref.quantity}, {"R", ref.R},
                   {"r", ref.r ? nlohmann::json(*ref.r) : nlohmann::json()},
                   {"g", ref.g ? nlohmann::json(*ref.g) : nlohmann::json()},
                   {"reference", ref.value}, {"uncertainty", ref.uncertainty},
                   {"tolerance", ref.tolerance}, {"model", row.model ? nlohmann::json(*row.model) : nlohmann::json()},
                   {"status", row.status}, {"fitted", row.fitted}};
  if (!ref.note.empty()) j["note"] = ref.note;
  return j;
}

nlohmann::json to_json(const LossFit& fit) {
  return nlohmann::json{{"resource_loss", fit.resource_loss}, {"post_loss", fit.post_loss}, {"chi2", fit.chi2},
                        {"evaluations", fit.evaluations},     {"converged", fit.converged}, {"quantities", fit.quantities}};
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256: digest failed");
  }
  std::ostringstream os;
  os << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < len; ++i) os << std::setw(2) << static_cast<int>(digest[i]);
  return os.str();
}

// ---------------------------------------------------------------------------

namespace {

namespace fs = std::filesystem;

class RunWriter {
 public:
  explicit RunWriter(const std::string& dir) : dir_(dir) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
  }

  void text(const std::string& name, const std::string& body) {
    std::ofstream out(fs::path(dir_) / name, std::ios::binary);
    out << body;
    if (!out) throw std::runtime_error("cannot write " + (fs::path(dir_) / name).string());
    files_.emplace_back(name, sha256_hex(body));
  }

  void json(const std::string& name, const nlohmann::json& j) { text(name, j.dump(2) + "\n"); }

  void state(const std::string& stem, const FockDensityMatrix& rho) {
    rho.validate();
    json(stem + ".json", to_json(rho));
    text(stem + "_abs.csv", abs_table(rho));
  }

  const std::vector<std::pair<std::string, std::string>>& files() const { return files_; }
  const std::string& dir() const { return dir_; }

  static std::string abs_table(const FockDensityMatrix& rho) {
    std::ostringstream os;
    const int modes = rho.modes();
    for (int m = 0; m < modes; ++m) os << "row_n" << m << ',';
    for (int m = 0; m < modes; ++m) os << "col_n" << m << ',';
    os << "abs\n";
    const auto& basis = rho.basis();
    for (std::size_t i = 0; i < rho.dim(); ++i) {
      for (std::size_t j = 0; j < rho.dim(); ++j) {
        for (int m = 0; m < modes; ++m) os << basis.occupation(i, m) << ',';
        for (int m = 0; m < modes; ++m) os << basis.occupation(j, m) << ',';
        os << format_double(std::abs(rho.data()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)))) << '\n';
      }
    }
    return os.str();
  }

 private:
  std::string dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

nlohmann::json to_json(const NegativityReport& r) {
  return nlohmann::json{{"log_negativity", r.log_negativity},       {"raw_log_negativity", r.raw_log_negativity},
                        {"negativity", r.negativity},               {"min_pt_eigenvalue", r.min_pt_eigenvalue},
                        {"entangled", r.entangled},                 {"ppt_tolerance", r.ppt_tolerance}};
}

nlohmann::json channel_json(const ChannelSpec& ch) {
  const auto p = channel_params(ch);
  return nlohmann::json{{"r", ch.r},
                        {"g", ch.g},
                        {"pre_loss", ch.pre_loss},
                        {"post_loss", ch.post_loss},
                        {"resource_loss", ch.resource_loss},
                        {"amplitude_gain", p.amplitude_gain},
                        {"added_noise", p.added_noise},
                        {"eta", p.dilation.eta},
                        {"G", p.dilation.G}};
}

nlohmann::json source_json(const RunConfig& cfg) {
  nlohmann::json j{{"R", cfg.source.R}, {"cutoff", cfg.source.cutoff}};
  if (cfg.source.impurity) {
    const auto& w = *cfg.source.impurity;
    j["impurity"] = {{"ideal", w.weight_ideal}, {"vacuum", w.weight_vacuum}, {"multiphoton", w.weight_multiphoton}};
    if (cfg.source_fit_target) j["impurity"]["fitted_to_log_negativity"] = *cfg.source_fit_target;
  }
  return j;
}

struct Stats {
  double mean = 0, sd = 0;
};

Stats stats(const std::vector<double>& v) {
  Stats s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  return s;
}

class Runner {
 public:
  Runner(const RunConfig& cfg, Experiment exp) : cfg_(cfg), exp_(exp), out_(cfg.output) {}

  RunResult go() {
    switch (exp_) {
      case Experiment::swap: swap(); break;
      case Experiment::scan: scan(); break;
      case Experiment::postselect: postselect(); break;
      case Experiment::tomo: tomo(); break;
      case Experiment::chsh: chsh(); break;
      case Experiment::teleport: teleport(); break;
    }
    if (cfg_.compare.enabled && exp_ != Experiment::scan) compare();
    out_.json(to_string(exp_) + "_summary.json", summary_);
    write_manifest();
    if (!convergence_error_.empty()) throw ConvergenceFailure(convergence_error_);
    RunResult res{out_.dir(), {}, summary_};
    for (const auto& f : out_.files()) res.files.push_back(f.first);
    res.files.push_back("manifest.json");
    return res;
  }

 private:
  const FockDensityMatrix& rho_ab() {
    if (!rho_ab_) rho_ab_ = split_photon(cfg_.source);
    return *rho_ab_;
  }

  const FockDensityMatrix& rho_ad() {
    if (!rho_ad_) rho_ad_ = apply_channel(rho_ab(), 1, cfg_.channel);
    return *rho_ad_;
  }

  void swap() {
    out_.state("rho_ab", rho_ab());
    out_.state("rho_ad", rho_ad());
    summary_["source"] = source_json(cfg_);
    summary_["channel"] = channel_json(cfg_.channel);
    summary_["E_AB"] = to_json(log_negativity(rho_ab()));
    summary_["E_AD"] = to_json(log_negativity(rho_ad()));
    summary_["mean_photons_D"] = mean_photon_number(rho_ad(), 1);
    if (cfg_.postselection) postselection_block(rho_ad(), "postselect");
    if (cfg_.tomography.enabled) tomography_block();
  }

  void scan() {
    GainScanSpec spec;
    spec.source = cfg_.source;
    spec.r_values = cfg_.scan.r_values;
    spec.g_values = cfg_.scan.g_values;
    if (cfg_.channel_given) {
      spec.pre_loss = cfg_.channel.pre_loss;
      spec.post_loss = cfg_.channel.post_loss;
      spec.resource_loss = cfg_.channel.resource_loss;
    }
    spec.workers = cfg_.workers;
    const auto rows = gain_scan(spec);
    std::ostringstream csv;
    write_gain_scan_csv(csv, rows);
    out_.text("scan.csv", csv.str());
    summary_["source"] = source_json(cfg_);
    summary_["E_AB"] = to_json(log_negativity(split_photon(cfg_.source)));
    nlohmann::json peaks = nlohmann::json::array();
    const std::size_t ng = spec.g_values.size();
    for (std::size_t i = 0; i < spec.r_values.size(); ++i) {
      std::size_t best = i * ng;
      for (std::size_t k = i * ng; k < (i + 1) * ng; ++k) {
        if (rows[k].report.log_negativity > rows[best].report.log_negativity) best = k;
      }
      peaks.push_back({{"r", spec.r_values[i]}, {"g_max", rows[best].g}, {"E_max", rows[best].report.log_negativity},
                       {"any_entangled", std::any_of(rows.begin() + static_cast<std::ptrdiff_t>(i * ng),
                                                     rows.begin() + static_cast<std::ptrdiff_t>((i + 1) * ng),
                                                     [](const auto& row) { return row.report.entangled; })}});
    }
    summary_["peaks"] = peaks;
  }

  void postselect() {
    summary_["source"] = source_json(cfg_);
    summary_["channel"] = channel_json(cfg_.channel);
    out_.state("rho_ad", rho_ad());
    postselection_block(rho_ad(), "postselect");
    if (cfg_.tomography.enabled) tomography_block();
  }

  void tomo() {
    summary_["source"] = source_json(cfg_);
    summary_["channel"] = channel_json(cfg_.channel);
    out_.state("rho_ad", rho_ad());
    tomography_block();
  }

  void chsh() {
    summary_["source"] = source_json(cfg_);
    summary_["channel"] = channel_json(cfg_.channel);
    const auto block = extract_qubit_block(rho_ad());
    const auto pur = purify(block);
    out_.state("rho_ps", pur.rho_ps);
    std::ostringstream csv;
    csv << "theta_a,theta_d,closed_form,matrix\n";
    const int n = cfg_.chsh.grid;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double ta = std::numbers::pi * i / n, td = std::numbers::pi * j / n;
        csv << format_double(ta) << ',' << format_double(td) << ',' << format_double(chsh_correlation(block, ta, td))
            << ',' << format_double(chsh_correlation_explicit(pur.rho_ps, ta, td)) << '\n';
      }
    }
    out_.text("chsh.csv", csv.str());
    const auto& a = cfg_.chsh.angles;
    summary_["angles"] = {a.a, a.a_prime, a.d, a.d_prime};
    summary_["x"] = block.x();
    summary_["y"] = block.y();
    summary_["P"] = pur.P;
    summary_["S"] = chsh_s(block, a);
    summary_["S_canonical_closed_form"] = std::abs(std::sqrt(2.0) * (2 * block.x() + block.y() - 1));
    summary_["violates_chsh"] = chsh_s(block, a) > 2.0;
  }

  void teleport() {
    summary_["source"] = source_json(cfg_);
    summary_["channel"] = channel_json(cfg_.channel);
    const auto block = extract_qubit_block(rho_ad());
    const auto& t = cfg_.teleport;
    const auto res = teleport_qubit(block, t.alpha, t.beta);
    out_.state("rho_out", res.rho_out);
    const auto mc = bloch_average_fidelity(block, t.bloch_samples, cfg_.seed);
    summary_["alpha"] = {t.alpha.real(), t.alpha.imag()};
    summary_["beta"] = {t.beta.real(), t.beta.imag()};
    summary_["fidelity"] = res.fidelity;
    summary_["fidelity_closed_form"] = teleport_fidelity_closed_form(block, t.alpha, t.beta);
    summary_["success_prob"] = res.success_prob;
    summary_["F_av"] = (1 + block.x() + block.y()) / 3;
    summary_["F_av_monte_carlo"] = {{"mean", mc.mean}, {"standard_error", mc.standard_error}, {"samples", t.bloch_samples}};
    summary_["classical_limit"] = 2.0 / 3.0;
  }

  void postselection_block(const FockDensityMatrix& rho, const std::string& key) {
    if (!(extract_qubit_block(rho).success_probability() > 0)) {
      summary_[key] = nullptr;
      return;
    }
    const auto s = summarize(rho);
    s.rho_ps.validate();
    summary_[key] = to_json(s);
    out_.text(key == "postselect" ? "rho_ps_abs.csv" : key + "_rho_ps_abs.csv", RunWriter::abs_table(s.rho_ps));
  }

  MleOptions mle_options() const {
    const auto& t = cfg_.tomography;
    return MleOptions{t.cutoff, t.max_iter, t.tol, t.bins};
  }

  void tomography_block() {
    const auto& t = cfg_.tomography;
    const std::uint64_t seed = t.seed.value_or(cfg_.seed);
    auto data = sample_homodyne(rho_ad(), relative_phase_schedule(t.phases, t.phase_sum), t.samples, seed);
    data.source = "rho_ad R=" + format_double(cfg_.source.R) + " r=" + format_double(cfg_.channel.r) +
                  " g=" + format_double(cfg_.channel.g);
    std::ostringstream csv;
    write_dataset_csv(csv, data);
    out_.text("dataset.csv", csv.str());
    out_.json("dataset.json", dataset_sidecar(data));

    const auto res = mle_reconstruct(data, mle_options());
    out_.state("rho_ad_mle", res.rho);
    const auto& h = res.diagnostics.loglik_history;
    for (std::size_t i = 1; i < h.size(); ++i) {
      if (h[i] < h[i - 1] - 1e-9 * std::abs(h[i - 1])) {
        throw InvariantViolation("tomography: log-likelihood decreased at iteration " + std::to_string(i));
      }
    }
    nlohmann::json j = to_json(res.diagnostics);
    j["loglik_history"] = h;
    const auto& truth_basis = rho_ad().basis();
    const std::vector<int> common{std::max(t.cutoff, truth_basis.cutoff(0)), std::max(t.cutoff, truth_basis.cutoff(1))};
    const auto truth = resize(rho_ad(), common);
    const auto est = resize(res.rho, common);
    j["fidelity_to_truth"] = fidelity(est, truth);
    j["trace_distance_to_truth"] = trace_distance(est, truth);
    j["E_AD"] = to_json(log_negativity(res.rho));
    out_.json("mle.json", j);
    summary_["tomography"] = {{"samples", t.samples},
                              {"seed", seed},
                              {"iterations", res.diagnostics.iterations},
                              {"converged", res.diagnostics.converged},
                              {"fidelity_to_truth", j["fidelity_to_truth"]},
                              {"E_AD", j["E_AD"]["log_negativity"]}};
    if (cfg_.postselection) postselection_block(res.rho, "postselect_reconstructed");

    if (t.bootstrap > 0) {
      const auto e = bootstrap(data, mle_options(), t.bootstrap, seed + 1,
                               [](const FockDensityMatrix& rho) { return log_negativity(rho).log_negativity; });
      const auto s = stats(e);
      summary_["tomography"]["E_AD_bootstrap"] = {{"mean", s.mean}, {"sd", s.sd}, {"resamples", t.bootstrap}};
    }
    if (!res.diagnostics.converged) {
      convergence_error_ = "tomography: maximum-likelihood iteration stopped after " +
                           std::to_string(res.diagnostics.iterations) + " iterations without converging";
    }
  }

  void compare() {
    ModelResults base = evaluate_model(cfg_.source, cfg_.channel);
    base.source_fitted = cfg_.source_fit_target.has_value();
    nlohmann::json report{{"unfitted", nlohmann::json::array()}};
    for (const auto& row : compare_to_reference(base, reference_table())) report["unfitted"].push_back(to_json(row));
    std::vector<ComparisonRow> rows;
    if (cfg_.compare.fit && loss_targets(cfg_.source.R, cfg_.channel.r, cfg_.channel.g, reference_table()).size() >= 2) {
      const auto fit = fit_losses(cfg_.source, cfg_.channel.r, cfg_.channel.g, reference_table());
      ChannelSpec fitted = cfg_.channel;
      fitted.resource_loss = fit.resource_loss;
      fitted.post_loss = fit.post_loss;
      fitted.pre_loss = 1.0;
      ModelResults m = evaluate_model(cfg_.source, fitted);
      m.source_fitted = base.source_fitted;
      m.losses_fitted = true;
      report["fit"] = to_json(fit);
      report["fitted"] = nlohmann::json::array();
      rows = compare_to_reference(m, reference_table());
      for (const auto& row : rows) report["fitted"].push_back(to_json(row));
    }
    out_.json("comparison.json", report);
    std::ostringstream csv;
    csv << "quantity,R,r,g,reference,uncertainty,model,fitted,status\n";
    auto emit = [&](const nlohmann::json& rowset) {
      for (const auto& row : rowset) {
        auto num = [](const nlohmann::json& v) { return v.is_null() ? std::string() : format_double(v.get<double>()); };
        csv << row["quantity"].get<std::string>() << ',' << num(row["R"]) << ',' << num(row["r"]) << ','
            << num(row["g"]) << ',' << num(row["reference"]) << ',' << num(row["uncertainty"]) << ','
            << num(row["model"]) << ',' << (row["fitted"].get<bool>() ? "yes" : "no") << ','
            << row["status"].get<std::string>() << '\n';
      }
    };
    emit(report["unfitted"]);
    if (report.contains("fitted")) emit(report["fitted"]);
    out_.text("comparison.csv", csv.str());
    summary_["comparison"] = {{"rows", report["unfitted"].size() + (report.contains("fitted") ? report["fitted"].size() : 0)},
                              {"all_fitted_pass", std::all_of(rows.begin(), rows.end(), [](const auto& r) {
                                 return r.status == "pass";
                               })}};
  }

  void write_manifest() {
    nlohmann::json files = nlohmann::json::array();
    for (const auto& [name, hash] : out_.files()) files.push_back({{"name", name}, {"sha256", hash}});
    const nlohmann::json manifest{{"tool", "hybridswap"},
                                  {"version", kToolVersion},
                                  {"experiment", to_string(exp_)},
                                  {"seed", cfg_.seed},
                                  {"config", fs::path(cfg_.source_name).filename().string()},
                                  {"config_sha256", sha256_hex(cfg_.source_text)},
                                  {"files", files}};
    std::ofstream out(fs::path(out_.dir()) / "manifest.json", std::ios::binary);
    out << manifest.dump(2) << "\n";
  }

  const RunConfig& cfg_;
  Experiment exp_;
  RunWriter out_;
  std::optional<FockDensityMatrix> rho_ab_, rho_ad_;
  nlohmann::json summary_ = nlohmann::json::object();
  std::string convergence_error_;
};

}  // namespace

RunResult run(const RunConfig& config, Experiment experiment) {
  validate_for(config, experiment);
  RunConfig cfg = config;
  if (experiment == Experiment::tomo) cfg.tomography.enabled = true;
  return Runner(cfg, experiment).go();
}

}  // namespace hybridswap
