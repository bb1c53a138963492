#include "hybridswap/tomography.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "hybridswap/entanglement.hpp"
#include "hybridswap/quadrature.hpp"

namespace hybridswap {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;
constexpr double kPdfNormTolerance = 1e-4;

double wrap_phase(double theta) {
  double t = std::fmod(theta, kTwoPi);
  if (t < 0) t += kTwoPi;
  if (t >= kTwoPi) t = 0.0;
  return t;
}

double trapezoid(const std::vector<double>& xs, const std::vector<double>& ys) {
  double s = 0;
  for (std::size_t i = 1; i < xs.size(); ++i) s += 0.5 * (xs[i] - xs[i - 1]) * (ys[i] + ys[i - 1]);
  return s;
}

// Conjugated number-basis wavefunctions: v_n = <n|x_theta>.
CVector bra_weights(int max_n, double x, double theta) { return quadrature_wavefunctions(max_n, x, theta).conjugate(); }

// Rows are grid points: row j holds bra_weights(max_n, grid[j], theta).
CMatrix bra_table(int max_n, const std::vector<double>& grid, double theta) {
  CMatrix out(static_cast<Eigen::Index>(grid.size()), max_n + 1);
  for (std::size_t j = 0; j < grid.size(); ++j) out.row(static_cast<Eigen::Index>(j)) = bra_weights(max_n, grid[j], theta).transpose();
  return out;
}

// v_j^dagger sigma v_j for every row v_j of V, clipped at zero.
std::vector<double> expectation_values(const CMatrix& V, const CMatrix& sigma) {
  const CMatrix left = V.conjugate() * sigma;
  std::vector<double> out(static_cast<std::size_t>(V.rows()));
  for (Eigen::Index j = 0; j < V.rows(); ++j) out[static_cast<std::size_t>(j)] = std::max(0.0, left.row(j).cwiseProduct(V.row(j)).sum().real());
  return out;
}

// Column n d1 + n' holds v_j^dagger rho_{n n'} v_j for every row v_j of V2,
// where rho_{n n'} is the mode-2 block <n|rho|n'>.
CMatrix conditional_table(const CMatrix& rho, int d1, int d2, const CMatrix& V2) {
  CMatrix out(V2.rows(), d1 * d1);
  const CMatrix V2c = V2.conjugate();
  for (int n = 0; n < d1; ++n) {
    for (int np = 0; np < d1; ++np) {
      const CMatrix left = V2c * rho.block(n * d2, np * d2, d2, d2);
      out.col(n * d1 + np) = left.cwiseProduct(V2).rowwise().sum();
    }
  }
  return out;
}

void check_two_mode(const FockDensityMatrix& rho, const char* what) {
  if (rho.modes() != 2) throw std::invalid_argument(std::string(what) + ": two-mode state expected");
}

}  // namespace

std::vector<PhaseSetting> relative_phase_schedule(int steps, double phase_sum) {
  if (steps < 1) throw std::invalid_argument("relative_phase_schedule: need at least one step");
  std::vector<PhaseSetting> out;
  for (int k = 0; k < steps; ++k) {
    const double rel = std::numbers::pi * k / steps;
    out.push_back(PhaseSetting{wrap_phase((phase_sum + rel) / 2), wrap_phase((phase_sum - rel) / 2)});
  }
  return out;
}

Eigen::MatrixXd homodyne_pdf(const FockDensityMatrix& rho, double theta1, double theta2, const std::vector<double>& grid1,
                             const std::vector<double>& grid2) {
  check_two_mode(rho, "homodyne_pdf");
  if (grid1.size() < 2 || grid2.size() < 2) throw std::invalid_argument("homodyne_pdf: grids need at least two points");
  const int c1 = rho.cutoff(0), c2 = rho.cutoff(1);
  Eigen::MatrixXd pdf(grid1.size(), grid2.size());
  const CMatrix F = conditional_table(rho.data(), c1 + 1, c2 + 1, bra_table(c2, grid2, theta2));
  const CMatrix V1 = bra_table(c1, grid1, theta1);
  CMatrix W((c1 + 1) * (c1 + 1), static_cast<Eigen::Index>(grid1.size()));
  for (std::size_t i = 0; i < grid1.size(); ++i) {
    const CVector v = V1.row(static_cast<Eigen::Index>(i)).transpose();
    W.col(static_cast<Eigen::Index>(i)) = (v.conjugate() * v.transpose()).reshaped<Eigen::RowMajor>();
  }
  pdf = (F * W).real().transpose().cwiseMax(0.0);
  std::vector<double> rows(grid1.size());
  for (std::size_t i = 0; i < grid1.size(); ++i) {
    const Eigen::VectorXd row = pdf.row(static_cast<Eigen::Index>(i));
    rows[i] = trapezoid(grid2, std::vector<double>(row.data(), row.data() + row.size()));
  }
  const double total = trapezoid(grid1, rows);
  const double expected = rho.trace().real();
  if (std::abs(total - expected) > kPdfNormTolerance) {
    std::ostringstream os;
    os << "homodyne_pdf: density integrates to " << total << " instead of " << expected
       << "; widen or refine the grid";
    throw std::invalid_argument(os.str());
  }
  return pdf;
}

TomoDataset sample_homodyne(const FockDensityMatrix& rho, const std::vector<PhaseSetting>& schedule, std::size_t n,
                            std::uint64_t seed, const SamplingOptions& options) {
  check_two_mode(rho, "sample_homodyne");
  if (n < 1) throw std::invalid_argument("sample_homodyne: need at least one sample");
  if (schedule.empty()) throw std::invalid_argument("sample_homodyne: empty phase schedule");
  const int c1 = rho.cutoff(0), c2 = rho.cutoff(1);
  const double width = quadrature_half_width(std::max(mean_photon_number(rho, 0), mean_photon_number(rho, 1)));
  const auto grid = uniform_grid(width, options.grid_points);
  const auto marginal = partial_trace(rho, {0});

  TomoDataset data;
  data.seed = seed;
  data.schedule = schedule;
  data.samples.reserve(n);
  const std::size_t per = n / schedule.size();
  const std::size_t extra = n % schedule.size();
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    const auto [theta1, theta2] = schedule[k];
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(k), 0x746f6d6fu};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    const GridSampler first(grid, expectation_values(bra_table(c1, grid, theta1), marginal.data()));
    if (std::abs(first.total() - 1.0) > kPdfNormTolerance) {
      throw std::invalid_argument("sample_homodyne: sampling grid does not capture the marginal density");
    }
    // Conditional density of x2 given x1 is sum_{n,n'} conj(v_n) v_n' F_{n n'}(x2)
    // with F tabulated once per setting.
    const CMatrix V2 = bra_table(c2, grid, theta2);
    const CMatrix F = conditional_table(rho.data(), c1 + 1, c2 + 1, V2);

    const std::size_t count = per + (k < extra ? 1 : 0);
    std::vector<double> density(grid.size());
    for (std::size_t s = 0; s < count; ++s) {
      const double x1 = first.sample(uniform(rng));
      const CVector v = bra_weights(c1, x1, theta1);
      const CVector w = (v.conjugate() * v.transpose()).reshaped<Eigen::RowMajor>();
      const Eigen::VectorXd p = (F * w).real();
      for (std::size_t j = 0; j < grid.size(); ++j) density[j] = std::max(0.0, p(static_cast<Eigen::Index>(j)));
      const double x2 = GridSampler(grid, density).sample(uniform(rng));
      data.samples.push_back(QuadratureSample{theta1, theta2, x1, x2});
    }
  }
  return data;
}

// ---------------------------------------------------------------------------

namespace {

struct BinnedAxis {
  double lo = 0;
  double width = 0;
  int bins = 0;
  int index(double x) const { return std::clamp(static_cast<int>(std::floor((x - lo) / width)), 0, bins - 1); }
};

BinnedAxis make_axis(const std::vector<double>& xs, int bins, double sigmas) {
  double mean = 0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0;
  for (double x : xs) var += (x - mean) * (x - mean);
  const double sd = xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
  const auto [mn, mx] = std::minmax_element(xs.begin(), xs.end());
  // Fall back to the vacuum width when the data has no spread.
  const double spread = sd > 0 ? sd : std::sqrt(0.5);
  const double lo = std::min(mean - sigmas * spread, *mn);
  const double hi = std::max(mean + sigmas * spread, *mx);
  const double pad = 1e-9 * std::max(1.0, hi - lo);
  return BinnedAxis{lo - pad, (hi - lo + 2 * pad) / bins, bins};
}

// Number-basis matrix of the bin projector: e^{i(n-m) theta} int_bin psi_n psi_m dx.
CMatrix bin_povm(int cutoff, double theta, double a, double b) {
  using Rule = boost::math::quadrature::gauss<double, 10>;
  const int d = cutoff + 1;
  Eigen::MatrixXd integral = Eigen::MatrixXd::Zero(d, d);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  const auto& nodes = Rule::abscissa();
  const auto& weights = Rule::weights();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (int sign : {-1, 1}) {
      if (nodes[i] == 0.0 && sign < 0) continue;
      const Eigen::VectorXd psi = hermite_functions(cutoff, mid + sign * half * nodes[i]);
      integral += weights[i] * half * psi * psi.transpose();
    }
  }
  CMatrix out(d, d);
  for (int n = 0; n < d; ++n) {
    for (int m = 0; m < d; ++m) out(n, m) = std::polar(integral(n, m), (n - m) * theta);
  }
  return out;
}

struct Cell {
  int b2;
  double count;
};

struct PhaseData {
  std::vector<CMatrix> povm1;           // per used b1
  std::vector<std::vector<Cell>> rows;  // per used b1: (index into povm2, count)
  std::vector<CMatrix> povm2;           // per used b2
};

class BinnedLikelihood {
 public:
  BinnedLikelihood(const TomoDataset& data, const MleOptions& opt) : d_(opt.cutoff + 1) {
    std::map<std::pair<double, double>, std::vector<const QuadratureSample*>> groups;
    for (const auto& s : data.samples) groups[{s.theta1, s.theta2}].push_back(&s);
    for (const auto& [phases, samples] : groups) {
      std::vector<double> xs1, xs2;
      for (const auto* s : samples) {
        xs1.push_back(s->x1);
        xs2.push_back(s->x2);
      }
      const BinnedAxis ax1 = make_axis(xs1, opt.bins, opt.span_sigmas);
      const BinnedAxis ax2 = make_axis(xs2, opt.bins, opt.span_sigmas);
      std::map<int, std::map<int, double>> counts;
      for (const auto* s : samples) counts[ax1.index(s->x1)][ax2.index(s->x2)] += 1.0;
      PhaseData pd;
      std::map<int, int> used2;
      for (const auto& [b1, row] : counts) {
        pd.povm1.push_back(bin_povm(opt.cutoff, phases.first, ax1.lo + b1 * ax1.width, ax1.lo + (b1 + 1) * ax1.width));
        std::vector<Cell> cells;
        for (const auto& [b2, c] : row) {
          auto it = used2.find(b2);
          if (it == used2.end()) {
            it = used2.emplace(b2, static_cast<int>(pd.povm2.size())).first;
            pd.povm2.push_back(bin_povm(opt.cutoff, phases.second, ax2.lo + b2 * ax2.width, ax2.lo + (b2 + 1) * ax2.width));
          }
          cells.push_back(Cell{it->second, c});
        }
        pd.rows.push_back(std::move(cells));
      }
      total_ += static_cast<double>(samples.size());
      phases_.push_back(std::move(pd));
    }
  }

  /// Log-likelihood at rho and, if requested, R(rho) / N.
  double evaluate(const CMatrix& rho, CMatrix* R) const {
    const int d = d_;
    if (R) *R = CMatrix::Zero(d * d, d * d);
    double loglik = 0;
    CMatrix W(d, d);
    for (const auto& pd : phases_) {
      for (std::size_t i = 0; i < pd.povm1.size(); ++i) {
        const CMatrix& p1 = pd.povm1[i];
        // sigma[m, m'] = sum_{n, n'} p1[n', n] rho[(n, m), (n', m')]
        CMatrix sigma = CMatrix::Zero(d, d);
        for (int n = 0; n < d; ++n) {
          for (int np = 0; np < d; ++np) sigma += p1(np, n) * rho.block(n * d, np * d, d, d);
        }
        W.setZero();
        for (const auto& cell : pd.rows[i]) {
          const CMatrix& p2 = pd.povm2[static_cast<std::size_t>(cell.b2)];
          const double p = std::max((sigma.cwiseProduct(p2.transpose())).sum().real(), 1e-300);
          loglik += cell.count * std::log(p);
          if (R) W += (cell.count / p) * p2;
        }
        if (R) {
          for (int n = 0; n < d; ++n) {
            for (int np = 0; np < d; ++np) R->block(n * d, np * d, d, d) += p1(n, np) * W;
          }
        }
      }
    }
    if (R) *R /= total_;
    return loglik;
  }

  int dim() const { return d_ * d_; }

 private:
  int d_;
  double total_ = 0;
  std::vector<PhaseData> phases_;
};

CMatrix sandwich(const CMatrix& A, const CMatrix& rho) {
  CMatrix out = A * rho * A.adjoint();
  out = 0.5 * (out + out.adjoint());
  return out / out.trace().real();
}

}  // namespace

MleResult mle_reconstruct(const TomoDataset& data, const MleOptions& opt) {
  if (data.samples.empty()) throw std::invalid_argument("mle_reconstruct: empty dataset");
  if (opt.cutoff < 0 || opt.bins < 1 || opt.max_iter < 0 || !(opt.tol > 0)) {
    throw std::invalid_argument("mle_reconstruct: invalid options");
  }
  const BinnedLikelihood lik(data, opt);
  const int n = lik.dim();
  const CMatrix id = CMatrix::Identity(n, n);
  CMatrix rho = id / static_cast<double>(n);
  CMatrix R;
  double L = lik.evaluate(rho, &R);

  MleDiagnostics diag;
  diag.loglik_history.push_back(L);
  for (int it = 0; it < opt.max_iter; ++it) {
    CMatrix R_next;
    CMatrix candidate = sandwich(R, rho);
    double L_next = lik.evaluate(candidate, &R_next);
    if (L_next < L) {
      // Diluted step: small enough eps always raises the likelihood.
      ++diag.diluted_steps;
      double eps = 1.0;
      while (eps > 1e-12) {
        candidate = sandwich(id + eps * R, rho);
        L_next = lik.evaluate(candidate, &R_next);
        if (L_next >= L) break;
        eps /= 2;
      }
      if (L_next < L) {
        // No ascent direction left at working precision.
        diag.converged = true;
        break;
      }
    }
    const double change = std::abs(L_next - L) / std::max(std::abs(L), 1e-300);
    rho = std::move(candidate);
    R = std::move(R_next);
    L = L_next;
    diag.loglik_history.push_back(L);
    diag.iterations = it + 1;
    if (change < opt.tol) {
      diag.converged = true;
      break;
    }
  }
  diag.final_loglik = L;
  return MleResult{FockDensityMatrix::uniform(2, opt.cutoff, rho), std::move(diag)};
}

std::vector<double> bootstrap(const TomoDataset& data, const MleOptions& options, int resamples, std::uint64_t seed,
                              const std::function<double(const FockDensityMatrix&)>& statistic) {
  if (resamples < 1) throw std::invalid_argument("bootstrap: need at least one resample");
  if (data.samples.empty()) throw std::invalid_argument("bootstrap: empty dataset");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(resamples));
  for (int b = 0; b < resamples; ++b) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(b), 0x626f6f74u};
    std::mt19937_64 rng(seq);
    std::uniform_int_distribution<std::size_t> pick(0, data.samples.size() - 1);
    TomoDataset copy;
    copy.seed = data.seed;
    copy.schedule = data.schedule;
    copy.samples.reserve(data.samples.size());
    for (std::size_t i = 0; i < data.samples.size(); ++i) copy.samples.push_back(data.samples[pick(rng)]);
    out.push_back(statistic(mle_reconstruct(copy, options).rho));
  }
  return out;
}

void write_dataset_csv(std::ostream& os, const TomoDataset& data) {
  os << "theta1,theta2,x1,x2\n";
  for (const auto& s : data.samples) {
    os << format_double(s.theta1) << ',' << format_double(s.theta2) << ',' << format_double(s.x1) << ','
       << format_double(s.x2) << '\n';
  }
}

TomoDataset read_dataset_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "theta1,theta2,x1,x2") {
    throw std::invalid_argument("read_dataset_csv: expected header theta1,theta2,x1,x2");
  }
  TomoDataset data;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    double v[4];
    int k = 0;
    while (std::getline(row, field, ',')) {
      if (k >= 4) break;
      char* end = nullptr;
      v[k] = std::strtod(field.c_str(), &end);
      if (end == field.c_str() || *end != '\0') break;
      ++k;
    }
    if (k != 4 || row.rdbuf()->in_avail() > 0) {
      throw std::invalid_argument("read_dataset_csv: malformed row at line " + std::to_string(lineno));
    }
    data.samples.push_back(QuadratureSample{v[0], v[1], v[2], v[3]});
  }
  return data;
}

nlohmann::json dataset_sidecar(const TomoDataset& data) {
  nlohmann::json schedule = nlohmann::json::array();
  for (const auto& p : data.schedule) schedule.push_back({p.theta1, p.theta2});
  return nlohmann::json{{"seed", data.seed}, {"n", data.samples.size()}, {"schedule", schedule}, {"source", data.source}};
}

nlohmann::json to_json(const MleDiagnostics& d) {
  return nlohmann::json{{"iterations", d.iterations},
                        {"final_loglik", d.final_loglik},
                        {"converged", d.converged},
                        {"diluted_steps", d.diluted_steps}};
}

}  // namespace hybridswap
