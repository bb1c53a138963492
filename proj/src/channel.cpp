#include "hybridswap/channel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "hybridswap/errors.hpp"
#include "hybridswap/quadrature.hpp"
#include "hybridswap/state_prep.hpp"
#include "hybridswap/tolerances.hpp"

namespace hybridswap {

void ChannelSpec::validate() const {
  auto in_unit = [](double v) { return v > 0.0 && v <= 1.0; };
  if (!(r >= 0.0)) throw std::invalid_argument("ChannelSpec: squeezing r must be >= 0");
  if (!(g >= 0.0)) throw std::invalid_argument("ChannelSpec: gain g must be >= 0");
  if (!in_unit(pre_loss) || !in_unit(post_loss) || !in_unit(resource_loss)) {
    throw std::invalid_argument("ChannelSpec: loss transmissivities must lie in (0, 1]");
  }
}

double teleportation_noise(double r, double g, double resource_loss) {
  const double ideal = ((1 + g) * (1 + g) * std::exp(-2 * r) + (1 - g) * (1 - g) * std::exp(2 * r)) / 4.0;
  return resource_loss * ideal + (1.0 - resource_loss) * (1.0 + g * g) / 2.0;
}

GaussianChannelParams channel_params(const ChannelSpec& spec) {
  spec.validate();
  GaussianChannelParams p;
  p.amplitude_gain = spec.g * std::sqrt(spec.pre_loss * spec.post_loss);
  const double inner = spec.g * spec.g * (1.0 - spec.pre_loss) / 2.0 + teleportation_noise(spec.r, spec.g, spec.resource_loss);
  p.added_noise = spec.post_loss * inner + (1.0 - spec.post_loss) / 2.0;

  const double gain2 = p.amplitude_gain * p.amplitude_gain;
  if (p.added_noise < std::abs(gain2 - 1.0) / 2.0 - 1e-12) {
    std::ostringstream os;
    os << "channel_params: added noise " << p.added_noise << " below the quantum limit for gain " << p.amplitude_gain;
    throw InvariantViolation(os.str());
  }
  double G = (2.0 * p.added_noise + 1.0 + gain2) / 2.0;
  if (std::abs(G - 1.0) <= 1e-12) G = 1.0;
  G = std::max(G, 1.0);
  double eta = gain2 / G;
  if (eta > 1.0 && eta - 1.0 <= 1e-12) eta = 1.0;
  p.dilation = Dilation{eta, G};
  return p;
}

// ---------------------------------------------------------------------------

SingleModeChannel SingleModeChannel::from_kraus(int in_cutoff, int out_cutoff, std::vector<CMatrix> kraus) {
  const int din = in_cutoff + 1;
  const int dout = out_cutoff + 1;
  CMatrix transfer = CMatrix::Zero(dout * dout, din * din);
  for (const auto& K : kraus) {
    if (K.rows() != dout || K.cols() != din) throw std::invalid_argument("SingleModeChannel: Kraus shape mismatch");
    const CMatrix Kc = K.conjugate();
    for (int m = 0; m < dout; ++m) {
      for (int n = 0; n < din; ++n) {
        const cplx k = K(m, n);
        if (k == 0.0) continue;
        transfer.block(m * dout, n * din, dout, din) += k * Kc;
      }
    }
  }
  return SingleModeChannel{in_cutoff, out_cutoff, std::move(kraus), std::move(transfer)};
}

double SingleModeChannel::completeness_error() const {
  CMatrix sum = CMatrix::Zero(in_cutoff + 1, in_cutoff + 1);
  for (const auto& K : kraus) sum += K.adjoint() * K;
  return (sum - CMatrix::Identity(in_cutoff + 1, in_cutoff + 1)).cwiseAbs().maxCoeff();
}

SingleModeChannel loss_channel(double eta, int cutoff) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("loss_channel: transmissivity must lie in [0, 1]");
  const int d = cutoff + 1;
  std::vector<CMatrix> kraus(static_cast<std::size_t>(d), CMatrix::Zero(d, d));
  const FockBasis pair = FockBasis::uniform(2, cutoff);
  for (int n = 0; n <= cutoff; ++n) {
    const int occ[] = {n, 0};
    const FockKet out = beam_splitter(FockKet::number_state(pair, occ), 0, 1, eta);
    for (int k = 0; k <= n; ++k) kraus[static_cast<std::size_t>(k)](n - k, n) = out.amplitude({n - k, k});
  }
  return SingleModeChannel::from_kraus(cutoff, cutoff, std::move(kraus));
}

SingleModeChannel amplifier_channel(double G, int in_cutoff, int out_cutoff) {
  if (out_cutoff < in_cutoff) throw std::invalid_argument("amplifier_channel: output cutoff below input cutoff");
  const int din = in_cutoff + 1;
  const int dout = out_cutoff + 1;
  const int max_k = out_cutoff;
  std::vector<CMatrix> kraus(static_cast<std::size_t>(max_k + 1), CMatrix::Zero(dout, din));
  for (int n = 0; n <= in_cutoff; ++n) {
    const Eigen::VectorXd column = two_mode_squeeze_vacuum_ancilla(n, G, out_cutoff - n);
    for (int k = 0; n + k <= out_cutoff; ++k) kraus[static_cast<std::size_t>(k)](n + k, n) = column(k);
  }
  // Drop Kraus operators that are identically zero (G == 1).
  std::erase_if(kraus, [](const CMatrix& K) { return K.cwiseAbs().maxCoeff() == 0.0; });
  return SingleModeChannel::from_kraus(in_cutoff, out_cutoff, std::move(kraus));
}

int amplifier_output_cutoff(double G, int in_cutoff) {
  if (!(G >= 1.0)) throw std::invalid_argument("amplifier_output_cutoff: gain must be >= 1");
  if (G == 1.0) return in_cutoff;
  const int floor_cutoff = in_cutoff + static_cast<int>(std::ceil(4.0 * (G - 1.0) * (in_cutoff + 1)));
  // The largest input number state has the heaviest tail.
  const Eigen::VectorXd column = two_mode_squeeze_vacuum_ancilla(in_cutoff, G, kMaxDilatedCutoff - in_cutoff);
  double kept = 0.0;
  for (int k = 0; k < column.size(); ++k) {
    kept += column(k) * column(k);
    if (1.0 - kept <= tol::kDilationTail) return std::max(floor_cutoff, in_cutoff + k);
  }
  std::ostringstream os;
  os << "amplifier_output_cutoff: gain " << G << " needs more than " << kMaxDilatedCutoff
     << " photons to keep the truncation error below " << tol::kDilationTail;
  throw std::invalid_argument(os.str());
}

SingleModeChannel compose(const SingleModeChannel& second, const SingleModeChannel& first) {
  if (second.in_cutoff != first.out_cutoff) throw std::invalid_argument("compose: cutoff mismatch between channels");
  std::vector<CMatrix> kraus;
  kraus.reserve(second.kraus.size() * first.kraus.size());
  for (const auto& b : second.kraus) {
    for (const auto& a : first.kraus) kraus.push_back(b * a);
  }
  return SingleModeChannel{first.in_cutoff, second.out_cutoff, std::move(kraus), second.transfer * first.transfer};
}

SingleModeChannel gaussian_channel(const GaussianChannelParams& params, int in_cutoff) {
  const auto loss = loss_channel(params.dilation.eta, in_cutoff);
  if (params.dilation.G == 1.0) return loss;
  const int out_cutoff = amplifier_output_cutoff(params.dilation.G, in_cutoff);
  return compose(amplifier_channel(params.dilation.G, in_cutoff, out_cutoff), loss);
}

FockDensityMatrix apply_single_mode(const FockDensityMatrix& rho, int mode, const SingleModeChannel& channel) {
  const FockBasis& in = rho.basis();
  if (mode < 0 || mode >= in.modes()) throw std::invalid_argument("apply_single_mode: mode out of range");
  if (in.cutoff(mode) != channel.in_cutoff) throw std::invalid_argument("apply_single_mode: cutoff mismatch");
  std::vector<int> out_cutoffs = in.cutoffs();
  out_cutoffs[static_cast<std::size_t>(mode)] = channel.out_cutoff;
  FockBasis out(out_cutoffs);

  // Spectator configurations: offsets in the input and output bases.
  std::vector<std::size_t> base_in;
  std::vector<std::size_t> base_out;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in.occupation(i, mode) != 0) continue;
    base_in.push_back(i);
    std::size_t j = 0;
    for (int m = 0; m < in.modes(); ++m) j += static_cast<std::size_t>(in.occupation(i, m)) * out.stride(m);
    base_out.push_back(j);
  }
  const auto S = static_cast<Eigen::Index>(base_in.size());
  const int din = channel.in_cutoff + 1;
  const int dout = channel.out_cutoff + 1;
  const std::size_t sin = in.stride(mode);
  const std::size_t sout = out.stride(mode);

  CMatrix gathered(din * din, S * S);
  for (Eigen::Index a = 0; a < S; ++a) {
    for (Eigen::Index b = 0; b < S; ++b) {
      for (int n = 0; n < din; ++n) {
        for (int np = 0; np < din; ++np) {
          gathered(n * din + np, a * S + b) = rho.data()(static_cast<Eigen::Index>(base_in[a] + n * sin),
                                                         static_cast<Eigen::Index>(base_in[b] + np * sin));
        }
      }
    }
  }
  const CMatrix mapped = channel.transfer * gathered;
  const auto n_out = static_cast<Eigen::Index>(out.size());
  CMatrix data = CMatrix::Zero(n_out, n_out);
  for (Eigen::Index a = 0; a < S; ++a) {
    for (Eigen::Index b = 0; b < S; ++b) {
      for (int m = 0; m < dout; ++m) {
        for (int mp = 0; mp < dout; ++mp) {
          data(static_cast<Eigen::Index>(base_out[a] + m * sout), static_cast<Eigen::Index>(base_out[b] + mp * sout)) =
              mapped(m * dout + mp, a * S + b);
        }
      }
    }
  }
  data = 0.5 * (data + data.adjoint());
  return FockDensityMatrix(std::move(out), std::move(data), rho.normalized());
}

FockDensityMatrix apply_loss(const FockDensityMatrix& rho, int mode, double eta) {
  if (mode < 0 || mode >= rho.modes()) throw std::invalid_argument("apply_loss: mode out of range");
  if (eta == 1.0) return rho;
  return apply_single_mode(rho, mode, loss_channel(eta, rho.cutoff(mode)));
}

FockDensityMatrix apply_channel(const FockDensityMatrix& rho, int mode, const ChannelSpec& spec) {
  if (!rho.normalized()) throw std::invalid_argument("apply_channel: input state must be normalized");
  if (mode < 0 || mode >= rho.modes()) throw std::invalid_argument("apply_channel: mode out of range");
  const auto params = channel_params(spec);
  return apply_single_mode(rho, mode, gaussian_channel(params, rho.cutoff(mode)));
}

// ---------------------------------------------------------------------------

namespace {

// One eigencomponent of the input after the Bell-measurement beam splitter,
// laid out as rows n_a (measured in x) and columns (s, m_c, k_d).
struct BsmComponent {
  double weight = 0;
  CMatrix phi;
  std::unique_ptr<GridSampler> x_sampler;
};

class TeleportSimulator {
 public:
  TeleportSimulator(const FockDensityMatrix& rho, int mode, const ChannelSpec& spec, const McOptions& opt)
      : mode_(mode), gain_(spec.g), opt_(opt) {
    if (opt.cutoff < 1) throw std::invalid_argument("mc_teleport_oracle: cutoff must be >= 1");
    if (opt.grid_points < 3) throw std::invalid_argument("mc_teleport_oracle: grid needs >= 3 points");
    if (spec.resource_loss != 1.0) {
      throw std::invalid_argument("mc_teleport_oracle: resource loss is not modeled by the explicit simulation");
    }
    if (rho.cutoff(mode) > opt.cutoff) throw std::invalid_argument("mc_teleport_oracle: input cutoff exceeds oracle cutoff");
    W_ = opt.cutoff;
    D_ = opt.cutoff + opt.displacement_headroom;

    const FockDensityMatrix input = apply_loss(rho, mode, spec.pre_loss);
    for (int m = 0; m < input.modes(); ++m) {
      if (m != mode) spectator_cutoffs_.push_back(input.cutoff(m));
    }
    S_ = 1;
    for (int c : spectator_cutoffs_) S_ *= c + 1;

    // Resource amplitudes and the Bell-measurement beam splitter.
    const FockKet resource = tmsv(TmsvSpec{spec.r, W_});
    Eigen::VectorXd t(W_ + 1);
    for (int n = 0; n <= W_; ++n) t(n) = resource.amplitude({n, n}).real();
    const CMatrix U = beam_splitter_matrix(W_, W_, 0.5, 0.0);

    const auto eig = hermitian_eigen(input.data());
    const int d = W_ + 1;
    Eigen::VectorXd photons_c = Eigen::VectorXd::Zero(d);
    double total_weight = 0;
    for (Eigen::Index e = 0; e < eig.values.size(); ++e) {
      const double lambda = eig.values(e);
      if (lambda <= 1e-13) continue;
      // V[s, n]: eigenvector split into spectator index and input-mode occupation.
      CMatrix V = CMatrix::Zero(S_, d);
      for (std::size_t i = 0; i < input.dim(); ++i) {
        const int n = input.basis().occupation(i, mode);
        V(spectator_index(input.basis(), i), n) = eig.vectors(static_cast<Eigen::Index>(i), e);
      }
      BsmComponent comp;
      comp.weight = lambda;
      comp.phi = CMatrix::Zero(d, S_ * d * d);
      for (int na = 0; na < d; ++na) {
        for (int mc = 0; mc < d; ++mc) {
          for (int n = 0; n < d; ++n) {
            for (int k = 0; k < d; ++k) {
              const cplx u = U(na * d + mc, n * d + k);
              if (u == 0.0) continue;
              for (Eigen::Index s = 0; s < S_; ++s) comp.phi(na, (s * d + mc) * d + k) += u * V(s, n) * t(k);
            }
          }
        }
      }
      const CMatrix reduced_a = comp.phi * comp.phi.adjoint();
      double mean_a = 0;
      for (int n = 0; n < d; ++n) mean_a += n * reduced_a(n, n).real();
      mean_a /= reduced_a.trace().real();
      const auto xs = uniform_grid(quadrature_half_width(mean_a), opt.grid_points);
      const Eigen::MatrixXd psi = hermite_function_table(W_, xs);
      const Eigen::MatrixXd re = reduced_a.real();
      std::vector<double> pdf(xs.size());
      for (std::size_t j = 0; j < xs.size(); ++j) {
        const auto row = psi.row(static_cast<Eigen::Index>(j));
        pdf[j] = row * re * row.transpose();
      }
      comp.x_sampler = std::make_unique<GridSampler>(xs, std::move(pdf));
      for (Eigen::Index c = 0; c < S_ * d * d; ++c) {
        const int mc = static_cast<int>((c / d) % d);
        photons_c(mc) += lambda * comp.phi.col(c).squaredNorm();
      }
      total_weight += lambda;
      components_.push_back(std::move(comp));
    }
    if (components_.empty()) throw std::invalid_argument("mc_teleport_oracle: input state has no positive weight");
    for (auto& c : components_) cumulative_.push_back((cumulative_.empty() ? 0.0 : cumulative_.back()) + c.weight / total_weight);

    double mean_c = 0;
    for (int n = 0; n < d; ++n) mean_c += n * photons_c(n);
    mean_c /= photons_c.sum();
    p_grid_ = uniform_grid(quadrature_half_width(mean_c), opt.grid_points);
    const Eigen::MatrixXd psi_p = hermite_function_table(W_, p_grid_);
    p_wave_.resize(psi_p.rows(), psi_p.cols());
    for (int m = 0; m < d; ++m) p_wave_.col(m) = psi_p.col(m).cast<cplx>() * std::pow(cplx(0, -1), m);

    post_loss_ = spec.post_loss;
  }

  Eigen::Index spectator_dim() const { return S_; }

  /// Unnormalized spectator-and-output ket (s, k) for outcome (x, p) of one component.
  CVector conditional(const BsmComponent& comp, double x, double p, CMatrix* X_out = nullptr) const {
    const int d = W_ + 1;
    const Eigen::VectorXd psi = hermite_functions(W_, x);
    const Eigen::RowVectorXcd chi = psi.transpose().cast<cplx>() * comp.phi;
    // X[m, (s, k)]
    CMatrix X(d, S_ * d);
    for (Eigen::Index s = 0; s < S_; ++s) {
      for (int m = 0; m < d; ++m) {
        for (int k = 0; k < d; ++k) X(m, s * d + k) = chi((s * d + m) * d + k);
      }
    }
    const CVector wave = quadrature_wavefunctions(W_, p, std::numbers::pi / 2);
    CVector out = X.transpose() * wave;
    if (X_out) *X_out = std::move(X);
    return out;
  }

  /// Displaces the output mode of an (s, k) ket and returns its projector on (spectators, output).
  CMatrix displaced_projector(const CVector& ket, double x, double p) const {
    const int d = W_ + 1;
    std::vector<int> cutoffs = spectator_cutoffs_;
    cutoffs.push_back(D_);
    FockBasis basis(cutoffs);
    CVector wide = CVector::Zero(static_cast<Eigen::Index>(basis.size()));
    for (Eigen::Index s = 0; s < S_; ++s) {
      for (int k = 0; k < d; ++k) wide(s * (D_ + 1) + k) = ket(s * d + k);
    }
    const FockKet shifted = displacement(FockKet(basis, wide, false), basis.modes() - 1, gain_ * cplx(x, p));
    return shifted.amplitudes() * shifted.amplitudes().adjoint();
  }

  CMatrix trial(std::uint64_t index) const {
    std::seed_seq seq{static_cast<std::uint32_t>(opt_.seed), static_cast<std::uint32_t>(opt_.seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const double pick = uniform(rng);
    const auto which = static_cast<std::size_t>(
        std::min<std::ptrdiff_t>(std::upper_bound(cumulative_.begin(), cumulative_.end(), pick) - cumulative_.begin(),
                                 static_cast<std::ptrdiff_t>(components_.size()) - 1));
    const BsmComponent& comp = components_[which];
    const double x = comp.x_sampler->sample(uniform(rng));

    CMatrix X;
    conditional(comp, x, 0.0, &X);
    const CMatrix Y = p_wave_ * X;
    std::vector<double> pdf(p_grid_.size());
    for (Eigen::Index j = 0; j < Y.rows(); ++j) pdf[static_cast<std::size_t>(j)] = Y.row(j).squaredNorm();
    const double p = GridSampler(p_grid_, std::move(pdf)).sample(uniform(rng));

    CVector ket = conditional(comp, x, p);
    ket /= ket.norm();
    return displaced_projector(ket, x, p);
  }

  FockDensityMatrix finish(CMatrix sum) const {
    std::vector<int> cutoffs = spectator_cutoffs_;
    cutoffs.push_back(D_);
    sum = 0.5 * (sum + sum.adjoint());
    FockDensityMatrix out(FockBasis(cutoffs), std::move(sum), true);
    // Move the output mode from the last slot back to `mode_`.
    std::vector<int> order;
    const int n = out.modes();
    for (int k = 0, s = 0; k < n; ++k) order.push_back(k == mode_ ? n - 1 : s++);
    out = permute_modes(out, order);
    return apply_loss(out, mode_, post_loss_);
  }

  const std::vector<BsmComponent>& components() const { return components_; }

 private:
  Eigen::Index spectator_index(const FockBasis& basis, std::size_t i) const {
    Eigen::Index s = 0;
    for (int m = 0; m < basis.modes(); ++m) {
      if (m == mode_) continue;
      s = s * basis.dim(m) + basis.occupation(i, m);
    }
    return s;
  }

  int mode_;
  double gain_;
  McOptions opt_;
  int W_ = 0;
  int D_ = 0;
  Eigen::Index S_ = 1;
  std::vector<int> spectator_cutoffs_;
  std::vector<BsmComponent> components_;
  std::vector<double> cumulative_;
  std::vector<double> p_grid_;
  CMatrix p_wave_;
  double post_loss_ = 1.0;
};

constexpr std::size_t kTrialBlock = 64;

}  // namespace

FockDensityMatrix mc_teleport_oracle(const FockDensityMatrix& rho, int mode, const ChannelSpec& spec,
                                     const McOptions& options) {
  spec.validate();
  if (options.n_trials < 1) throw std::invalid_argument("mc_teleport_oracle: n_trials must be >= 1");
  if (mode < 0 || mode >= rho.modes()) throw std::invalid_argument("mc_teleport_oracle: mode out of range");
  const TeleportSimulator sim(rho, mode, spec, options);

  const std::size_t n_blocks = (options.n_trials + kTrialBlock - 1) / kTrialBlock;
  const auto dim = sim.spectator_dim() * (options.cutoff + options.displacement_headroom + 1);
  std::vector<CMatrix> block_sums(n_blocks);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    try {
      for (std::size_t b = next++; b < n_blocks; b = next++) {
        CMatrix acc = CMatrix::Zero(dim, dim);
        const std::size_t end = std::min(options.n_trials, (b + 1) * kTrialBlock);
        for (std::size_t k = b * kTrialBlock; k < end; ++k) acc += sim.trial(k);
        block_sums[b] = std::move(acc);
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = n_blocks;
    }
  };
  unsigned workers = options.workers ? options.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n_blocks));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  CMatrix sum = CMatrix::Zero(dim, dim);
  for (const auto& block : block_sums) sum += block;
  sum /= static_cast<double>(options.n_trials);
  return sim.finish(std::move(sum));
}

FockDensityMatrix mc_teleport_conditional(const FockDensityMatrix& rho, int mode, const ChannelSpec& spec, double x_u,
                                          double p_v, const McOptions& options) {
  spec.validate();
  if (mode < 0 || mode >= rho.modes()) throw std::invalid_argument("mc_teleport_conditional: mode out of range");
  const TeleportSimulator sim(rho, mode, spec, options);
  const auto dim = sim.spectator_dim() * (options.cutoff + options.displacement_headroom + 1);
  CMatrix sum = CMatrix::Zero(dim, dim);
  for (const auto& comp : sim.components()) {
    const CVector ket = sim.conditional(comp, x_u, p_v);
    const double w = ket.squaredNorm();
    if (w == 0.0) continue;
    sum += comp.weight * sim.displaced_projector(ket, x_u, p_v);
  }
  const double tr = sum.trace().real();
  if (!(tr > 0)) throw std::invalid_argument("mc_teleport_conditional: outcome has zero probability density");
  return sim.finish(sum / tr);
}

}  // namespace hybridswap
