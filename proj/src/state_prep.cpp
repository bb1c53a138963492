#include "hybridswap/state_prep.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "hybridswap/errors.hpp"
#include "hybridswap/tolerances.hpp"

namespace hybridswap {

namespace {

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

double log_factorial(int n) { return std::lgamma(n + 1.0); }

void check_cutoff(int cutoff, const char* what) {
  if (cutoff < 0) throw std::invalid_argument(std::string(what) + ": cutoff must be nonnegative");
}

}  // namespace

FockKet split_photon_ket(double R, int cutoff) {
  if (!(R >= 0.0 && R <= 1.0)) throw std::invalid_argument("split_photon: reflectivity R must lie in [0, 1]");
  if (cutoff < 1) throw std::invalid_argument("split_photon: cutoff must be at least 1");
  FockBasis basis = FockBasis::uniform(2, cutoff);
  CVector v = CVector::Zero(static_cast<Eigen::Index>(basis.size()));
  v(static_cast<Eigen::Index>(basis.index(std::vector<int>{1, 0}))) = std::sqrt(1.0 - R);
  v(static_cast<Eigen::Index>(basis.index(std::vector<int>{0, 1}))) = std::sqrt(R);
  return FockKet(std::move(basis), std::move(v));
}

FockDensityMatrix split_photon(const SplitPhotonSpec& spec) {
  const FockKet ideal = split_photon_ket(spec.R, spec.cutoff);
  if (!spec.impurity) return FockDensityMatrix::pure(ideal);

  const Impurity& imp = *spec.impurity;
  if (imp.weight_ideal < 0 || imp.weight_vacuum < 0 || imp.weight_multiphoton < 0) {
    throw std::invalid_argument("split_photon: impurity weights must be nonnegative");
  }
  const double total = imp.weight_ideal + imp.weight_vacuum + imp.weight_multiphoton;
  if (std::abs(total - 1.0) > tol::kTrace) {
    std::ostringstream os;
    os << "split_photon: impurity weights sum to " << total << ", expected 1";
    throw std::invalid_argument(os.str());
  }
  const FockBasis& basis = ideal.basis();
  CMatrix rho = imp.weight_ideal * ideal.amplitudes() * ideal.amplitudes().adjoint();
  const auto vac = static_cast<Eigen::Index>(basis.index(std::vector<int>{0, 0}));
  rho(vac, vac) += imp.weight_vacuum;
  if (imp.multiphoton_state) {
    const auto& multi = *imp.multiphoton_state;
    if (multi.modes() != 2) throw std::invalid_argument("split_photon: multiphoton state must be two-mode");
    const auto fitted = resize(multi, basis.cutoffs());
    rho += imp.weight_multiphoton * fitted.data();
  } else {
    const auto both = static_cast<Eigen::Index>(basis.index(std::vector<int>{1, 1}));
    rho(both, both) += imp.weight_multiphoton;
  }
  return FockDensityMatrix(basis, std::move(rho));
}

FockKet tmsv(const TmsvSpec& spec) {
  if (!(spec.r >= 0.0)) throw std::invalid_argument("tmsv: squeezing parameter must be nonnegative");
  check_cutoff(spec.cutoff, "tmsv");
  const double lambda = std::tanh(spec.r);
  FockBasis basis = FockBasis::uniform(2, spec.cutoff);
  CVector v = CVector::Zero(static_cast<Eigen::Index>(basis.size()));
  const double prefactor = std::sqrt(1.0 - lambda * lambda);
  double power = 1.0;
  for (int n = 0; n <= spec.cutoff; ++n) {
    v(static_cast<Eigen::Index>(basis.index(std::vector<int>{n, n}))) = prefactor * power;
    power *= lambda;
  }
  v /= v.norm();
  return FockKet(std::move(basis), std::move(v));
}

double tmsv_truncated_tail(double r, int cutoff) {
  const double lambda2 = std::tanh(r) * std::tanh(r);
  return std::pow(lambda2, cutoff + 1);
}

CMatrix beam_splitter_matrix(int cutoff_i, int cutoff_j, double t, double phi) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("beam_splitter: transmissivity must lie in [0, 1]");
  check_cutoff(cutoff_i, "beam_splitter");
  check_cutoff(cutoff_j, "beam_splitter");
  const int di = cutoff_i + 1;
  const int dj = cutoff_j + 1;
  const double st = std::sqrt(t);
  const double sr = std::sqrt(1.0 - t);
  const cplx e_plus = std::polar(1.0, phi);
  const cplx e_minus = std::polar(1.0, -phi);
  CMatrix U = CMatrix::Zero(di * dj, di * dj);
  for (int n = 0; n < di; ++n) {
    for (int m = 0; m < dj; ++m) {
      // (a^dag)^n (b^dag)^m / sqrt(n! m!) with both creation operators rotated.
      for (int j = 0; j <= n; ++j) {
        for (int l = 0; l <= m; ++l) {
          const int out_a = j + l;
          const int out_b = (n - j) + (m - l);
          if (out_a > cutoff_i || out_b > cutoff_j) continue;
          const cplx coeff = binomial(n, j) * std::pow(st, j) * std::pow(sr * e_plus, n - j) * binomial(m, l) *
                             std::pow(-sr * e_minus, l) * std::pow(st, m - l);
          const double norm = std::exp(0.5 * (log_factorial(out_a) + log_factorial(out_b) - log_factorial(n) -
                                               log_factorial(m)));
          U(out_a * dj + out_b, n * dj + m) += coeff * norm;
        }
      }
    }
  }
  return U;
}

CMatrix apply_local_left(const CMatrix& m, const FockBasis& basis, std::span<const int> modes, const CMatrix& op) {
  std::size_t local_dim = 1;
  for (int mode : modes) {
    if (mode < 0 || mode >= basis.modes()) throw std::invalid_argument("apply_local_left: mode out of range");
    local_dim *= static_cast<std::size_t>(basis.dim(mode));
  }
  if (static_cast<std::size_t>(op.rows()) != local_dim || static_cast<std::size_t>(op.cols()) != local_dim) {
    throw std::invalid_argument("apply_local_left: operator dimension does not match the selected modes");
  }
  // Full-space offsets of each local configuration.
  std::vector<std::size_t> local_offset(local_dim, 0);
  for (std::size_t k = 0; k < local_dim; ++k) {
    std::size_t rem = k;
    for (int idx = static_cast<int>(modes.size()) - 1; idx >= 0; --idx) {
      const int mode = modes[static_cast<std::size_t>(idx)];
      const auto d = static_cast<std::size_t>(basis.dim(mode));
      local_offset[k] += (rem % d) * basis.stride(mode);
      rem /= d;
    }
  }
  CMatrix out = CMatrix::Zero(m.rows(), m.cols());
  CMatrix gathered(static_cast<Eigen::Index>(local_dim), m.cols());
  for (std::size_t base = 0; base < basis.size(); ++base) {
    bool is_base = true;
    for (int mode : modes) {
      if (basis.occupation(base, mode) != 0) {
        is_base = false;
        break;
      }
    }
    if (!is_base) continue;
    for (std::size_t k = 0; k < local_dim; ++k) {
      gathered.row(static_cast<Eigen::Index>(k)) = m.row(static_cast<Eigen::Index>(base + local_offset[k]));
    }
    const CMatrix mixed = op * gathered;
    for (std::size_t k = 0; k < local_dim; ++k) {
      out.row(static_cast<Eigen::Index>(base + local_offset[k])) = mixed.row(static_cast<Eigen::Index>(k));
    }
  }
  return out;
}

namespace {

void check_pair(const FockBasis& basis, int i, int j) {
  if (i == j || i < 0 || j < 0 || i >= basis.modes() || j >= basis.modes()) {
    throw std::invalid_argument("beam_splitter: modes must be two distinct valid indices");
  }
}

}  // namespace

FockKet beam_splitter(const FockKet& state, int i, int j, double t, double phi) {
  check_pair(state.basis(), i, j);
  const CMatrix U = beam_splitter_matrix(state.basis().cutoff(i), state.basis().cutoff(j), t, phi);
  const int modes[] = {i, j};
  CMatrix out = apply_local_left(state.amplitudes(), state.basis(), modes, U);
  return FockKet(state.basis(), out.col(0), false);
}

FockDensityMatrix beam_splitter(const FockDensityMatrix& state, int i, int j, double t, double phi) {
  check_pair(state.basis(), i, j);
  const CMatrix U = beam_splitter_matrix(state.basis().cutoff(i), state.basis().cutoff(j), t, phi);
  const int modes[] = {i, j};
  const CMatrix left = apply_local_left(state.data(), state.basis(), modes, U);
  CMatrix both = apply_local_left(left.adjoint(), state.basis(), modes, U).adjoint();
  both = 0.5 * (both + both.adjoint());
  return FockDensityMatrix(state.basis(), std::move(both), false);
}

CMatrix displacement_matrix(int cutoff, cplx alpha) {
  check_cutoff(cutoff, "displacement");
  const int d = cutoff + 1;
  CMatrix D(d, d);
  // Column 0 is the coherent state |alpha>; D|n+1> = (a^dag - alpha^*) D|n> / sqrt(n+1).
  cplx term = std::exp(-0.5 * std::norm(alpha));
  for (int m = 0; m < d; ++m) {
    D(m, 0) = term;
    term *= alpha / std::sqrt(m + 1.0);
  }
  for (int n = 0; n + 1 < d; ++n) {
    const double inv = 1.0 / std::sqrt(n + 1.0);
    for (int m = 0; m < d; ++m) {
      const cplx raised = m > 0 ? std::sqrt(static_cast<double>(m)) * D(m - 1, n) : cplx(0.0);
      D(m, n + 1) = (raised - std::conj(alpha) * D(m, n)) * inv;
    }
  }
  return D;
}

namespace {

void check_leak(double leaked, double scale, cplx alpha) {
  if (leaked > tol::kDisplacementLeak * std::max(scale, 1e-300)) {
    std::ostringstream os;
    os << "displacement: |alpha| = " << std::abs(alpha) << " pushes weight " << leaked
       << " beyond the cutoff (bound " << tol::kDisplacementLeak << ")";
    throw std::invalid_argument(os.str());
  }
}

}  // namespace

FockKet displacement(const FockKet& state, int mode, cplx alpha) {
  if (mode < 0 || mode >= state.modes()) throw std::invalid_argument("displacement: mode out of range");
  const CMatrix D = displacement_matrix(state.basis().cutoff(mode), alpha);
  const int modes[] = {mode};
  const CVector out = apply_local_left(state.amplitudes(), state.basis(), modes, D).col(0);
  const double before = state.amplitudes().squaredNorm();
  check_leak(before - out.squaredNorm(), before, alpha);
  return FockKet(state.basis(), out, false);
}

FockDensityMatrix displacement(const FockDensityMatrix& state, int mode, cplx alpha) {
  if (mode < 0 || mode >= state.modes()) throw std::invalid_argument("displacement: mode out of range");
  const CMatrix D = displacement_matrix(state.basis().cutoff(mode), alpha);
  const int modes[] = {mode};
  const CMatrix left = apply_local_left(state.data(), state.basis(), modes, D);
  CMatrix both = apply_local_left(left.adjoint(), state.basis(), modes, D).adjoint();
  both = 0.5 * (both + both.adjoint());
  const double before = state.trace().real();
  check_leak(before - both.trace().real(), before, alpha);
  return FockDensityMatrix(state.basis(), std::move(both), false);
}

Eigen::VectorXd two_mode_squeeze_vacuum_ancilla(int n, double G, int max_k) {
  if (n < 0 || max_k < 0) throw std::invalid_argument("two_mode_squeeze_vacuum_ancilla: negative index");
  if (!(G >= 1.0)) throw std::invalid_argument("two_mode_squeeze_vacuum_ancilla: gain must be >= 1");
  Eigen::VectorXd amp(max_k + 1);
  const double log_base = -0.5 * (n + 1) * std::log(G);
  if (G == 1.0) {
    amp.setZero();
    amp(0) = 1.0;
    return amp;
  }
  const double log_ratio = 0.5 * std::log((G - 1.0) / G);
  for (int k = 0; k <= max_k; ++k) {
    amp(k) = std::exp(log_base + k * log_ratio + 0.5 * std::log(binomial(n + k, k)));
  }
  return amp;
}

}  // namespace hybridswap
