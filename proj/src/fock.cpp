#include "hybridswap/fock.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "hybridswap/errors.hpp"
#include "hybridswap/tolerances.hpp"

namespace hybridswap {

FockBasis::FockBasis(std::vector<int> cutoffs) : cutoffs_(std::move(cutoffs)) {
  if (cutoffs_.empty()) throw std::invalid_argument("FockBasis: at least one mode is required");
  for (int c : cutoffs_) {
    if (c < 0) throw std::invalid_argument("FockBasis: cutoffs must be nonnegative");
  }
  strides_.assign(cutoffs_.size(), 1);
  size_ = 1;
  for (int m = modes() - 1; m >= 0; --m) {
    strides_[m] = size_;
    size_ *= static_cast<std::size_t>(cutoffs_[m] + 1);
  }
}

FockBasis FockBasis::uniform(int modes, int cutoff) {
  if (modes <= 0) throw std::invalid_argument("FockBasis: mode count must be positive");
  return FockBasis(std::vector<int>(static_cast<std::size_t>(modes), cutoff));
}

std::optional<int> FockBasis::uniform_cutoff() const {
  if (std::adjacent_find(cutoffs_.begin(), cutoffs_.end(), std::not_equal_to<>()) != cutoffs_.end()) {
    return std::nullopt;
  }
  return cutoffs_.front();
}

std::size_t FockBasis::index(std::span<const int> occupation) const {
  if (static_cast<int>(occupation.size()) != modes()) {
    throw std::invalid_argument("FockBasis::index: occupation tuple has wrong length");
  }
  std::size_t idx = 0;
  for (int m = 0; m < modes(); ++m) {
    if (occupation[m] < 0 || occupation[m] > cutoffs_[m]) {
      throw std::invalid_argument("FockBasis::index: occupation outside cutoff");
    }
    idx += static_cast<std::size_t>(occupation[m]) * strides_[m];
  }
  return idx;
}

std::vector<int> FockBasis::occupation(std::size_t index) const {
  std::vector<int> occ(cutoffs_.size());
  for (int m = 0; m < modes(); ++m) occ[m] = occupation(index, m);
  return occ;
}

// ---------------------------------------------------------------------------

FockKet::FockKet(FockBasis basis, CVector amplitudes, bool normalized)
    : basis_(std::move(basis)), amps_(std::move(amplitudes)), normalized_(normalized) {
  if (static_cast<std::size_t>(amps_.size()) != basis_.size()) {
    throw std::invalid_argument("FockKet: amplitude vector does not match basis dimension");
  }
  if (normalized_ && std::abs(amps_.norm() - 1.0) > tol::kKetNorm) {
    throw InvariantViolation("FockKet: ket flagged normalized has norm " + std::to_string(amps_.norm()));
  }
}

FockKet FockKet::number_state(FockBasis basis, std::span<const int> occupation) {
  CVector v = CVector::Zero(static_cast<Eigen::Index>(basis.size()));
  v(static_cast<Eigen::Index>(basis.index(occupation))) = 1.0;
  return FockKet(std::move(basis), std::move(v));
}

// ---------------------------------------------------------------------------

FockDensityMatrix::FockDensityMatrix(FockBasis basis, CMatrix data, bool normalized)
    : basis_(std::move(basis)), data_(std::move(data)), normalized_(normalized) {
  const auto n = static_cast<Eigen::Index>(basis_.size());
  if (data_.rows() != n || data_.cols() != n) {
    throw std::invalid_argument("FockDensityMatrix: matrix shape does not match basis dimension");
  }
}

FockDensityMatrix FockDensityMatrix::uniform(int modes, int cutoff, CMatrix data, bool normalized) {
  return FockDensityMatrix(FockBasis::uniform(modes, cutoff), std::move(data), normalized);
}

FockDensityMatrix FockDensityMatrix::pure(const FockKet& ket) {
  CMatrix m = ket.amplitudes() * ket.amplitudes().adjoint();
  return FockDensityMatrix(ket.basis(), std::move(m), ket.normalized());
}

double FockDensityMatrix::hermiticity_error() const {
  return (data_ - data_.adjoint()).cwiseAbs().maxCoeff();
}

void FockDensityMatrix::validate(std::optional<double> nominal_trace) const {
  const double herm = hermiticity_error();
  if (herm > tol::kHermitian) {
    std::ostringstream os;
    os << "density matrix is not Hermitian (max |M - M^dagger| = " << herm << ")";
    throw InvariantViolation(os.str());
  }
  const cplx tr = trace();
  const double expected = nominal_trace.value_or(normalized_ ? 1.0 : tr.real());
  if (std::abs(tr.imag()) > tol::kTrace || std::abs(tr.real() - expected) > tol::kTrace) {
    std::ostringstream os;
    os << "density matrix trace " << tr.real() << "+" << tr.imag() << "i differs from nominal " << expected;
    throw InvariantViolation(os.str());
  }
  if (normalized_) {
    const double min_eig = hermitian_eigen(data_).values.minCoeff();
    if (min_eig < -tol::kPositivity) {
      std::ostringstream os;
      os << "normalized state has negative eigenvalue " << min_eig;
      throw InvariantViolation(os.str());
    }
  }
}

// ---------------------------------------------------------------------------

HermitianEigen hermitian_eigen(const CMatrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("hermitian_eigen: matrix is not square");
  const double herm = m.size() == 0 ? 0.0 : (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (herm > tol::kHermitian) {
    std::ostringstream os;
    os << "hermitian_eigen: input is not Hermitian (max |M - M^dagger| = " << herm << ")";
    throw InvariantViolation(os.str());
  }
  const CMatrix sym = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(sym);
  if (solver.info() != Eigen::Success) throw InvariantViolation("hermitian_eigen: eigensolver failed");
  HermitianEigen out{solver.eigenvalues(), solver.eigenvectors(), 0.0};
  if (m.rows() > 0) {
    const CMatrix residual = sym * out.vectors - out.vectors * out.values.cast<cplx>().asDiagonal();
    out.max_residual = residual.colwise().norm().maxCoeff();
  }
  // Residuals scale with the operator norm; the tolerance applies to unit-scale operators.
  const double scale = std::max(1.0, out.values.size() ? out.values.cwiseAbs().maxCoeff() : 0.0);
  if (out.max_residual > tol::kEigenResidual * scale) {
    throw InvariantViolation("hermitian_eigen: eigenpair residual " + std::to_string(out.max_residual));
  }
  return out;
}

namespace {

std::vector<int> concat(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out(a);
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

void check_modes(const FockBasis& basis, std::span<const int> modes, const char* what, bool allow_empty) {
  if (modes.empty() && !allow_empty) throw std::invalid_argument(std::string(what) + ": mode set is empty");
  std::vector<int> seen(static_cast<std::size_t>(basis.modes()), 0);
  for (int m : modes) {
    if (m < 0 || m >= basis.modes()) throw std::invalid_argument(std::string(what) + ": mode index out of range");
    if (seen[m]++) throw std::invalid_argument(std::string(what) + ": duplicate mode index");
  }
}

// Sum of digit*stride over the selected modes, for every basis index.
std::vector<std::size_t> partial_offsets(const FockBasis& basis, std::span<const int> modes) {
  std::vector<std::size_t> out(basis.size(), 0);
  for (std::size_t i = 0; i < basis.size(); ++i) {
    for (int m : modes) out[i] += static_cast<std::size_t>(basis.occupation(i, m)) * basis.stride(m);
  }
  return out;
}

}  // namespace

FockKet tensor(const FockKet& a, const FockKet& b) {
  CVector v(a.amplitudes().size() * b.amplitudes().size());
  for (Eigen::Index i = 0; i < a.amplitudes().size(); ++i) {
    v.segment(i * b.amplitudes().size(), b.amplitudes().size()) = a.amplitudes()(i) * b.amplitudes();
  }
  return FockKet(FockBasis(concat(a.basis().cutoffs(), b.basis().cutoffs())), std::move(v),
                 a.normalized() && b.normalized());
}

FockDensityMatrix tensor(const FockDensityMatrix& a, const FockDensityMatrix& b) {
  if (a.basis().uniform_cutoff() != b.basis().uniform_cutoff() || !a.basis().uniform_cutoff()) {
    throw std::invalid_argument("tensor: operands must share one uniform cutoff");
  }
  const auto na = a.data().rows();
  const auto nb = b.data().rows();
  CMatrix out(na * nb, na * nb);
  for (Eigen::Index i = 0; i < na; ++i) {
    for (Eigen::Index j = 0; j < na; ++j) out.block(i * nb, j * nb, nb, nb) = a.data()(i, j) * b.data();
  }
  return FockDensityMatrix(FockBasis(concat(a.basis().cutoffs(), b.basis().cutoffs())), std::move(out),
                           a.normalized() && b.normalized());
}

FockDensityMatrix partial_trace(const FockDensityMatrix& rho, std::span<const int> keep) {
  const FockBasis& basis = rho.basis();
  check_modes(basis, keep, "partial_trace", false);
  std::vector<int> kept(keep.begin(), keep.end());
  std::sort(kept.begin(), kept.end());
  std::vector<int> traced;
  for (int m = 0; m < basis.modes(); ++m) {
    if (!std::binary_search(kept.begin(), kept.end(), m)) traced.push_back(m);
  }
  std::vector<int> kept_cutoffs;
  for (int m : kept) kept_cutoffs.push_back(basis.cutoff(m));
  FockBasis out_basis(kept_cutoffs);

  // Full-space offsets of each reduced-basis index and each traced configuration.
  std::vector<std::size_t> out_offset(out_basis.size(), 0);
  for (std::size_t i = 0; i < out_basis.size(); ++i) {
    for (int k = 0; k < out_basis.modes(); ++k) {
      out_offset[i] += static_cast<std::size_t>(out_basis.occupation(i, k)) * basis.stride(kept[k]);
    }
  }
  std::vector<std::size_t> traced_offset{0};
  for (int m : traced) {
    std::vector<std::size_t> next;
    for (std::size_t off : traced_offset) {
      for (int n = 0; n <= basis.cutoff(m); ++n) next.push_back(off + static_cast<std::size_t>(n) * basis.stride(m));
    }
    traced_offset = std::move(next);
  }

  const auto n = static_cast<Eigen::Index>(out_basis.size());
  CMatrix out = CMatrix::Zero(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      cplx acc = 0.0;
      for (std::size_t t : traced_offset) {
        acc += rho.data()(static_cast<Eigen::Index>(out_offset[r] + t), static_cast<Eigen::Index>(out_offset[c] + t));
      }
      out(r, c) = acc;
    }
  }
  return FockDensityMatrix(std::move(out_basis), std::move(out), rho.normalized());
}

FockDensityMatrix partial_trace(const FockDensityMatrix& rho, std::initializer_list<int> keep) {
  return partial_trace(rho, std::span<const int>(keep.begin(), keep.size()));
}

FockDensityMatrix partial_transpose(const FockDensityMatrix& rho, std::span<const int> part) {
  check_modes(rho.basis(), part, "partial_transpose", true);
  const auto offsets = partial_offsets(rho.basis(), part);
  const auto n = static_cast<Eigen::Index>(rho.dim());
  CMatrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const std::size_t oi = offsets[i];
      const std::size_t oj = offsets[j];
      out(static_cast<Eigen::Index>(i - oi + oj), static_cast<Eigen::Index>(j - oj + oi)) = rho.data()(i, j);
    }
  }
  return FockDensityMatrix(rho.basis(), std::move(out), false);
}

FockDensityMatrix partial_transpose(const FockDensityMatrix& rho, std::initializer_list<int> part) {
  return partial_transpose(rho, std::span<const int>(part.begin(), part.size()));
}

double trace_norm(const FockDensityMatrix& m) { return hermitian_eigen(m.data()).values.cwiseAbs().sum(); }

double fidelity(const FockDensityMatrix& rho, const FockKet& psi) {
  if (!(rho.basis() == psi.basis())) throw std::invalid_argument("fidelity: dimension mismatch");
  if (std::abs(psi.norm() - 1.0) > tol::kKetNorm) throw std::invalid_argument("fidelity: target ket is not normalized");
  return (psi.amplitudes().adjoint() * rho.data() * psi.amplitudes())(0, 0).real();
}

namespace {

CMatrix psd_sqrt(const CMatrix& m) {
  const auto eig = hermitian_eigen(m);
  const Eigen::VectorXd roots = eig.values.cwiseMax(0.0).cwiseSqrt();
  return eig.vectors * roots.cast<cplx>().asDiagonal() * eig.vectors.adjoint();
}

}  // namespace

double fidelity(const FockDensityMatrix& rho, const FockDensityMatrix& sigma) {
  if (!(rho.basis() == sigma.basis())) throw std::invalid_argument("fidelity: dimension mismatch");
  const CMatrix s = psd_sqrt(rho.data());
  CMatrix inner = s * sigma.data() * s;
  inner = 0.5 * (inner + inner.adjoint());
  const auto eig = hermitian_eigen(inner);
  const double root_sum = eig.values.cwiseMax(0.0).cwiseSqrt().sum();
  return root_sum * root_sum;
}

double trace_distance(const FockDensityMatrix& rho, const FockDensityMatrix& sigma) {
  if (rho.modes() != sigma.modes()) throw std::invalid_argument("trace_distance: mode count mismatch");
  std::vector<int> cutoffs(static_cast<std::size_t>(rho.modes()));
  for (int m = 0; m < rho.modes(); ++m) cutoffs[m] = std::max(rho.cutoff(m), sigma.cutoff(m));
  const auto a = resize(rho, cutoffs);
  const auto b = resize(sigma, cutoffs);
  CMatrix diff = a.data() - b.data();
  diff = 0.5 * (diff + diff.adjoint());
  return 0.5 * hermitian_eigen(diff).values.cwiseAbs().sum();
}

namespace {

// For every index of `from`, the index in `to` (or npos when it falls outside).
std::vector<std::size_t> index_map(const FockBasis& from, const FockBasis& to) {
  constexpr auto npos = static_cast<std::size_t>(-1);
  std::vector<std::size_t> map(from.size(), npos);
  for (std::size_t i = 0; i < from.size(); ++i) {
    std::size_t j = 0;
    bool inside = true;
    for (int m = 0; m < from.modes(); ++m) {
      const int n = from.occupation(i, m);
      if (n > to.cutoff(m)) {
        inside = false;
        break;
      }
      j += static_cast<std::size_t>(n) * to.stride(m);
    }
    if (inside) map[i] = j;
  }
  return map;
}

}  // namespace

FockDensityMatrix resize(const FockDensityMatrix& rho, std::vector<int> cutoffs) {
  if (static_cast<int>(cutoffs.size()) != rho.modes()) throw std::invalid_argument("resize: mode count mismatch");
  FockBasis target(std::move(cutoffs));
  const auto map = index_map(rho.basis(), target);
  const auto n = static_cast<Eigen::Index>(target.size());
  CMatrix out = CMatrix::Zero(n, n);
  double dropped = 0.0;
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (map[i] == static_cast<std::size_t>(-1)) {
      dropped += std::abs(rho.data()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)));
      continue;
    }
    for (std::size_t j = 0; j < map.size(); ++j) {
      if (map[j] == static_cast<std::size_t>(-1)) continue;
      out(static_cast<Eigen::Index>(map[i]), static_cast<Eigen::Index>(map[j])) =
          rho.data()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  return FockDensityMatrix(std::move(target), std::move(out), rho.normalized() && dropped == 0.0);
}

FockKet resize(const FockKet& ket, std::vector<int> cutoffs) {
  if (static_cast<int>(cutoffs.size()) != ket.modes()) throw std::invalid_argument("resize: mode count mismatch");
  FockBasis target(std::move(cutoffs));
  const auto map = index_map(ket.basis(), target);
  CVector out = CVector::Zero(static_cast<Eigen::Index>(target.size()));
  bool dropped = false;
  for (std::size_t i = 0; i < map.size(); ++i) {
    const cplx a = ket.amplitudes()(static_cast<Eigen::Index>(i));
    if (map[i] == static_cast<std::size_t>(-1)) {
      dropped = dropped || a != 0.0;
      continue;
    }
    out(static_cast<Eigen::Index>(map[i])) = a;
  }
  return FockKet(std::move(target), std::move(out), ket.normalized() && !dropped);
}

FockDensityMatrix permute_modes(const FockDensityMatrix& rho, std::span<const int> order) {
  if (static_cast<int>(order.size()) != rho.modes()) throw std::invalid_argument("permute_modes: order has wrong length");
  check_modes(rho.basis(), order, "permute_modes", false);
  std::vector<int> cutoffs;
  for (int m : order) cutoffs.push_back(rho.cutoff(m));
  FockBasis target(std::move(cutoffs));
  std::vector<Eigen::Index> map(rho.dim());
  for (std::size_t i = 0; i < rho.dim(); ++i) {
    std::size_t j = 0;
    for (int k = 0; k < target.modes(); ++k) {
      j += static_cast<std::size_t>(rho.basis().occupation(i, order[k])) * target.stride(k);
    }
    map[i] = static_cast<Eigen::Index>(j);
  }
  const auto n = static_cast<Eigen::Index>(rho.dim());
  CMatrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) out(map[i], map[j]) = rho.data()(i, j);
  }
  return FockDensityMatrix(std::move(target), std::move(out), rho.normalized());
}

double mean_photon_number(const FockDensityMatrix& rho, int mode) {
  if (mode < 0 || mode >= rho.modes()) throw std::invalid_argument("mean_photon_number: mode out of range");
  double n = 0.0;
  for (std::size_t i = 0; i < rho.dim(); ++i) {
    n += rho.basis().occupation(i, mode) * rho.data()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
  }
  return n;
}

FockDensityMatrix hermitized(const FockDensityMatrix& m) {
  return FockDensityMatrix(m.basis(), 0.5 * (m.data() + m.data().adjoint()), m.normalized());
}

nlohmann::json to_json(const FockDensityMatrix& rho) {
  nlohmann::json j;
  j["modes"] = rho.modes();
  if (const auto c = rho.basis().uniform_cutoff()) {
    j["cutoff"] = *c;
  } else {
    j["cutoff"] = rho.basis().cutoffs();
  }
  j["normalized"] = rho.normalized();
  nlohmann::json data = nlohmann::json::array();
  const auto n = static_cast<Eigen::Index>(rho.dim());
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) data.push_back({rho.data()(r, c).real(), rho.data()(r, c).imag()});
  }
  j["data"] = std::move(data);
  return j;
}

FockDensityMatrix density_matrix_from_json(const nlohmann::json& j) {
  const int modes = j.at("modes").get<int>();
  std::vector<int> cutoffs;
  if (j.at("cutoff").is_array()) {
    cutoffs = j.at("cutoff").get<std::vector<int>>();
  } else {
    cutoffs.assign(static_cast<std::size_t>(modes), j.at("cutoff").get<int>());
  }
  if (static_cast<int>(cutoffs.size()) != modes) throw std::invalid_argument("density matrix JSON: cutoff/modes mismatch");
  FockBasis basis(std::move(cutoffs));
  const auto n = static_cast<Eigen::Index>(basis.size());
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != n * n) throw std::invalid_argument("density matrix JSON: wrong data length");
  CMatrix m(n, n);
  for (Eigen::Index k = 0; k < n * n; ++k) {
    const auto& e = data[static_cast<std::size_t>(k)];
    m(k / n, k % n) = cplx(e.at(0).get<double>(), e.at(1).get<double>());
  }
  return FockDensityMatrix(std::move(basis), std::move(m), j.value("normalized", true));
}

}  // namespace hybridswap
