#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace hybridswap {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Product basis of photon-number tuples |n_0, n_1, ...>, ordered
/// lexicographically with mode 0 as the slowest index. Each mode keeps
/// occupations 0..cutoff (inclusive).
class FockBasis {
 public:
  FockBasis() = default;
  explicit FockBasis(std::vector<int> cutoffs);
  static FockBasis uniform(int modes, int cutoff);

  int modes() const { return static_cast<int>(cutoffs_.size()); }
  int cutoff(int mode) const { return cutoffs_.at(mode); }
  int dim(int mode) const { return cutoffs_.at(mode) + 1; }
  const std::vector<int>& cutoffs() const { return cutoffs_; }
  std::optional<int> uniform_cutoff() const;
  std::size_t size() const { return size_; }
  std::size_t stride(int mode) const { return strides_.at(mode); }

  std::size_t index(std::span<const int> occupation) const;
  std::vector<int> occupation(std::size_t index) const;
  int occupation(std::size_t index, int mode) const {
    return static_cast<int>((index / strides_[mode]) % static_cast<std::size_t>(cutoffs_[mode] + 1));
  }

  friend bool operator==(const FockBasis& a, const FockBasis& b) { return a.cutoffs_ == b.cutoffs_; }

 private:
  std::vector<int> cutoffs_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

class FockKet {
 public:
  FockKet(FockBasis basis, CVector amplitudes, bool normalized = true);

  /// Basis state |occupation>.
  static FockKet number_state(FockBasis basis, std::span<const int> occupation);

  const FockBasis& basis() const { return basis_; }
  int modes() const { return basis_.modes(); }
  const CVector& amplitudes() const { return amps_; }
  bool normalized() const { return normalized_; }
  double norm() const { return amps_.norm(); }

  cplx amplitude(std::span<const int> occupation) const { return amps_(basis_.index(occupation)); }
  cplx amplitude(std::initializer_list<int> occupation) const {
    return amplitude(std::span<const int>(occupation.begin(), occupation.size()));
  }

 private:
  FockBasis basis_;
  CVector amps_;
  bool normalized_;
};

/// Density operator on a truncated multi-mode Fock space. States flagged
/// normalized are trace-one and positive semidefinite; the flag is false for
/// post-selected blocks and for partial transposes.
class FockDensityMatrix {
 public:
  FockDensityMatrix(FockBasis basis, CMatrix data, bool normalized = true);
  static FockDensityMatrix uniform(int modes, int cutoff, CMatrix data, bool normalized = true);
  static FockDensityMatrix pure(const FockKet& ket);

  const FockBasis& basis() const { return basis_; }
  int modes() const { return basis_.modes(); }
  int cutoff(int mode) const { return basis_.cutoff(mode); }
  std::size_t dim() const { return basis_.size(); }
  const CMatrix& data() const { return data_; }
  bool normalized() const { return normalized_; }
  cplx trace() const { return data_.trace(); }

  cplx element(std::span<const int> row, std::span<const int> col) const {
    return data_(basis_.index(row), basis_.index(col));
  }
  cplx element(std::initializer_list<int> row, std::initializer_list<int> col) const {
    return element(std::span<const int>(row.begin(), row.size()), std::span<const int>(col.begin(), col.size()));
  }

  double hermiticity_error() const;

  /// Throws InvariantViolation if Hermiticity, trace or (for normalized
  /// states) positivity fails at the shared tolerances. `nominal_trace`
  /// defaults to 1 for normalized states and to the current trace otherwise.
  void validate(std::optional<double> nominal_trace = std::nullopt) const;

 private:
  FockBasis basis_;
  CMatrix data_;
  bool normalized_;
};

struct HermitianEigen {
  Eigen::VectorXd values;  // ascending
  CMatrix vectors;         // columns
  double max_residual = 0;
};

/// Self-adjoint eigendecomposition; throws InvariantViolation when the input
/// is not Hermitian or an eigenpair residual exceeds tol::kEigenResidual.
HermitianEigen hermitian_eigen(const CMatrix& m);

FockKet tensor(const FockKet& a, const FockKet& b);
FockDensityMatrix tensor(const FockDensityMatrix& a, const FockDensityMatrix& b);

/// Reduced state on `keep` (ascending mode order in the result).
FockDensityMatrix partial_trace(const FockDensityMatrix& rho, std::span<const int> keep);
FockDensityMatrix partial_trace(const FockDensityMatrix& rho, std::initializer_list<int> keep);

/// Transposes the indices of every mode listed in `part`.
FockDensityMatrix partial_transpose(const FockDensityMatrix& rho, std::span<const int> part);
FockDensityMatrix partial_transpose(const FockDensityMatrix& rho, std::initializer_list<int> part);

/// Sum of absolute eigenvalues of a Hermitian operator.
double trace_norm(const FockDensityMatrix& m);

/// <psi|rho|psi>.
double fidelity(const FockDensityMatrix& rho, const FockKet& psi);

/// Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2 for states on the same basis.
double fidelity(const FockDensityMatrix& rho, const FockDensityMatrix& sigma);

/// (1/2)||rho - sigma||_1 after both are resized to the elementwise larger cutoffs.
double trace_distance(const FockDensityMatrix& rho, const FockDensityMatrix& sigma);

/// Embeds into (or truncates to) new per-mode cutoffs. Truncation drops
/// weight; the result keeps the input's normalized flag only when nothing
/// was dropped.
FockDensityMatrix resize(const FockDensityMatrix& rho, std::vector<int> cutoffs);
FockKet resize(const FockKet& ket, std::vector<int> cutoffs);

/// Reorders modes: result mode k is input mode order[k].
FockDensityMatrix permute_modes(const FockDensityMatrix& rho, std::span<const int> order);

/// Mean photon number of one mode.
double mean_photon_number(const FockDensityMatrix& rho, int mode);

/// (M + M^dagger)/2, keeping the basis and flag.
FockDensityMatrix hermitized(const FockDensityMatrix& m);

// JSON form: {"modes", "cutoff", "normalized", "data": [[re, im], ...]} with
// row-major data. "cutoff" is an integer for uniform bases and a per-mode
// array otherwise.
nlohmann::json to_json(const FockDensityMatrix& rho);
FockDensityMatrix density_matrix_from_json(const nlohmann::json& j);

}  // namespace hybridswap
