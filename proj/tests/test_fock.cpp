#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hybridswap/errors.hpp"
#include "hybridswap/fock.hpp"
#include "hybridswap/state_prep.hpp"
#include "test_support.hpp"

using namespace hybridswap;
using hybridswap::testing::ideal_swapped_state;
using hybridswap::testing::max_abs_diff;
using hybridswap::testing::random_state;

namespace {

FockDensityMatrix bell_state() { return FockDensityMatrix::pure(split_photon_ket(0.5)); }

}  // namespace

TEST(FockBasis, LexicographicOrderingModeZeroSlowest) {
  const FockBasis basis({1, 2});
  EXPECT_EQ(basis.size(), 6u);
  EXPECT_EQ(basis.index(std::vector<int>{0, 2}), 2u);
  EXPECT_EQ(basis.index(std::vector<int>{1, 0}), 3u);
  EXPECT_EQ(basis.occupation(5), (std::vector<int>{1, 2}));
  EXPECT_THROW(basis.index(std::vector<int>{2, 0}), std::invalid_argument);
}

TEST(FockKet, NormalizedFlagIsChecked) {
  const FockBasis basis = FockBasis::uniform(1, 1);
  EXPECT_THROW(FockKet(basis, CVector::Ones(2)), InvariantViolation);
  EXPECT_NO_THROW(FockKet(basis, CVector::Ones(2), false));
}

TEST(Tensor, VacuumTimesVacuum) {
  const FockBasis one = FockBasis::uniform(1, 2);
  const int zero[] = {0};
  const auto vac = FockDensityMatrix::pure(FockKet::number_state(one, zero));
  const auto both = tensor(vac, vac);
  EXPECT_EQ(both.modes(), 2);
  EXPECT_DOUBLE_EQ(both.element({0, 0}, {0, 0}).real(), 1.0);
  EXPECT_DOUBLE_EQ(both.data().cwiseAbs().sum(), 1.0);
}

TEST(Tensor, TraceMultiplies) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = random_state(FockBasis::uniform(1, 3), rng);
    const auto b = random_state(FockBasis::uniform(2, 3), rng);
    // Unnormalized scaled copies to make the product rule nontrivial.
    const FockDensityMatrix sa(a.basis(), 0.3 * a.data(), false);
    const FockDensityMatrix sb(b.basis(), 0.7 * b.data(), false);
    const auto t = tensor(sa, sb);
    EXPECT_NEAR(t.trace().real(), sa.trace().real() * sb.trace().real(), 1e-12);
    EXPECT_EQ(t.modes(), 3);
  }
}

TEST(Tensor, CutoffMismatchThrows) {
  std::mt19937_64 rng(1);
  EXPECT_THROW(tensor(random_state(FockBasis::uniform(1, 1), rng), random_state(FockBasis::uniform(1, 2), rng)),
               std::invalid_argument);
}

TEST(Tensor, TwoSwappedCopiesFormFourModeInput) {
  const auto rho = ideal_swapped_state(0.7658);
  const auto four = tensor(rho, rho);
  EXPECT_EQ(four.modes(), 4);
  // <A1 D1 A2 D2| = <01 10| <- rho(01,01) rho(10,10)
  EXPECT_NEAR(four.element({0, 1, 1, 0}, {0, 1, 1, 0}).real(), rho.element({0, 1}, {0, 1}).real() * 0.5, 1e-15);
  EXPECT_NEAR(four.element({0, 1, 1, 0}, {1, 0, 0, 1}).real(), std::pow(0.7658 / 2, 2), 1e-15);
  four.validate();
}

TEST(PartialTrace, BalancedSplitPhotonGivesMaximallyMixedQubit) {
  const auto reduced = partial_trace(bell_state(), {0});
  EXPECT_NEAR(reduced.data()(0, 0).real(), 0.5, 1e-15);
  EXPECT_NEAR(reduced.data()(1, 1).real(), 0.5, 1e-15);
  EXPECT_NEAR(std::abs(reduced.data()(0, 1)), 0.0, 1e-15);
}

TEST(PartialTrace, KeepEverythingIsIdentityAndTraceIsPreserved) {
  std::mt19937_64 rng(3);
  const auto rho = random_state(FockBasis({2, 1, 3}), rng);
  EXPECT_LT(max_abs_diff(partial_trace(rho, {0, 1, 2}).data(), rho.data()), 1e-15);
  for (int keep = 0; keep < 3; ++keep) {
    const int k[] = {keep};
    EXPECT_NEAR(partial_trace(rho, k).trace().real(), 1.0, 1e-12);
  }
  EXPECT_THROW(partial_trace(rho, {}), std::invalid_argument);
  EXPECT_THROW(partial_trace(rho, {3}), std::invalid_argument);
}

TEST(PartialTrace, ProductDiagonal) {
  const FockBasis basis = FockBasis::uniform(2, 3);
  const int occ[] = {2, 2};
  const auto rho = FockDensityMatrix::pure(FockKet::number_state(basis, occ));
  const auto reduced = partial_trace(rho, {1});
  EXPECT_DOUBLE_EQ(reduced.data()(2, 2).real(), 1.0);
  EXPECT_DOUBLE_EQ(reduced.data().cwiseAbs().sum(), 1.0);
}

TEST(PartialTranspose, BellSpectrum) {
  const auto pt = partial_transpose(bell_state(), {1});
  EXPECT_FALSE(pt.normalized());
  const auto eig = hermitian_eigen(pt.data());
  EXPECT_NEAR(eig.values(0), -0.5, 1e-12);
  for (int i = 1; i < 4; ++i) EXPECT_NEAR(eig.values(i), 0.5, 1e-12);
}

TEST(PartialTranspose, InvolutiveHermitianTracePreserving) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const auto rho = random_state(FockBasis({1, 2, 2}), rng);
    const auto pt = partial_transpose(rho, {0, 2});
    EXPECT_LT(pt.hermiticity_error(), 1e-15);
    EXPECT_NEAR(pt.trace().real(), 1.0, 1e-12);
    EXPECT_EQ(partial_transpose(pt, {0, 2}).data(), rho.data());
  }
}

TEST(PartialTranspose, SwappedStateHasNegativeEigenvalue) {
  const auto pt = partial_transpose(ideal_swapped_state(std::tanh(1.01)), {1});
  EXPECT_LT(hermitian_eigen(pt.data()).values(0), -1e-3);
}

TEST(TraceNorm, Values) {
  std::mt19937_64 rng(5);
  EXPECT_NEAR(trace_norm(random_state(FockBasis::uniform(2, 2), rng)), 1.0, 1e-12);
  EXPECT_NEAR(trace_norm(partial_transpose(bell_state(), {0})), 2.0, 1e-12);
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 0) = 0.7;
  m(1, 1) = -0.3;
  EXPECT_NEAR(trace_norm(FockDensityMatrix(FockBasis::uniform(1, 1), m, false)), 1.0, 1e-15);
}

TEST(TraceNorm, RejectsNonHermitian) {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 1) = 1.0;
  EXPECT_THROW(trace_norm(FockDensityMatrix(FockBasis::uniform(1, 1), m, false)), InvariantViolation);
}

TEST(Fidelity, PureStates) {
  const auto ket = split_photon_ket(0.3);
  EXPECT_NEAR(fidelity(FockDensityMatrix::pure(ket), ket), 1.0, 1e-14);
  const FockBasis one = FockBasis::uniform(1, 2);
  const int zero[] = {0};
  const int single[] = {1};
  EXPECT_NEAR(fidelity(FockDensityMatrix::pure(FockKet::number_state(one, zero)), FockKet::number_state(one, single)),
              0.0, 1e-15);
}

TEST(Fidelity, SwappedStateAgainstLossyTarget) {
  const double g = 0.77;
  const double norm = std::sqrt(1 + g * g);
  CVector amps = CVector::Zero(4);
  amps(1) = g / norm;  // |0,1>
  amps(2) = 1 / norm;  // |1,0>
  const FockKet target(FockBasis::uniform(2, 1), amps);
  EXPECT_NEAR(fidelity(ideal_swapped_state(g), target), (1 + g * g) / 2, 1e-14);
  EXPECT_NEAR((1 + g * g) / 2, 0.79645, 1e-12);
}

TEST(Fidelity, UhlmannMatchesPureCaseAndIsSymmetric) {
  std::mt19937_64 rng(9);
  const auto basis = FockBasis::uniform(2, 1);
  const auto ket = hybridswap::testing::random_ket(basis, rng);
  const auto rho = random_state(basis, rng);
  EXPECT_NEAR(fidelity(rho, FockDensityMatrix::pure(ket)), fidelity(rho, ket), 1e-9);
  const auto sigma = random_state(basis, rng);
  EXPECT_NEAR(fidelity(rho, sigma), fidelity(sigma, rho), 1e-9);
  EXPECT_NEAR(fidelity(rho, rho), 1.0, 1e-9);
}

TEST(TraceDistance, ResizesToCommonSpace) {
  const FockBasis small = FockBasis::uniform(1, 1);
  const FockBasis big = FockBasis::uniform(1, 3);
  const int zero[] = {0};
  const int three[] = {3};
  const auto a = FockDensityMatrix::pure(FockKet::number_state(small, zero));
  const auto b = FockDensityMatrix::pure(FockKet::number_state(big, three));
  EXPECT_NEAR(trace_distance(a, b), 1.0, 1e-14);
  EXPECT_NEAR(trace_distance(a, resize(a, {3})), 0.0, 1e-15);
}

TEST(PermuteModes, MovesModes) {
  std::mt19937_64 rng(21);
  const auto rho = random_state(FockBasis({1, 2, 3}), rng);
  const int order[] = {2, 0, 1};
  const auto p = permute_modes(rho, order);
  EXPECT_EQ(p.basis().cutoffs(), (std::vector<int>{3, 1, 2}));
  EXPECT_EQ(p.element({3, 1, 0}, {2, 0, 1}), rho.element({1, 0, 3}, {0, 1, 2}));
  const int back[] = {1, 2, 0};
  EXPECT_EQ(permute_modes(p, back).data(), rho.data());
}

TEST(Json, ExactRoundTrip) {
  std::mt19937_64 rng(17);
  for (const auto& basis : {FockBasis::uniform(2, 2), FockBasis({1, 3})}) {
    const auto rho = random_state(basis, rng);
    const auto j = to_json(rho);
    const auto text = j.dump();
    const auto back = density_matrix_from_json(nlohmann::json::parse(text));
    EXPECT_EQ(back.basis(), rho.basis());
    EXPECT_EQ(back.data(), rho.data());
    EXPECT_EQ(back.normalized(), rho.normalized());
  }
}

TEST(Validate, DetectsBrokenInvariants) {
  CMatrix m = CMatrix::Identity(2, 2) * 0.5;
  EXPECT_NO_THROW(FockDensityMatrix(FockBasis::uniform(1, 1), m).validate());
  m(0, 0) = 1.5;
  m(1, 1) = -0.5;
  EXPECT_THROW(FockDensityMatrix(FockBasis::uniform(1, 1), m).validate(), InvariantViolation);
  m = CMatrix::Identity(2, 2) * 0.6;
  EXPECT_THROW(FockDensityMatrix(FockBasis::uniform(1, 1), m).validate(), InvariantViolation);
  EXPECT_NO_THROW(FockDensityMatrix(FockBasis::uniform(1, 1), m, false).validate(1.2));
}

TEST(HermitianEigen, ResidualBound) {
  std::mt19937_64 rng(4);
  const auto rho = random_state(FockBasis::uniform(3, 2), rng);
  EXPECT_LE(hermitian_eigen(rho.data()).max_residual, 1e-8);
}
