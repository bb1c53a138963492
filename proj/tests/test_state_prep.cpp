#include <gtest/gtest.h>

#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/special_functions/laguerre.hpp>
#include <cmath>
#include <random>
#include <unsupported/Eigen/MatrixFunctions>

#include "hybridswap/fock.hpp"
#include "hybridswap/state_prep.hpp"
#include "test_support.hpp"

using namespace hybridswap;
using hybridswap::testing::max_abs_diff;

namespace {

CMatrix annihilation(int cutoff) {
  CMatrix a = CMatrix::Zero(cutoff + 1, cutoff + 1);
  for (int n = 1; n <= cutoff; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  }
  return out;
}

// Matrix exponential of the mode-coupling generator on a truncated pair.
CMatrix beam_splitter_by_expm(int cutoff, double t, double phi) {
  const CMatrix a = annihilation(cutoff);
  const CMatrix id = CMatrix::Identity(cutoff + 1, cutoff + 1);
  const CMatrix A = kron(a, id);
  const CMatrix B = kron(id, a);
  const double theta = std::acos(std::sqrt(t));
  const CMatrix K = std::polar(1.0, phi) * B.adjoint() * A - std::polar(1.0, -phi) * A.adjoint() * B;
  return (theta * K).exp();
}

double mean_photons(const FockKet& ket, int mode) { return mean_photon_number(FockDensityMatrix::pure(ket), mode); }

}  // namespace

TEST(SplitPhoton, BalancedIsSymmetric) {
  const auto rho = split_photon(SplitPhotonSpec{0.5});
  EXPECT_NEAR(rho.element({1, 0}, {1, 0}).real(), 0.5, 1e-15);
  EXPECT_NEAR(rho.element({0, 1}, {0, 1}).real(), 0.5, 1e-15);
  EXPECT_NEAR(rho.element({1, 0}, {0, 1}).real(), 0.5, 1e-15);
  rho.validate();
}

TEST(SplitPhoton, ZeroReflectivityIsProduct) {
  const auto ket = split_photon_ket(0.0);
  EXPECT_DOUBLE_EQ(ket.amplitude({1, 0}).real(), 1.0);
  EXPECT_DOUBLE_EQ(ket.amplitude({0, 1}).real(), 0.0);
}

TEST(SplitPhoton, ImpurityMixture) {
  SplitPhotonSpec spec{0.5, Impurity{0.806, 0.183, 0.011, std::nullopt}};
  const auto rho = split_photon(spec);
  rho.validate();
  EXPECT_NEAR(rho.element({0, 0}, {0, 0}).real(), 0.183, 1e-15);
  EXPECT_NEAR(rho.element({1, 1}, {1, 1}).real(), 0.011, 1e-15);
  EXPECT_NEAR(rho.element({1, 0}, {0, 1}).real(), 0.403, 1e-15);
}

TEST(SplitPhoton, CustomMultiphotonState) {
  const FockBasis basis = FockBasis::uniform(2, 2);
  const int occ[] = {2, 0};
  Impurity imp{0.9, 0.0, 0.1, FockDensityMatrix::pure(FockKet::number_state(basis, occ))};
  const auto rho = split_photon(SplitPhotonSpec{0.5, imp, 2});
  EXPECT_NEAR(rho.element({2, 0}, {2, 0}).real(), 0.1, 1e-15);
  EXPECT_NEAR(rho.element({1, 1}, {1, 1}).real(), 0.0, 1e-15);
}

TEST(SplitPhoton, RejectsBadInputs) {
  EXPECT_THROW(split_photon(SplitPhotonSpec{1.2}), std::invalid_argument);
  EXPECT_THROW(split_photon(SplitPhotonSpec{-0.1}), std::invalid_argument);
  EXPECT_THROW(split_photon(SplitPhotonSpec{0.5, Impurity{1.1, -0.1, 0.0, std::nullopt}}), std::invalid_argument);
  EXPECT_THROW(split_photon(SplitPhotonSpec{0.5, Impurity{0.5, 0.1, 0.1, std::nullopt}}), std::invalid_argument);
}

TEST(Tmsv, ZeroSqueezingIsVacuum) {
  const auto ket = tmsv(TmsvSpec{0.0, 5});
  EXPECT_DOUBLE_EQ(ket.amplitude({0, 0}).real(), 1.0);
  EXPECT_NEAR(ket.norm(), 1.0, 1e-15);
}

TEST(Tmsv, AmplitudeRatioIsTanh) {
  const auto ket = tmsv(TmsvSpec{1.01, 5});
  const double ratio = ket.amplitude({1, 1}).real() / ket.amplitude({0, 0}).real();
  EXPECT_NEAR(ratio, std::tanh(1.01), 1e-14);
  EXPECT_NEAR(ratio, 0.7658, 1e-4);
  EXPECT_NEAR(ket.amplitude({3, 3}).real() / ket.amplitude({2, 2}).real(), std::tanh(1.01), 1e-14);
}

TEST(Tmsv, MeanPhotonNumberIsSinhSquared) {
  const double r = 0.71;
  const auto ket = tmsv(TmsvSpec{r, 5});
  const double tail = tmsv_truncated_tail(r, 5);
  // The truncated mean differs from sinh^2 r by at most the tail weight times its mean photon number.
  const double lambda2 = std::tanh(r) * std::tanh(r);
  const double tail_mean_bound = tail * (6 + lambda2 / (1 - lambda2)) + tail * std::sinh(r) * std::sinh(r);
  EXPECT_NEAR(mean_photons(ket, 0), std::sinh(r) * std::sinh(r), tail_mean_bound);
  EXPECT_NEAR(mean_photons(ket, 1), mean_photons(ket, 0), 1e-14);
}

TEST(Tmsv, TruncationTail) {
  // Cutoff 5 keeps the tail below 1e-4 only up to r = 0.3; r = 1.01 needs cutoff 17.
  for (double r : {0.0, 0.3}) EXPECT_LT(tmsv_truncated_tail(r, 5), 1e-4) << "r=" << r;
  EXPECT_GT(tmsv_truncated_tail(0.71, 5), 1e-4);
  EXPECT_LT(tmsv_truncated_tail(0.71, 9), 1e-4);
  EXPECT_GT(tmsv_truncated_tail(1.01, 16), 1e-4);
  EXPECT_LT(tmsv_truncated_tail(1.01, 17), 1e-4);
  // Closed-form tail against an explicit sum.
  const double lambda2 = std::pow(std::tanh(0.71), 2);
  double sum = 0;
  for (int n = 6; n < 400; ++n) sum += (1 - lambda2) * std::pow(lambda2, n);
  EXPECT_NEAR(tmsv_truncated_tail(0.71, 5), sum, 1e-15);
}

TEST(BeamSplitter, MatchesGeneratorExponential) {
  const int cutoff = 6;
  for (double t : {0.0, 0.25, 0.5, 0.8, 1.0}) {
    for (double phi : {0.0, 0.4, -1.3}) {
      const CMatrix U = beam_splitter_matrix(cutoff, cutoff, t, phi);
      const CMatrix V = beam_splitter_by_expm(cutoff, t, phi);
      // Exact wherever the total photon number fits into either mode.
      for (int n = 0; n <= cutoff; ++n) {
        for (int m = 0; n + m <= cutoff; ++m) {
          const auto col = n * (cutoff + 1) + m;
          EXPECT_LT((U.col(col) - V.col(col)).cwiseAbs().maxCoeff(), 1e-12) << "t=" << t << " phi=" << phi;
        }
      }
    }
  }
}

TEST(BeamSplitter, SinglePhotonSplitsEvenly) {
  const FockBasis basis = FockBasis::uniform(2, 1);
  const int occ[] = {1, 0};
  const auto out = beam_splitter(FockKet::number_state(basis, occ), 0, 1, 0.5);
  EXPECT_NEAR(std::abs(out.amplitude({1, 0})), 1 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(std::abs(out.amplitude({0, 1})), 1 / std::sqrt(2.0), 1e-15);
}

TEST(BeamSplitter, FullTransmissionIsIdentity) {
  std::mt19937_64 rng(2);
  const auto ket = hybridswap::testing::random_ket(FockBasis::uniform(3, 3), rng);
  EXPECT_LT((beam_splitter(ket, 0, 2, 1.0).amplitudes() - ket.amplitudes()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(BeamSplitter, HongOuMandel) {
  const FockBasis basis = FockBasis::uniform(2, 2);
  const int occ[] = {1, 1};
  const auto out = beam_splitter(FockKet::number_state(basis, occ), 0, 1, 0.5);
  EXPECT_NEAR(std::abs(out.amplitude({1, 1})), 0.0, 1e-15);
  EXPECT_NEAR(std::norm(out.amplitude({2, 0})), 0.5, 1e-14);
  EXPECT_NEAR(std::norm(out.amplitude({0, 2})), 0.5, 1e-14);
}

TEST(BeamSplitter, ConservesPhotonNumberAndTrace) {
  std::mt19937_64 rng(8);
  // States with at most cutoff photons in total stay inside the truncated space.
  const FockBasis basis = FockBasis::uniform(3, 4);
  CVector v = CVector::Zero(static_cast<Eigen::Index>(basis.size()));
  std::normal_distribution<double> normal;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto occ = basis.occupation(i);
    if (occ[0] + occ[2] <= 4) v(static_cast<Eigen::Index>(i)) = cplx(normal(rng), normal(rng));
  }
  const FockKet ket(basis, v / v.norm());
  const auto rho = FockDensityMatrix::pure(ket);
  const auto out = beam_splitter(rho, 0, 2, 0.37, 0.9);
  EXPECT_NEAR(out.trace().real(), 1.0, 1e-10);
  const double before = mean_photon_number(rho, 0) + mean_photon_number(rho, 2);
  const double after = mean_photon_number(out, 0) + mean_photon_number(out, 2);
  EXPECT_NEAR(after, before, 1e-10);
  EXPECT_NEAR(mean_photon_number(out, 1), mean_photon_number(rho, 1), 1e-12);
  EXPECT_THROW(beam_splitter(ket, 1, 1, 0.5), std::invalid_argument);
}

TEST(Displacement, LaguerreClosedForm) {
  const int cutoff = 15;
  const cplx alpha(0.6, -0.45);
  const CMatrix D = displacement_matrix(cutoff, alpha);
  const double x = std::norm(alpha);
  for (int m = 0; m <= cutoff; ++m) {
    for (int n = 0; n <= cutoff; ++n) {
      cplx expected;
      if (m >= n) {
        expected = std::sqrt(std::tgamma(n + 1.0) / std::tgamma(m + 1.0)) * std::pow(alpha, m - n) *
                   boost::math::laguerre(static_cast<unsigned>(n), static_cast<unsigned>(m - n), x);
      } else {
        expected = std::sqrt(std::tgamma(m + 1.0) / std::tgamma(n + 1.0)) * std::pow(-std::conj(alpha), n - m) *
                   boost::math::laguerre(static_cast<unsigned>(m), static_cast<unsigned>(n - m), x);
      }
      expected *= std::exp(-x / 2);
      EXPECT_LT(std::abs(D(m, n) - expected), 1e-12) << m << "," << n;
    }
  }
}

TEST(Displacement, ZeroIsIdentity) {
  EXPECT_LT(max_abs_diff(displacement_matrix(8, 0.0), CMatrix::Identity(9, 9)), 1e-15);
}

TEST(Displacement, CoherentMoment) {
  const FockBasis basis = FockBasis::uniform(1, 25);
  const int zero[] = {0};
  for (cplx alpha : {cplx(0.3, 0.1), cplx(-1.0, 0.5), cplx(0.0, 1.5)}) {
    const auto out = displacement(FockKet::number_state(basis, zero), 0, alpha);
    EXPECT_NEAR(mean_photons(out, 0), std::norm(alpha), 1e-9);
  }
}

TEST(Displacement, InverseCompositionOnLowPhotonInputs) {
  const int cutoff = 12;
  const FockBasis basis = FockBasis::uniform(1, cutoff);
  std::mt19937_64 rng(13);
  std::normal_distribution<double> normal;
  for (cplx alpha : {cplx(1.0, 0.0), cplx(0.6, -0.8), cplx(0.0, 0.5)}) {
    // Inputs with at most one photon: the round trip through the cutoff stays exact to 1e-8.
    CVector v = CVector::Zero(cutoff + 1);
    for (int n = 0; n <= 1; ++n) v(n) = cplx(normal(rng), normal(rng));
    const FockKet ket(basis, v / v.norm());
    const auto there = displacement(ket, 0, alpha);
    const auto back = displacement(there, 0, -alpha);
    // Checked on the input block; rows near the cutoff carry the truncation error.
    EXPECT_LT((back.amplitudes().head(2) - ket.amplitudes().head(2)).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((back.amplitudes() - ket.amplitudes()).norm(), 1e-4);
  }
}

TEST(Displacement, LargeAmplitudeThrows) {
  const FockBasis basis = FockBasis::uniform(1, 5);
  const int zero[] = {0};
  EXPECT_THROW(displacement(FockKet::number_state(basis, zero), 0, cplx(3.0, 0.0)), std::invalid_argument);
}

TEST(TwoModeSqueezer, MatchesGeneratorExponential) {
  // The generator a^dag b^dag - a b conserves n_a - n_b; on the ladder |n+k, k> it is tridiagonal.
  const int ladder = 120;
  const double s = 0.35;
  const double G = std::cosh(s) * std::cosh(s);
  for (int n = 0; n <= 3; ++n) {
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(ladder + 1, ladder + 1);
    for (int k = 0; k < ladder; ++k) {
      const double c = std::sqrt((n + k + 1.0) * (k + 1.0));
      K(k + 1, k) = c;
      K(k, k + 1) = -c;
    }
    const Eigen::MatrixXd S = (s * K).exp();
    const Eigen::VectorXd amps = two_mode_squeeze_vacuum_ancilla(n, G, 10);
    for (int k = 0; k <= 10; ++k) EXPECT_NEAR(amps(k), S(k, 0), 1e-10) << "n=" << n << " k=" << k;
    EXPECT_NEAR(amps(2), std::pow(G, -(n + 1) / 2.0) * ((G - 1) / G) *
                             std::sqrt(boost::math::binomial_coefficient<double>(n + 2, 2)),
                1e-14);
  }
}
