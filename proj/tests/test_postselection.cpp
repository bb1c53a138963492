#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hybridswap/channel.hpp"
#include "hybridswap/entanglement.hpp"
#include "hybridswap/errors.hpp"
#include "hybridswap/postselection.hpp"
#include "hybridswap/state_prep.hpp"
#include "test_support.hpp"

using namespace hybridswap;
using hybridswap::testing::ideal_swapped_state;
using hybridswap::testing::max_abs_diff;

namespace {

constexpr double kPi = std::numbers::pi;

// Valid block with a random phase on d; p11 forced to zero when asked.
QubitBlock random_block(std::mt19937_64& rng, bool zero_p11 = false) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (;;) {
    double w[4] = {u(rng), u(rng), u(rng), zero_p11 ? 0.0 : u(rng)};
    const double total = (w[0] + w[1] + w[2] + w[3]) / (0.5 + 0.5 * u(rng));
    QubitBlock b{w[0] / total, w[1] / total, w[2] / total, w[3] / total, 0.0};
    b.d = std::polar(u(rng) * std::sqrt(b.p01 * b.p10), 2 * kPi * u(rng));
    if (b.success_probability() > 1e-3) return b;
  }
}

// Independent route to the coincidence correlation: rotate each rail pair
// with its own 2x2 matrix and combine the four coincidence probabilities.
double correlation_by_kron(const QubitBlock& b, double ta, double td) {
  auto rot = [](double t) {
    Eigen::Matrix2cd m;
    m << std::cos(t), std::sin(t), -std::sin(t), std::cos(t);
    return m;
  };
  const Eigen::Matrix2cd ra = rot(ta), rd = rot(td);
  CMatrix R(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) R(i, j) = ra(i / 2, j / 2) * rd(i % 2, j % 2);
  const CMatrix rho = purify(b).rho_ps.data();
  const CMatrix out = R.adjoint() * rho * R;
  return (out(0, 0) - out(1, 1) - out(2, 2) + out(3, 3)).real();
}

}  // namespace

TEST(QubitBlock, ExtractFromKnownStates) {
  const auto b = extract_qubit_block(ideal_swapped_state(0.7658));
  EXPECT_NEAR(b.p00, 0.2068, 1e-4);
  EXPECT_NEAR(b.p01, 0.2932, 1e-4);
  EXPECT_NEAR(b.p10, 0.5, 1e-15);
  EXPECT_NEAR(b.p11, 0.0, 1e-15);
  EXPECT_NEAR(b.d.real(), 0.3829, 1e-4);

  const auto bell = extract_qubit_block(FockDensityMatrix::pure(split_photon_ket(0.5)));
  EXPECT_NEAR(bell.p00, 0, 1e-15);
  EXPECT_NEAR(bell.p01, 0.5, 1e-15);
  EXPECT_NEAR(bell.p10, 0.5, 1e-15);
  EXPECT_NEAR(std::abs(bell.d), 0.5, 1e-15);

  const int vac[] = {0, 0};
  const auto v = extract_qubit_block(FockDensityMatrix::pure(FockKet::number_state(FockBasis::uniform(2, 3), vac)));
  EXPECT_EQ(v.p00, 1.0);
  EXPECT_EQ(v.p01 + v.p10 + v.p11, 0.0);
  EXPECT_THROW(summarize(FockDensityMatrix::pure(FockKet::number_state(FockBasis::uniform(2, 1), vac))),
               std::invalid_argument);
}

TEST(QubitBlock, ValidationRejectsExcessCoherence) {
  QubitBlock b{0.2, 0.3, 0.5, 0.0, 0.5};
  EXPECT_THROW(b.validate(), InvariantViolation);
  b.d = 0.3;
  EXPECT_NO_THROW(b.validate());
  b.p00 = -0.1;
  EXPECT_THROW(b.validate(), InvariantViolation);
}

TEST(Purify, MaximalCoherenceGivesBellState) {
  const QubitBlock b{0.37, 0.21, 0.42, 0.0, std::sqrt(0.21 * 0.42)};
  const auto pur = purify(b);
  Eigen::Vector4cd bell(0, 1 / std::sqrt(2.0), 1 / std::sqrt(2.0), 0);
  EXPECT_NEAR(max_abs_diff(pur.rho_ps.data(), bell * bell.adjoint()), 0.0, 1e-15);
  EXPECT_NEAR(pur.P, 2 * 0.21 * 0.42, 1e-15);
}

TEST(Purify, MatchesExplicitTwoCopyProjection) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const auto b = random_block(rng);
    const auto pur = purify(b);
    const CMatrix projected = purify_by_projection(b.as_state());
    const double tr = b.p00 + b.p01 + b.p10 + b.p11;
    EXPECT_LT(max_abs_diff(projected, pur.rho_ps.data() * pur.P / (tr * tr)), 1e-14);
  }
}

TEST(Purify, DephasedBlockIsSeparable) {
  const auto pur = purify(QubitBlock{0.3, 0.3, 0.4, 0.0, 0.0});
  EXPECT_LE(log_negativity(pur.rho_ps).log_negativity, 1e-12);
  EXPECT_THROW(purify(QubitBlock{1, 0, 0, 0, 0}), std::invalid_argument);
}

TEST(Purify, NeverDecreasesEntanglementOfCoherentBlocks) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    auto b = random_block(rng, true);
    b.d = std::polar(std::sqrt(b.p01 * b.p10), std::arg(b.d));
    const double e_block = log_negativity(b.as_state()).log_negativity;
    EXPECT_GE(log_negativity(purify(b).rho_ps).log_negativity, e_block - 1e-12);
  }
}

// With partial coherence the two-copy projection squares the coherence ratio
// s = |d|/sqrt(p01 p10): E drops from log2(1 + s) to log2(1 + s^2) here.
TEST(Purify, PartialCoherenceCanLoseEntanglement) {
  const double s = 0.5;
  const QubitBlock b{0.0, 0.5, 0.5, 0.0, s * 0.5};
  EXPECT_NEAR(log_negativity(b.as_state()).log_negativity, std::log2(1 + s), 1e-12);
  EXPECT_NEAR(log_negativity(purify(b).rho_ps).log_negativity, std::log2(1 + s * s), 1e-12);
}

TEST(Summary, IdealSwapClosedForms) {
  for (double g : {0.3, 0.61, 0.77}) {
    const auto s = summarize(ideal_swapped_state(g));
    EXPECT_NEAR(s.P, g * g / 2, 1e-12);
    EXPECT_NEAR(s.x, 1.0, 1e-12);
    EXPECT_NEAR(s.y, 1.0, 1e-12);
    EXPECT_NEAR(s.S, 2 * std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(s.F_av, 1.0, 1e-12);
    EXPECT_NEAR(s.E_ps, 1.0, 1e-9);
    EXPECT_NEAR(s.tele_success, s.P / 4, 1e-15);
  }
}

TEST(Summary, ChannelOutputAtHighSqueezing) {
  const auto out = apply_channel(split_photon({0.5, std::nullopt, 1}), 1, ChannelSpec::optimal(1.01));
  const auto s = summarize(out);
  EXPECT_NEAR(s.P, 0.2932, 1e-4);
  EXPECT_NEAR(s.S, 2 * std::sqrt(2.0), 1e-8);
  EXPECT_NEAR(s.F_av, 1.0, 1e-8);
  const auto j = to_json(s);
  for (const char* key : {"P", "x", "y", "S", "E_ps", "F_av", "tele_success", "rho_ps"}) EXPECT_TRUE(j.contains(key));
  EXPECT_LT(max_abs_diff(density_matrix_from_json(j["rho_ps"]).data(), s.rho_ps.data()), 1e-15);
}

TEST(Summary, InvariantsOnRandomBlocks) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 100; ++trial) {
    const auto b = random_block(rng);
    const double P = b.success_probability();
    EXPECT_NEAR(P, 2 * (b.p00 * b.p11 + b.p01 * b.p10), 1e-12);
    EXPECT_NEAR(b.x(), 2 * b.p01 * b.p10 / P, 1e-12);
    EXPECT_NEAR(b.y(), 2 * std::norm(b.d) / P, 1e-12);
    EXPECT_GE(b.x(), 0.0);
    EXPECT_LE(b.x(), 1.0 + 1e-12);
    EXPECT_LE(b.y(), b.x() + 1e-12);
  }
}

TEST(Chsh, CorrelationExamples) {
  const QubitBlock ideal{0.2, 0.3, 0.5, 0.0, std::sqrt(0.15)};
  EXPECT_NEAR(chsh_correlation(ideal, 0, 0), -1.0, 1e-12);
  EXPECT_NEAR(chsh_correlation_explicit(ideal, 0, 0), -1.0, 1e-12);
  // x = 1/2, y = 0: equal diagonal weights and no coherence.
  const QubitBlock flat{0.25, 0.25, 0.25, 0.25, 0.0};
  EXPECT_NEAR(flat.x(), 0.5, 1e-15);
  for (double a : {0.0, 0.4, 1.3})
    for (double d : {0.0, 0.7, 2.9}) {
      EXPECT_NEAR(chsh_correlation(flat, a, d), 0.0, 1e-15);
      EXPECT_NEAR(chsh_correlation_explicit(flat, a, d), 0.0, 1e-15);
    }
}

TEST(Chsh, RotationIsKroneckerProduct) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const auto b = random_block(rng);
    for (double a : {0.1, 0.8})
      for (double d : {-0.3, 1.9}) EXPECT_NEAR(chsh_correlation_explicit(b, a, d), correlation_by_kron(b, a, d), 1e-14);
  }
}

TEST(Chsh, ClosedFormMatchesMatrixPath) {
  std::mt19937_64 rng(37);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto b = random_block(rng);
    for (int i = 0; i < 10; ++i)
      for (int j = 0; j < 10; ++j) {
        const double ta = kPi * i / 10, td = kPi * j / 10;
        worst = std::max(worst, std::abs(chsh_correlation(b, ta, td) - chsh_correlation_explicit(b, ta, td)));
      }
  }
  EXPECT_LT(worst, 1e-10);
}

TEST(Chsh, CanonicalAnglesGiveClosedFormS) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const auto b = random_block(rng);
    EXPECT_NEAR(chsh_s(b), std::abs(std::sqrt(2.0) * (2 * b.x() + b.y() - 1)), 1e-12);
  }
  EXPECT_NEAR(chsh_s(QubitBlock{0.2, 0.3, 0.5, 0.0, std::sqrt(0.15)}), 2 * std::sqrt(2.0), 1e-12);
  // x = y = 0 needs p01 p10 = 0.
  EXPECT_NEAR(chsh_s(QubitBlock{0.5, 0.0, 0.25, 0.25, 0.0}), std::sqrt(2.0), 1e-12);
}

TEST(Chsh, IncoherentBlocksRespectClassicalBound) {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> angle(0.0, kPi);
  for (int trial = 0; trial < 200; ++trial) {
    auto b = random_block(rng);
    b.d = 0.0;
    const ChshAngles t{angle(rng), angle(rng), angle(rng), angle(rng)};
    EXPECT_LE(chsh_s(b, t), 2.0 + 1e-12);
    EXPECT_LE(chsh_s(b), 2.0 + 1e-12);
  }
}

TEST(Teleport, ClosedFormAndSuccessProbability) {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto b = random_block(rng);
    const double c = 2 * u(rng) - 1;
    const cplx alpha = std::sqrt((1 + c) / 2);
    const cplx beta = std::polar(std::sqrt((1 - c) / 2), 2 * kPi * u(rng));
    const auto res = teleport_qubit(b, alpha, beta);
    EXPECT_NEAR(res.fidelity, teleport_fidelity_closed_form(b, alpha, beta), 1e-12);
    EXPECT_NEAR(res.success_prob, b.success_probability() / 4, 1e-12);
    EXPECT_NO_THROW(res.rho_out.validate());
    EXPECT_NEAR(teleport_qubit(b, 1.0, 0.0).fidelity, b.x(), 1e-12);
  }
}

TEST(Teleport, PerfectBlockIsPerfect) {
  const QubitBlock ideal{0.2, 0.3, 0.5, 0.0, std::sqrt(0.15)};
  EXPECT_NEAR(teleport_qubit(ideal, 0.6, cplx(0, 0.8)).fidelity, 1.0, 1e-12);
  EXPECT_THROW(teleport_qubit(ideal, 0.6, 0.6), std::invalid_argument);
}

TEST(Teleport, BlochAverageMatchesClosedForm) {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 50; ++trial) {
    const auto b = random_block(rng);
    const auto mc = bloch_average_fidelity(b, 100000, 1000 + trial);
    const double expected = (1 + b.x() + b.y()) / 3;
    EXPECT_LE(std::abs(mc.mean - expected), 3 * mc.standard_error + 1e-12) << "trial " << trial;
  }
}
