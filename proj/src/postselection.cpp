#include "hybridswap/postselection.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "hybridswap/entanglement.hpp"
#include "hybridswap/errors.hpp"
#include "hybridswap/tolerances.hpp"

namespace hybridswap {

namespace {

constexpr double kSlack = 1e-9;

double require_positive_probability(const QubitBlock& block, const char* what) {
  const double P = block.success_probability();
  if (!(P > 0.0)) throw std::invalid_argument(std::string(what) + ": post-selection probability is zero");
  return P;
}

}  // namespace

void QubitBlock::validate() const {
  std::ostringstream os;
  if (p00 < -kSlack || p01 < -kSlack || p10 < -kSlack || p11 < -kSlack) {
    os << "qubit block has a negative probability (" << p00 << ", " << p01 << ", " << p10 << ", " << p11 << ")";
  } else if (p00 + p01 + p10 + p11 > 1.0 + kSlack) {
    os << "qubit block probabilities sum to " << p00 + p01 + p10 + p11;
  } else if (std::norm(d) > p01 * p10 + kSlack) {
    os << "qubit block coherence |d|^2 = " << std::norm(d) << " exceeds p01 p10 = " << p01 * p10;
  } else {
    return;
  }
  throw InvariantViolation(os.str());
}

double QubitBlock::x() const { return 2.0 * p01 * p10 / require_positive_probability(*this, "QubitBlock::x"); }

double QubitBlock::y() const { return 2.0 * std::norm(d) / require_positive_probability(*this, "QubitBlock::y"); }

FockDensityMatrix QubitBlock::as_state() const {
  CMatrix m = CMatrix::Zero(4, 4);
  m(0, 0) = p00;
  m(1, 1) = p01;
  m(2, 2) = p10;
  m(3, 3) = p11;
  m(1, 2) = d;
  m(2, 1) = std::conj(d);
  const double tr = m.trace().real();
  if (!(tr > 0.0)) throw std::invalid_argument("QubitBlock::as_state: block has zero weight");
  return FockDensityMatrix::uniform(2, 1, m / tr);
}

QubitBlock extract_qubit_block(const FockDensityMatrix& rho) {
  if (rho.modes() != 2) throw std::invalid_argument("extract_qubit_block: two-mode state expected");
  if (rho.cutoff(0) < 1 || rho.cutoff(1) < 1) throw std::invalid_argument("extract_qubit_block: cutoffs must be >= 1");
  QubitBlock b;
  b.p00 = rho.element({0, 0}, {0, 0}).real();
  b.p01 = rho.element({0, 1}, {0, 1}).real();
  b.p10 = rho.element({1, 0}, {1, 0}).real();
  b.p11 = rho.element({1, 1}, {1, 1}).real();
  b.d = rho.element({0, 1}, {1, 0});
  b.validate();
  return b;
}

PurifiedState purify(const QubitBlock& block) {
  block.validate();
  const double P = require_positive_probability(block, "purify");
  CMatrix m = CMatrix::Zero(4, 4);
  m(0, 0) = m(3, 3) = block.p00 * block.p11;
  m(1, 1) = m(2, 2) = block.p01 * block.p10;
  m(1, 2) = m(2, 1) = std::norm(block.d);
  return PurifiedState{FockDensityMatrix::uniform(2, 1, m / P), P};
}

CMatrix purify_by_projection(const FockDensityMatrix& rho) {
  if (rho.modes() != 2) throw std::invalid_argument("purify_by_projection: two-mode state expected");
  const auto small = resize(rho, {1, 1});
  const auto both = tensor(small, small);  // A1, D1, A2, D2
  // Rail r of a site: r = 0 puts the photon in copy 1.
  auto index = [&](int rail_a, int rail_d) {
    const int occ[] = {rail_a == 0, rail_d == 0, rail_a == 1, rail_d == 1};
    return static_cast<Eigen::Index>(both.basis().index(occ));
  };
  CMatrix out(4, 4);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) out(i, j) = both.data()(index(i / 2, i % 2), index(j / 2, j % 2));
  }
  return out;
}

CMatrix rail_rotation(double delta, double phi) {
  const double cd = std::cos(delta), sd = std::sin(delta), cp = std::cos(phi), sp = std::sin(phi);
  Eigen::Matrix4d R;
  R << cd * cp, cd * sp, sd * cp, sd * sp,
       -cd * sp, cd * cp, -sd * sp, sd * cp,
       -sd * cp, -sd * sp, cd * cp, cd * sp,
       sd * sp, -sd * cp, -cd * sp, cd * cp;
  return R.cast<cplx>();
}

double chsh_correlation(const QubitBlock& block, double theta_a, double theta_d) {
  const double x = block.x();
  const double y = block.y();
  return 0.5 * ((1 - 2 * x + y) * std::cos(2 * (theta_a - theta_d)) + (1 - 2 * x - y) * std::cos(2 * (theta_a + theta_d)));
}

double chsh_correlation_explicit(const FockDensityMatrix& rho_ps, double theta_a, double theta_d) {
  if (rho_ps.dim() != 4) throw std::invalid_argument("chsh_correlation_explicit: 4x4 post-selected state expected");
  const CMatrix R = rail_rotation(theta_a, theta_d);
  const CMatrix rotated = R.adjoint() * rho_ps.data() * R;
  // Diagonal order A1D1, A1D2, A2D1, A2D2.
  return (rotated(0, 0) - rotated(1, 1) - rotated(2, 2) + rotated(3, 3)).real();
}

double chsh_correlation_explicit(const QubitBlock& block, double theta_a, double theta_d) {
  return chsh_correlation_explicit(purify(block).rho_ps, theta_a, theta_d);
}

ChshAngles ChshAngles::canonical() {
  constexpr double pi = std::numbers::pi;
  return ChshAngles{0.0, pi / 4, 3 * pi / 8, pi / 8};
}

double chsh_s(const QubitBlock& block, const ChshAngles& t) {
  const auto rho_ps = purify(block).rho_ps;
  auto E = [&](double a, double d) { return chsh_correlation_explicit(rho_ps, a, d); };
  return std::abs(E(t.a, t.d) + E(t.a_prime, t.d) - E(t.a, t.d_prime) + E(t.a_prime, t.d_prime));
}

QubitTeleportResult teleport_qubit(const QubitBlock& block, cplx alpha, cplx beta) {
  const double norm = std::norm(alpha) + std::norm(beta);
  if (std::abs(norm - 1.0) > tol::kQubitNorm) {
    std::ostringstream os;
    os << "teleport_qubit: input qubit has |alpha|^2 + |beta|^2 = " << norm;
    throw std::invalid_argument(os.str());
  }
  const auto pur = purify(block);
  const CMatrix resource = pur.rho_ps.data() * pur.P;  // unnormalized two-copy block
  // Input rails: 0 = X, 1 = Y.
  Eigen::Vector2cd in(alpha, beta);
  const CMatrix rho_in = in * in.adjoint();
  // Bell projection (|Y A1> + |X A2>)/sqrt(2) on (input, A); (input, a) pairs below.
  const std::array<std::array<int, 2>, 2> bell = {{{1, 0}, {0, 1}}};
  Eigen::Matrix2cd out = Eigen::Matrix2cd::Zero();
  for (const auto& [in_r, a_r] : bell) {
    for (const auto& [in_c, a_c] : bell) {
      for (int dr = 0; dr < 2; ++dr) {
        for (int dc = 0; dc < 2; ++dc) out(dr, dc) += 0.5 * rho_in(in_r, in_c) * resource(a_r * 2 + dr, a_c * 2 + dc);
      }
    }
  }
  QubitTeleportResult res{FockDensityMatrix::uniform(1, 1, CMatrix::Zero(2, 2), false), 0.0, 0.0};
  res.success_prob = out.trace().real();
  if (!(res.success_prob > 0.0)) throw std::invalid_argument("teleport_qubit: zero success probability");
  const Eigen::Matrix2cd normalized = out / res.success_prob;
  res.rho_out = FockDensityMatrix::uniform(1, 1, normalized);
  res.fidelity = std::real(in.dot(normalized * in));
  return res;
}

double teleport_fidelity_closed_form(const QubitBlock& block, cplx alpha, cplx beta) {
  const double a2 = std::norm(alpha);
  const double b2 = std::norm(beta);
  const double x = block.x();
  const double y = block.y();
  return (a2 * a2 + b2 * b2) * x + 2 * a2 * b2 * (1 - x + y);
}

MonteCarloMean bloch_average_fidelity(const QubitBlock& block, std::size_t samples, std::uint64_t seed) {
  if (samples < 2) throw std::invalid_argument("bloch_average_fidelity: need at least two samples");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> cos_theta(-1.0, 1.0);
  std::uniform_real_distribution<double> azimuth(0.0, 2 * std::numbers::pi);
  double sum = 0, sum2 = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double c = cos_theta(rng);
    const double phi = azimuth(rng);
    const double a = std::sqrt((1 + c) / 2);
    const double b = std::sqrt((1 - c) / 2);
    const double f = teleport_qubit(block, a, std::polar(b, phi)).fidelity;
    sum += f;
    sum2 += f * f;
  }
  const double n = static_cast<double>(samples);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum2 - n * mean * mean) / (n - 1));
  return MonteCarloMean{mean, std::sqrt(var / n)};
}

PostSelectSummary summarize(const FockDensityMatrix& rho_ad) {
  PostSelectSummary s;
  s.block = extract_qubit_block(rho_ad);
  const auto pur = purify(s.block);
  s.P = pur.P;
  s.x = s.block.x();
  s.y = s.block.y();
  s.S = chsh_s(s.block);
  s.E_ps = log_negativity(pur.rho_ps).log_negativity;
  s.F_av = (1 + s.x + s.y) / 3;
  s.tele_success = s.P / 4;
  s.rho_ps = pur.rho_ps;
  return s;
}

nlohmann::json to_json(const PostSelectSummary& s) {
  return nlohmann::json{{"P", s.P},   {"x", s.x},         {"y", s.y},
                        {"S", s.S},   {"E_ps", s.E_ps},   {"F_av", s.F_av},
                        {"tele_success", s.tele_success}, {"rho_ps", to_json(s.rho_ps)}};
}

}  // namespace hybridswap
