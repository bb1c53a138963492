#include "hybridswap/entanglement.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace hybridswap {

NegativityReport log_negativity(const FockDensityMatrix& rho, std::span<const int> part) {
  if (!rho.normalized()) throw std::invalid_argument("log_negativity: input state must be normalized");
  if (part.empty() || static_cast<int>(part.size()) >= rho.modes()) {
    throw std::invalid_argument("log_negativity: the transposed part must be a proper nonempty subset of modes");
  }
  const auto pt = partial_transpose(rho, part);
  const auto eig = hermitian_eigen(pt.data());
  NegativityReport out;
  const double norm = eig.values.cwiseAbs().sum();
  out.min_pt_eigenvalue = eig.values.minCoeff();
  out.raw_log_negativity = std::log2(norm);
  out.entangled = out.min_pt_eigenvalue < -out.ppt_tolerance;
  // PPT within tolerance reports exactly zero.
  out.log_negativity = out.entangled ? std::max(0.0, out.raw_log_negativity) : 0.0;
  out.negativity = out.entangled ? std::max(0.0, (norm - 1.0) / 2.0) : 0.0;
  return out;
}

NegativityReport log_negativity(const FockDensityMatrix& rho, std::initializer_list<int> part) {
  return log_negativity(rho, std::span<const int>(part.begin(), part.size()));
}

NegativityReport log_negativity(const FockDensityMatrix& rho) {
  if (rho.modes() != 2) throw std::invalid_argument("log_negativity: two-mode state expected");
  return log_negativity(rho, {1});
}

std::vector<double> gain_grid(double lo, double hi, int points) {
  if (points < 1) throw std::invalid_argument("gain_grid: need at least one point");
  if (points == 1) return {lo};
  std::vector<double> out(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (points - 1);
  return out;
}

std::vector<GainScanRow> gain_scan(const GainScanSpec& spec) {
  if (spec.r_values.empty() || spec.g_values.empty()) throw std::invalid_argument("gain_scan: empty scan grid");
  const FockDensityMatrix input = split_photon(spec.source);
  const std::size_t ng = spec.g_values.size();
  std::vector<GainScanRow> rows(spec.r_values.size() * ng);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].r = spec.r_values[i / ng];
    rows[i].g = spec.g_values[i % ng];
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    try {
      for (std::size_t i = next++; i < rows.size(); i = next++) {
        const ChannelSpec ch{rows[i].r, rows[i].g, spec.pre_loss, spec.post_loss, spec.resource_loss};
        rows[i].report = log_negativity(apply_channel(input, spec.teleported_mode, ch));
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = rows.size();
    }
  };
  unsigned workers = spec.workers ? spec.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, rows.size()));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return rows;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_gain_scan_csv(std::ostream& os, const std::vector<GainScanRow>& rows) {
  os << "r,g,log_negativity,negativity,min_pt_eigenvalue\n";
  for (const auto& row : rows) {
    os << format_double(row.r) << ',' << format_double(row.g) << ',' << format_double(row.report.log_negativity) << ','
       << format_double(row.report.negativity) << ',' << format_double(row.report.min_pt_eigenvalue) << '\n';
  }
}

}  // namespace hybridswap
