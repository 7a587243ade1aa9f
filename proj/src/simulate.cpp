#include "osearch/simulate.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>

#include <fmt/format.h>

namespace osearch {

namespace {

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

struct DftPlans {
  fftw_plan fwd;  // e^{-2 pi i m x / N} sums
  fftw_plan bwd;  // e^{+2 pi i m x / N} sums
};

DftPlans dft_plans(int length) {
  static std::map<int, DftPlans> cache;
  std::lock_guard<std::mutex> lock(plan_mutex());
  auto it = cache.find(length);
  if (it != cache.end()) return it->second;
  std::vector<cd> dummy(static_cast<size_t>(length));
  auto* buf = reinterpret_cast<fftw_complex*>(dummy.data());
  DftPlans p;
  p.fwd = fftw_plan_dft_1d(length, buf, buf, FFTW_FORWARD,
                           FFTW_ESTIMATE | FFTW_UNALIGNED);
  p.bwd = fftw_plan_dft_1d(length, buf, buf, FFTW_BACKWARD,
                           FFTW_ESTIMATE | FFTW_UNALIGNED);
  require(p.fwd && p.bwd, "dft_plans: FFTW plan creation failed");
  cache.emplace(length, p);
  return p;
}

void run_dft(fftw_plan plan, std::vector<cd>& buf) {
  auto* raw = reinterpret_cast<fftw_complex*>(buf.data());
  fftw_execute_dft(plan, raw, raw);
}

}  // namespace

AlgorithmSpec build_algorithm(const std::vector<std::vector<cd>>& p, int n,
                              const Tolerances& tol, BuildReport* report) {
  require(n >= 1, "build_algorithm: n must be positive");
  const int k = static_cast<int>(p.size()) - 1;
  require(k >= 1, "build_algorithm: need at least two factor polynomials");
  const int N = 2 * n;
  DftPlans plans = dft_plans(N);

  // Values p_t(z_m) at z_m = e^{i pi m / n} for all m: an unnormalized
  // backward DFT of the zero-padded coefficient vector.
  std::vector<std::vector<cd>> vals(p.size());
  for (size_t t = 0; t < p.size(); ++t) {
    require(static_cast<int>(p[t].size()) <= n,
            fmt::format("build_algorithm: factor {} longer than n", t));
    std::vector<cd> buf(static_cast<size_t>(N), cd(0.0, 0.0));
    for (size_t j = 0; j < p[t].size(); ++j) buf[j] = p[t][j];
    run_dft(plans.bwd, buf);
    vals[t] = std::move(buf);
  }

  AlgorithmSpec alg;
  alg.n = n;
  alg.k = k;
  alg.d.assign(static_cast<size_t>(k), std::vector<cd>(static_cast<size_t>(N), cd(1.0, 0.0)));
  BuildReport rep;
  for (int t = 1; t <= k; ++t) {
    for (int m = t % 2; m < N; m += 2) {
      const cd num = vals[static_cast<size_t>(t)][static_cast<size_t>(m)];
      const cd den = vals[static_cast<size_t>(t - 1)][static_cast<size_t>(m)];
      const double anum = std::abs(num);
      const double aden = std::abs(den);
      // The moduli must agree on this parity class; compare the squares,
      // whose mismatch is linear in the coefficient-level residuals.
      rep.max_modulus_mismatch =
          std::max(rep.max_modulus_mismatch, std::abs(anum * anum - aden * aden));
      if (aden < tol.phase_zero) {
        ++rep.zero_denominators;
        continue;  // phase stays 1
      }
      cd ratio = num / den;
      ratio /= std::abs(ratio);  // exact unit modulus
      alg.d[static_cast<size_t>(t - 1)][static_cast<size_t>(m)] = ratio;
    }
  }
  if (report) *report = rep;
  require(rep.max_modulus_mismatch <= tol.eq_residual,
          fmt::format("build_algorithm: squared-modulus mismatch {} exceeds {}",
                      rep.max_modulus_mismatch, tol.eq_residual));
  return alg;
}

RunResult run_algorithm(const AlgorithmSpec& alg, int shift) {
  const int n = alg.n;
  const int N = 2 * n;
  require(shift >= 0 && shift < N, "run_algorithm: shift out of range");
  DftPlans plans = dft_plans(N);
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(N));

  // Instance: first half of the base string is marked; rotating by `shift`
  // moves the marked block.  The oracle phase at position x is -1 on marks.
  auto oracle_sign = [&](int x) {
    const int base = (x - shift % N + N) % N;
    return base < n ? -1.0 : 1.0;
  };

  // Uniform position-basis start state.
  std::vector<cd> u(static_cast<size_t>(N), cd(inv_sqrt_n, 0.0));

  for (int t = 1; t <= alg.k; ++t) {
    for (int x = 0; x < N; ++x) u[static_cast<size_t>(x)] *= oracle_sign(x);
    // Momentum coordinates: v_m = sum_x u_x e^{+2 pi i m x / N} / sqrt(N).
    run_dft(plans.bwd, u);
    const auto& d = alg.d[static_cast<size_t>(t - 1)];
    for (int m = 0; m < N; ++m)
      u[static_cast<size_t>(m)] *= d[static_cast<size_t>(m)] / static_cast<double>(N);
    // Back to positions: u_x = sum_m v_m e^{-2 pi i m x / N} / sqrt(N);
    // the two 1/sqrt(N) factors were folded into the 1/N above.
    run_dft(plans.fwd, u);
  }

  RunResult res;
  double norm2 = 0.0;
  for (const cd& a : u) norm2 += std::norm(a);
  res.norm_drift = std::abs(std::sqrt(norm2) - 1.0);
  const int r = shift % n;
  const double sgn = (alg.k % 2 == 0) ? 1.0 : -1.0;
  const cd amp = (u[static_cast<size_t>(r)] + sgn * u[static_cast<size_t>(r + n)]) /
                 std::sqrt(2.0);
  res.success = std::norm(amp);
  res.state = Eigen::Map<const Eigen::VectorXcd>(u.data(), N);
  return res;
}

}  // namespace osearch
