#include "osearch/kernels.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace osearch::kernels {

namespace {

// FFTW planning is not thread-safe; execution through the new-array
// interface is.  Plans are created once per size with FFTW_UNALIGNED so any
// caller-provided buffer is acceptable.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

fftw_plan dct1_plan(int length) {
  static std::map<int, fftw_plan> cache;
  std::lock_guard<std::mutex> lock(plan_mutex());
  auto it = cache.find(length);
  if (it != cache.end()) return it->second;
  std::vector<double> dummy(static_cast<size_t>(length));
  fftw_plan p = fftw_plan_r2r_1d(length, dummy.data(), dummy.data(),
                                 FFTW_REDFT00, FFTW_ESTIMATE | FFTW_UNALIGNED);
  require(p != nullptr, "dct1_plan: FFTW plan creation failed");
  cache.emplace(length, p);
  return p;
}

}  // namespace

std::vector<double> dct1(const std::vector<double>& x) {
  require(x.size() >= 3, "dct1: need at least three samples");
  std::vector<double> in = x;
  std::vector<double> out(x.size());
  fftw_execute_r2r(dct1_plan(static_cast<int>(x.size())), in.data(), out.data());
  return out;
}

std::vector<double> eval_uniform_dct(const SymLaurentPoly& p, int n) {
  require(n >= 1, "eval_uniform_dct: n must be positive");
  require(p.n() <= 2 * n + 1, "eval_uniform_dct: polynomial too long for family");
  // REDFT00 of length 2n+1 maps X_j to
  //   Y_m = X_0 + (-1)^m X_{2n} + 2 sum_{j=1}^{2n-1} X_j cos(pi j m / (2n)),
  // which is exactly c_0 + 2 sum_j c_j cos(j theta_m) for zero-padded c with
  // indices below 2n; the endpoint index 2n carries DCT weight 1, so it
  // needs its coefficient doubled to match the evaluation convention.
  const int len = 2 * n + 1;
  std::vector<double> in(static_cast<size_t>(len), 0.0);
  for (int j = 0; j < p.n(); ++j) in[static_cast<size_t>(j)] = p.c[static_cast<size_t>(j)];
  if (p.n() == len) in[static_cast<size_t>(len - 1)] *= 2.0;
  std::vector<double> out(static_cast<size_t>(len));
  fftw_execute_r2r(dct1_plan(len), in.data(), out.data());
  return out;
}

void eval_many(const SymLaurentPoly& p, std::span<const double> theta,
               std::span<double> out, Exec exec) {
  require(theta.size() == out.size(), "eval_many: size mismatch");
  const auto m = static_cast<std::ptrdiff_t>(theta.size());
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < m; ++i) out[static_cast<size_t>(i)] = p.eval(theta[static_cast<size_t>(i)]);
  } else {
    for (std::ptrdiff_t i = 0; i < m; ++i) out[static_cast<size_t>(i)] = p.eval(theta[static_cast<size_t>(i)]);
  }
}

double min_on_dense_grid(const SymLaurentPoly& p, int points, Exec exec,
                         double* argmin_theta) {
  require(points >= 2, "min_on_dense_grid: need at least two points");
  const double step = M_PI / (points - 1);
  double best = std::numeric_limits<double>::infinity();
  std::ptrdiff_t best_i = 0;
  if (exec == Exec::Parallel) {
#pragma omp parallel
    {
      double local = std::numeric_limits<double>::infinity();
      std::ptrdiff_t local_i = 0;
#pragma omp for schedule(static) nowait
      for (std::ptrdiff_t i = 0; i < points; ++i) {
        const double v = p.eval(step * static_cast<double>(i));
        if (v < local || (v == local && i < local_i)) {
          local = v;
          local_i = i;
        }
      }
#pragma omp critical
      {
        if (local < best || (local == best && local_i < best_i)) {
          best = local;
          best_i = local_i;
        }
      }
    }
  } else {
    for (std::ptrdiff_t i = 0; i < points; ++i) {
      const double v = p.eval(step * static_cast<double>(i));
      if (v < best) {
        best = v;
        best_i = i;
      }
    }
  }
  if (argmin_theta) *argmin_theta = step * static_cast<double>(best_i);
  return best;
}

SimulationReport simulate_all(const AlgorithmSpec& alg, Exec exec) {
  const int shifts = 2 * alg.n;
  SimulationReport rep;
  rep.success.assign(static_cast<size_t>(shifts), 0.0);
  double worst_drift = 0.0;
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static) reduction(max : worst_drift)
    for (int s = 0; s < shifts; ++s) {
      RunResult r = run_algorithm(alg, s);
      rep.success[static_cast<size_t>(s)] = r.success;
      worst_drift = std::max(worst_drift, r.norm_drift);
    }
  } else {
    for (int s = 0; s < shifts; ++s) {
      RunResult r = run_algorithm(alg, s);
      rep.success[static_cast<size_t>(s)] = r.success;
      worst_drift = std::max(worst_drift, r.norm_drift);
    }
  }
  rep.max_norm_drift = worst_drift;
  rep.min_success = *std::min_element(rep.success.begin(), rep.success.end());
  return rep;
}

}  // namespace osearch::kernels
