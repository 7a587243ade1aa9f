// Independent reference implementations ("oracles") used to validate the
// library.  Everything here is written from the defining formulas with the
// most direct algorithm available (O(n^2) sums, explicit DFT matrices, dense
// scans), deliberately avoiding the code paths under test (Clenshaw, FFTs,
// companion/colleague matrices, simplex).  Expected values in the test files
// were produced by these functions and frozen.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using cd = std::complex<double>;

// --- direct trigonometric evaluation ---------------------------------------

// q(theta) = c_0 + 2 sum_{j>=1} c_j cos(j theta), summed term by term.
inline double eval_cos_sum(const std::vector<double>& c, double theta) {
  double v = c.empty() ? 0.0 : c[0];
  for (size_t j = 1; j < c.size(); ++j)
    v += 2.0 * c[j] * std::cos(static_cast<double>(j) * theta);
  return v;
}

// Same in the Chebyshev basis: p(x) = sum_j b_j T_j(x), with T_j computed
// from the angle form T_j(cos t) = cos(j t).
inline double eval_cheb_sum(const std::vector<double>& b, double x) {
  const double t = std::acos(std::clamp(x, -1.0, 1.0));
  double v = 0.0;
  for (size_t j = 0; j < b.size(); ++j)
    v += b[j] * std::cos(static_cast<double>(j) * t);
  return v;
}

// Closed form of the normalized all-ones autocorrelation:
// (1/n) |sum_{j<n} e^{i j theta}|^2.
inline double fejer_closed_form(int n, double theta) {
  cd s(0.0, 0.0);
  for (int j = 0; j < n; ++j) s += std::polar(1.0, j * theta);
  return std::norm(s) / n;
}

// --- autocorrelation and Gram forms ----------------------------------------

// c_m = sum_j b_{j+m} conj(b_j), the (one-sided) autocorrelation.
inline std::vector<double> autocorrelation(const std::vector<cd>& b, int n) {
  std::vector<double> c(static_cast<size_t>(n), 0.0);
  for (int m = 0; m < n; ++m) {
    cd s(0.0, 0.0);
    for (int j = 0; j + m < static_cast<int>(b.size()); ++j)
      s += b[static_cast<size_t>(j + m)] * std::conj(b[static_cast<size_t>(j)]);
    c[static_cast<size_t>(m)] = s.real();
  }
  return c;
}

// q(theta) = psi^* Q psi with psi = (1, z, ..., z^{n-1}), z = e^{i theta}.
// This is the functional meaning of a Gram matrix's diagonal sums and is the
// reference for any Gram -> polynomial conversion.
inline double gram_quadratic_form(const Eigen::MatrixXcd& Q, double theta) {
  const int n = static_cast<int>(Q.rows());
  Eigen::VectorXcd psi(n);
  for (int j = 0; j < n; ++j) psi(j) = std::polar(1.0, j * theta);
  return (psi.adjoint() * Q * psi)(0).real();
}

// --- dense-scan minimization ------------------------------------------------

// Minimum of the cosine series over [0, pi]: dense scan plus golden-section
// polish of the best bracket.  `points` controls scan density.
inline double min_on_circle(const std::vector<double>& c, int points = 200001,
                            double* arg = nullptr) {
  double best = std::numeric_limits<double>::infinity();
  int best_i = 0;
  for (int i = 0; i < points; ++i) {
    const double th = M_PI * i / (points - 1);
    const double v = eval_cos_sum(c, th);
    if (v < best) {
      best = v;
      best_i = i;
    }
  }
  double lo = M_PI * std::max(0, best_i - 1) / (points - 1);
  double hi = M_PI * std::min(points - 1, best_i + 1) / (points - 1);
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - gr * (hi - lo), b = lo + gr * (hi - lo);
  double fa = eval_cos_sum(c, a), fb = eval_cos_sum(c, b);
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    if (fa < fb) {
      hi = b; b = a; fb = fa;
      a = hi - gr * (hi - lo); fa = eval_cos_sum(c, a);
    } else {
      lo = a; a = b; fa = fb;
      b = lo + gr * (hi - lo); fb = eval_cos_sum(c, b);
    }
  }
  const double mid = 0.5 * (lo + hi);
  const double vm = eval_cos_sum(c, mid);
  if (arg) *arg = mid;
  return std::min(vm, best);
}

// --- explicit DFT-matrix quantum simulation ---------------------------------

// N x N unitary DFT matrix with entries e^{+2 pi i jl / N} / sqrt(N); its
// adjoint maps momentum amplitudes back to positions.
inline Eigen::MatrixXcd dft_matrix(int N) {
  Eigen::MatrixXcd W(N, N);
  for (int j = 0; j < N; ++j)
    for (int l = 0; l < N; ++l)
      W(j, l) = std::polar(1.0 / std::sqrt(static_cast<double>(N)),
                           2.0 * M_PI * j * l / N);
  return W;
}

// One query step as an explicit matrix product: oracle sign flip in the
// position basis for the instance with first marked position `shift`,
// then the diagonal momentum phase `d` applied between DFT conjugations.
// Positions x with (x - shift mod 2n) < n carry sign -1.
inline Eigen::VectorXcd step_matrix_oracle(const Eigen::VectorXcd& state,
                                           const std::vector<cd>& d, int n,
                                           int shift) {
  const int N = 2 * n;
  Eigen::VectorXcd u = state;
  for (int x = 0; x < N; ++x) {
    const int rel = ((x - shift) % N + N) % N;
    if (rel < n) u(x) = -u(x);
  }
  const Eigen::MatrixXcd W = dft_matrix(N);
  Eigen::VectorXcd mom = W * u;  // momentum amplitudes (forward kernel e^{+})
  for (int m = 0; m < N; ++m) mom(m) *= d[static_cast<size_t>(m)];
  return W.adjoint() * mom;
}

// Full explicit-matrix run: uniform start, k steps, success amplitude read
// out by combining the two positions that answer `shift mod n`.
inline double run_matrix_oracle(const std::vector<std::vector<cd>>& d, int n,
                                int shift, double* norm_drift = nullptr,
                                Eigen::VectorXcd* final_state = nullptr) {
  const int N = 2 * n;
  Eigen::VectorXcd u =
      Eigen::VectorXcd::Constant(N, cd(1.0 / std::sqrt(static_cast<double>(N)), 0.0));
  for (const std::vector<cd>& dt : d) u = step_matrix_oracle(u, dt, n, shift);
  if (norm_drift) *norm_drift = std::abs(u.norm() - 1.0);
  if (final_state) *final_state = u;
  const int r = ((shift % n) + n) % n;
  const double sgn = (d.size() % 2 == 0) ? 1.0 : -1.0;
  const cd amp = (u(r) + sgn * u(r + n)) / std::sqrt(2.0);
  return std::norm(amp);
}

// --- random instances --------------------------------------------------------

// Deterministic RNG for reproducible test cases.
inline std::mt19937_64& rng() {
  static std::mt19937_64 gen(0x05EA9C11u);
  return gen;
}

inline std::vector<cd> random_complex_vector(int len, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<cd> v(static_cast<size_t>(len));
  for (cd& z : v) z = cd(g(rng()), g(rng()));
  return v;
}

inline std::vector<double> random_real_vector(int len, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> v(static_cast<size_t>(len));
  for (double& x : v) x = g(rng());
  return v;
}

}  // namespace oracle
