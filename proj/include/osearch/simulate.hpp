#pragma once

#include <Eigen/Dense>
#include <vector>

#include "osearch/poly.hpp"

namespace osearch {

// Exact query algorithm in compiled form: k diagonal-in-momentum unitaries
// for dimension N = 2n.  d[t-1][m] is the phase applied to momentum m after
// query t; every entry has unit modulus.
struct AlgorithmSpec {
  int n = 0;
  int k = 0;
  std::vector<std::vector<cd>> d;
};

struct BuildReport {
  double max_modulus_mismatch = 0.0;  // max | |p_t|^2 - |p_{t-1}|^2 | on the
                                      // phase set (linear in coefficient error)
  int zero_denominators = 0;          // ratios skipped as near-0/0 (phase := 1)
};

// Compile factor polynomials p_0..p_k (component t has degree < n) into the
// momentum phases d_t(m) = p_t(z_m) / p_{t-1}(z_m) at z_m = e^{i pi m / n},
// taken over the parity class m == t (mod 2) and 1 elsewhere.  The moduli
// |p_t(z_m)| and |p_{t-1}(z_m)| must agree on that class for the ratio to
// be a phase; tol.eq_residual bounds the squared-modulus mismatch.
AlgorithmSpec build_algorithm(const std::vector<std::vector<cd>>& p, int n,
                              const Tolerances& tol,
                              BuildReport* report = nullptr);

// One run of the compiled algorithm against the rotated instance with the
// marked boundary at `shift` (0 <= shift < 2n).  Returns the final state in
// the position basis and the success probability of the two-point
// measurement at the boundary.
struct RunResult {
  Eigen::VectorXcd state;  // length 2n, position basis
  double success = 0.0;
  double norm_drift = 0.0;  // | ||state|| - 1 |
};
RunResult run_algorithm(const AlgorithmSpec& alg, int shift);

struct SimulationReport {
  std::vector<double> success;  // per shift, length 2n
  double min_success = 1.0;
  double max_norm_drift = 0.0;
};

}  // namespace osearch
