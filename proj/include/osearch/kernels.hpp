#pragma once

#include <span>
#include <vector>

#include "osearch/poly.hpp"
#include "osearch/simulate.hpp"

// Compute kernels that dominate the pipeline's run time, each in a serial
// reference form and an OpenMP form.  The two must agree to within strict
// tolerances (enforced by tests); the benchmark target compares them.
namespace osearch::kernels {

enum class Exec { Serial, Parallel };

// Batch Clenshaw evaluation: out[i] = p(theta[i]).
void eval_many(const SymLaurentPoly& p, std::span<const double> theta,
               std::span<double> out, Exec exec);

// Minimum of p over a uniform closed grid of `points` angles on [0, pi].
// argmin_theta (if non-null) receives the minimizing angle.
double min_on_dense_grid(const SymLaurentPoly& p, int points, Exec exec,
                         double* argmin_theta = nullptr);

// p evaluated at the uniform family theta_m = pi m / (2n), m = 0..2n, via a
// type-I discrete cosine transform (serial; FFTW plan cached per size).
// p.n() must not exceed n + 1; shorter inputs are zero-padded.
std::vector<double> eval_uniform_dct(const SymLaurentPoly& p, int n);

// Raw type-I DCT (FFTW REDFT00): out_k = x_0 + (-1)^k x_{N-1}
//   + 2 sum_{j=1}^{N-2} x_j cos(pi j k / (N-1)).  Requires N >= 3.
std::vector<double> dct1(const std::vector<double>& x);

// Run the compiled algorithm against every shift.
SimulationReport simulate_all(const AlgorithmSpec& alg, Exec exec);

}  // namespace osearch::kernels
