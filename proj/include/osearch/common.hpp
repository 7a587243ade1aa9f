#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace osearch {

using cd = std::complex<double>;

// Thrown for contract violations (bad arguments, malformed files, numerical
// failures the caller cannot recover from by retrying).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// All numeric thresholds used by the pipeline, in one place.  Defaults are
// the released values; tests pin them and the certificate records them.
struct Tolerances {
  double eq_residual = 1e-9;    // equality / modulus-match residual bound
  double delta_neg = 1e-7;      // beta* below -delta_neg  => infeasible
  double delta_pos = 0.0;       // certified minima must exceed this (strict)
  double dedup_theta = 1e-9;    // grid dedup radius, radians
  double root_residual = 1e-11; // scaled residual bound for polished roots
  double circle_pair = 1e-7;    // |.|-1 window for unit-circle root pairing
  double phase_zero = 1e-9;     // denominator cutoff for phase ratios
  double lp_feas = 1e-9;        // LP primal feasibility
  double lp_gap = 1e-9;         // LP duality gap
  int max_refine_iters = 200;   // refinement loop cap
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

}  // namespace osearch
