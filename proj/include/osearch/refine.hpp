#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "osearch/lp.hpp"
#include "osearch/poly.hpp"

namespace osearch {

// A critical point of a Chebyshev-basis polynomial on [-1, 1].
struct CriticalPoint {
  double x;          // abscissa in [-1, 1]
  double value;      // Q(x)
  double residual;   // |Q'(x)| after polishing, scaled
  bool converged;    // residual within tolerance
};

// All real roots of Q' in [-1, 1]: colleague-matrix eigenvalues, with
// degree-adaptive interval subdivision above `subdivide_degree`, then a
// Newton polish in extended precision.  Unconverged roots are reported, not
// dropped.
std::vector<CriticalPoint> critical_points(const ChebForm& q,
                                           const Tolerances& tol,
                                           int subdivide_degree = 256);

// Interior strict minima of q over theta in [0, pi] with q < 0, plus any
// negative endpoint.  Returned as theta values, ascending.
std::vector<double> negative_minima(const SymLaurentPoly& q,
                                    const Tolerances& tol);

// Global nonnegativity check by critical-point enumeration.
struct CertifyResult {
  bool nonneg = false;           // min_value > tol.delta_pos and all roots converged
  double min_value = 0.0;        // smallest value over critical points + endpoints
  double min_theta = 0.0;        // argmin as an angle
  int num_critical = 0;
  int num_unconverged = 0;
};
CertifyResult certify_nonnegative(const SymLaurentPoly& q,
                                  const Tolerances& tol);

enum class Verdict { Feasible, Infeasible, Inconclusive };

struct IterationLog {
  int iter;
  double beta;
  int grid_size;
  int new_points;
};

// Full output of one feasibility run, sufficient to re-verify offline.
struct FeasibilityCertificate {
  int n = 0;
  int k = 0;
  Verdict verdict = Verdict::Inconclusive;
  std::string detail;                 // human-readable reason
  double beta = 0.0;                  // final LP value
  std::vector<double> grid;           // final grid
  std::vector<SymLaurentPoly> q;      // q_0..q_k (feasible runs)
  std::vector<double> margins;        // certified min of q_t, t = 1..k
  std::vector<IterationLog> log;
  Tolerances tol;
  int lp_pivots_total = 0;
  double seconds = 0.0;
};

struct RefineOptions {
  LpBackend* backend = nullptr;       // required
  Tolerances tol;
  int max_iters = -1;                 // overrides tol.max_refine_iters if >= 0
  double time_limit_sec = 0.0;        // 0 = none; exceeding => Inconclusive
  std::string checkpoint_path;        // empty = no checkpointing
  int checkpoint_every = 1;           // iterations between checkpoint writes
  bool resume = false;                // load checkpoint_path before starting
  std::function<void(const IterationLog&)> progress;  // optional
};

// Cutting-plane feasibility loop: solve the grid LP, certify the candidate
// tuple, append the violated minima, repeat.  Grid-certain infeasibility
// (beta* < -delta_neg) and certified feasibility are definitive; tolerance
// escalation failures and resource limits yield Inconclusive.
FeasibilityCertificate refine_loop(int n, int k, const RefineOptions& opt);

struct SearchResult {
  int k = 0;
  int n_max = 0;
  std::vector<std::pair<int, Verdict>> probes;  // in probe order
  FeasibilityCertificate at_max;       // certificate at n_max
  FeasibilityCertificate at_max_plus;  // certificate at n_max + 1
};

// Largest n with a feasible size-(n, k) instance, by bisection on the
// monotone boundary.  The bracket [lo, hi] widens automatically if the
// verdict at an endpoint contradicts it.
SearchResult max_feasible_n(int k, int lo, int hi, const RefineOptions& opt);

}  // namespace osearch
