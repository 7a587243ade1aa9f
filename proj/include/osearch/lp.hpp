#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "osearch/constraint.hpp"

namespace osearch {

// Angle grid on [0, pi].  Points born on the canonical uniform family
// theta = pi m / (2n) remember their index m so evaluation at all of them
// can be batched through a single cosine transform.
struct Grid {
  int n = 0;
  std::vector<double> theta;      // sorted ascending
  std::vector<int> uniform_m;     // parallel; m >= 0 for uniform points, -1 otherwise

  static Grid initial(int n);     // m = 0..2n inclusive

  int size() const { return static_cast<int>(theta.size()); }

  // Insert points, skipping any within tau of an existing point (or of an
  // earlier new point).  Returns how many were inserted.
  int add_dedup(std::span<const double> pts, double tau);
};

enum class RowKind : uint8_t {
  Interior,  // q_t(theta) - beta >= 0, 1 <= t <= k-1
  FixedCap,  // beta <= q_t(theta) for fixed t in {0, k}
  BetaCap,   // beta <= 1
  BoxLo,     // x_v >= -bound
  BoxHi,     // x_v <= bound
};

// Stable identity of one LP row.  Rows survive grid growth (theta values are
// copied bit-exactly), so a basis can be rebound to a refined instance.
struct RowRef {
  RowKind kind;
  int t = -1;          // Interior / FixedCap
  double theta = 0.0;  // Interior / FixedCap
  int var = -1;        // BoxLo / BoxHi

  bool operator==(const RowRef&) const = default;
};

struct LpOptions {
  bool fixed_rows = true;        // include FixedCap rows for q_0 and q_k
  double var_bound = 8.0;        // box half-width (sound: admissible tuples
                                 // have |c_j| <= 1, see tests)
  double time_budget_sec = 0.0;  // per-solve wall budget, 0 = unlimited
};

// max beta subject to every row;  variables are (x, beta) with x the free
// vector of an eliminated ConstraintSystem.  Every row reads
//   a . x - gamma * beta + d >= 0
// with gamma = 1 on rows that cap beta and 0 on box rows.
struct LpInstance {
  const ConstraintSystem* sys = nullptr;
  const Grid* grid = nullptr;
  LpOptions opt;
  std::vector<RowRef> rows;  // Interior rows first (t-major, grid order),
                             // then FixedCap, BetaCap, BoxLo, BoxHi

  int num_x() const { return sys->num_free; }
  int dim() const { return sys->num_free + 1; }

  // Materialize one row.  a must have size num_x().
  void row_data(const RowRef& r, Eigen::VectorXd& a, double& gamma,
                double& d) const;
  double fixed_value(int t, double theta) const;  // q_0 / q_k evaluation
};

LpInstance build_lp(const ConstraintSystem& sys, const Grid& grid,
                    const LpOptions& opt = {});

enum class LpStatus { Optimal, IterationLimit, NumericalTrouble };

struct LpSolution {
  LpStatus status = LpStatus::NumericalTrouble;
  double beta = 0.0;
  Eigen::VectorXd x;
  std::vector<RowRef> basis;   // active set at the optimum (dim() rows)
  int pivots = 0;
  int refactorizations = 0;
  double primal_residual = 0.0;  // most violated row (0 if none)
  double dual_residual = 0.0;    // dual infeasibility: most negative
                                 // multiplier (simplex) or max-norm of the
                                 // stationarity residual (interior point)
  double gap = 0.0;              // |beta - dual objective|
};

// Solver interface.  Implementations must be deterministic for a fixed
// instance and warm basis.
class LpBackend {
 public:
  virtual ~LpBackend() = default;
  virtual std::string name() const = 0;
  virtual LpSolution solve(const LpInstance& lp, const Tolerances& tol,
                           const std::vector<RowRef>* warm_basis) = 0;
};

// "embedded": production path, no external dependency; picks between the
//   two embedded solvers by instance size.
// "embedded-simplex": dual simplex on the active-set formulation,
//   LAPACK-factored basis with eta updates, cosine-transform pricing.
//   Exact vertices and warm starts; intended for small instances.
// "embedded-ipm": primal-dual interior-point (Mehrotra predictor-corrector)
//   on the same rows, normal equations assembled through adjoint cosine
//   transforms.  Indifferent to the degeneracy that stalls pivoting on
//   large grids; no warm start (returns an empty basis).
// "scipy": serializes the instance and shells out to tools/lp_solve.py
//   (scipy.optimize.linprog).  Cross-check path, small instances only.
std::unique_ptr<LpBackend> make_lp_backend(const std::string& name);

// CPLEX-LP text export of the same optimization problem.  For an
// uneliminated system this is the full formulation with one variable a_t_j
// per interior coefficient, the objective variable named b, and the linking
// and normalization constraints as explicit equalities.
void write_lp_text(const LpInstance& lp, const std::string& path);

}  // namespace osearch
