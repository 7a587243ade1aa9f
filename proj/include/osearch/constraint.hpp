#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <span>
#include <vector>

#include "osearch/poly.hpp"

namespace osearch {

// The coefficient involution behind the progression constraints: V fixes
// index 0 and swaps j <-> n-j for 1 <= j <= n-1.  V^2 = I.
std::vector<double> apply_v(std::span<const double> a);

// Residual of the step-t linking constraint between consecutive coefficient
// vectors: r = (I + (-1)^t V)(a_t - a_prev).  The step is admissible iff
// r = 0.
std::vector<double> forward_residual(std::span<const double> a_t,
                                     std::span<const double> a_prev, int t);

// The unique middle vector admissible between its two neighbours:
//   a_t = (a_before + a_after)/2 + ((-1)^t / 2) V (a_before - a_after).
std::vector<double> eliminate_middle(std::span<const double> before,
                                     std::span<const double> after, int t);

// One contiguous block of free variables in the eliminated parametrization.
//   slack=false: the free half-coefficients c_1..c_{n-1} of q_t (c_0 = 1).
//   slack=true : the V-symmetrized slack of q_1 (odd k only); entry i feeds
//                coefficient pairs {j, n-j} with min(j, n-j) = i+1.
struct FreeBlock {
  int t;       // which polynomial the block parametrizes
  int offset;  // start index into the packed free vector
  int dim;
  bool slack;
};

// Affine parametrization of an admissible tuple q_0..q_k of symmetric
// Laurent polynomials with q_0 the Fejer kernel, q_k = 1, every interior
// mean fixed to 1, and every linking constraint satisfied identically:
//   coeffs(q_t) = base[t] + pmap[t] * x,  x in R^num_free.
//
// With eliminate=true the parametrization is minimal (the linking equations
// hold for every x, by construction).  With eliminate=false every interior
// coefficient is its own variable and the linking equations are kept as
// explicit rows; this form exists for text export and differential tests.
struct ConstraintSystem {
  int n = 0;
  int k = 0;
  bool eliminated = true;
  int num_free = 0;
  std::vector<FreeBlock> blocks;
  std::vector<Eigen::VectorXd> base;                // k+1 vectors, length n
  std::vector<Eigen::SparseMatrix<double>> pmap;    // k+1 maps, n x num_free

  // Explicit equality rows (eliminate=false): row * x = rhs.
  std::vector<Eigen::SparseVector<double>> eq_rows;
  std::vector<double> eq_rhs;
  std::vector<std::string> eq_names;

  // k = 1 leaves no freedom at all: the single linking constraint is a
  // fixed vector equation.  contradiction holds when it fails, and
  // contradiction_residual is the max-norm of the violation.
  bool contradiction = false;
  double contradiction_residual = 0.0;

  SymLaurentPoly reconstruct(int t, const Eigen::VectorXd& x) const;
  std::vector<SymLaurentPoly> reconstruct_all(const Eigen::VectorXd& x) const;

  // Gradient and constant of theta-evaluation as an affine functional of x:
  //   q_t(theta) = grad . x + constant.
  void eval_row(int t, double theta, Eigen::VectorXd& grad,
                double& constant) const;

  // q_t(theta) increment caused by the increment dx (gradient dot product,
  // but computed through the coefficient increment pmap[t] * dx).
  Eigen::VectorXd coeff_direction(int t, const Eigen::VectorXd& dx) const;
};

ConstraintSystem build_system(int n, int k, bool eliminate = true);

}  // namespace osearch
