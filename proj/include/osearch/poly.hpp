#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "osearch/common.hpp"

namespace osearch {

// Symmetric Laurent polynomial q(z) = sum_{|j|<n} c_{|j|} z^j with real
// coefficients, stored as the half vector c_0..c_{n-1}.  On the unit circle
// z = e^{i theta} it is the real trigonometric polynomial
//   q(theta) = c_0 + 2 * sum_{j>=1} c_j cos(j theta).
struct SymLaurentPoly {
  std::vector<double> c;  // c[j] = coefficient of z^j and z^{-j}

  SymLaurentPoly() = default;
  explicit SymLaurentPoly(std::vector<double> half) : c(std::move(half)) {}

  int n() const { return static_cast<int>(c.size()); }

  // Highest index with a nonzero coefficient (0 for the zero/constant poly).
  int degree(double tol = 0.0) const;

  double eval(double theta) const;          // Clenshaw recurrence
  double eval_extended(double theta) const; // long double Clenshaw

  bool operator==(const SymLaurentPoly&) const = default;
};

// Same function expressed in the Chebyshev basis: Q(x) with Q(cos theta) =
// q(theta), coefficients b_j of T_j.  b_0 = c_0, b_j = 2 c_j for j >= 1;
// the reindexing is exact in both directions.
struct ChebForm {
  std::vector<double> b;

  int size() const { return static_cast<int>(b.size()); }
  double eval(double x) const;           // Clenshaw in x
  long double eval_extended(long double x) const;

  // Coefficients of the derivative dQ/dx in the Chebyshev basis.
  ChebForm derivative() const;
};

ChebForm to_cheb(const SymLaurentPoly& p);
SymLaurentPoly from_cheb(const ChebForm& q);

// Mean-one nonnegative kernel with half coefficients c_j = (n - j)/n.
// On the circle it equals (1/n) (sin(n theta / 2) / sin(theta / 2))^2.
SymLaurentPoly fejer_kernel(int n);

// Closed form above, evaluated without subtractive cancellation.  Agrees
// with fejer_kernel(n).eval(theta) but is exact (and exactly >= 0) at the
// kernel's zeros theta = 2 pi l / n.
double fejer_eval(int n, double theta);

// Sum of the j-th diagonal of a square matrix: j >= 0 sums A[i][i+j],
// j < 0 sums A[i-j... ] the subdiagonal; |j| >= n gives 0.
cd generalized_trace(const Eigen::MatrixXcd& A, int j);

// Wrapped diagonal sum: for |j| < n adds the complementary diagonal that a
// cyclic shift by j also touches (j - n for j >= 0, j + n for j < 0).
cd cyclic_trace(const Eigen::MatrixXcd& A, int j);

// Half coefficients of the symmetric Laurent polynomial carried by a
// Hermitian Gram matrix: c_j = Re tr_j(A).  If imag_residual is non-null it
// receives max_j |Im tr_j(A)|, which vanishes exactly when the matrix
// carries a real-coefficient (cosine) polynomial.
SymLaurentPoly gram_to_poly(const Eigen::MatrixXcd& A,
                            double* imag_residual = nullptr);

// CSV exchange format: header "j,c" then one row per coefficient, j
// ascending from 0 with no gaps.  Values are written with enough digits to
// round trip exactly.
void save_csv(const SymLaurentPoly& p, const std::string& path);
SymLaurentPoly load_csv(const std::string& path);

}  // namespace osearch
