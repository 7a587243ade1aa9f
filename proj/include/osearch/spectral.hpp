#pragma once

#include <Eigen/Dense>
#include <vector>

#include "osearch/poly.hpp"

namespace osearch {

// Spectral factorization of a nonnegative symmetric Laurent polynomial:
// returns complex b_0..b_{d} with
//   q(z) = p(z) conj-reversed(p)(z),  p(z) = sum_j b_j z^j,
// equivalently c_m = sum_j b_{j+m} conj(b_j).  Normalized so that b_0 is
// real and nonnegative.  `residual` (if non-null) receives the max-norm
// autocorrelation mismatch.  Roots within tol.circle_pair of the unit
// circle are treated as even-multiplicity circle roots and split evenly.
std::vector<cd> spectral_factor(const SymLaurentPoly& q, const Tolerances& tol,
                                double* residual = nullptr);

// Autocorrelation half-coefficients of a factor: c_m = sum_j b_{j+m} conj(b_j),
// zero-padded to length n.
SymLaurentPoly factor_autocorrelation(const std::vector<cd>& b, int n);

// Rank-one Gram matrix b b^* zero-padded to size n.
Eigen::MatrixXcd gram_rank1(const std::vector<cd>& b, int n);

// Anyone holding a PSD matrix with unit cyclic traces must in fact hold the
// constant matrix J/n.  Checks the preconditions (Hermitian symmetry,
// eigenvalues >= -psd_tol, |Tr_l A - 1| <= tol.eq_residual for 0 <= l < n)
// and then certifies max_ij |A_ij - 1/n| against a derived bound.
struct UniqueInitialReport {
  bool symmetric = false;
  bool psd = false;
  bool traces_ok = false;
  bool conclusion = false;    // entrywise closeness to J/n holds
  double max_dev = 0.0;       // max_ij |A_ij - 1/n|
  double derived_bound = 0.0; // bound implied by the precondition residuals
};
UniqueInitialReport check_unique_initial(const Eigen::MatrixXcd& A,
                                         double psd_tol,
                                         const Tolerances& tol);

// Verify a tuple of Gram matrices Q_0..Q_k against the full constraint set:
// Q_0 = J/n, each Q_t PSD with unit trace, consecutive linking equalities on
// cyclic traces, and final success entry Q_k[0][0] >= 1 - eps.
struct GramCheck {
  bool ok = false;
  double max_equality_residual = 0.0;
  double min_eigenvalue = 0.0;     // over all Q_t
  double final_entry = 0.0;        // Re Q_k[0][0]
  std::string detail;
};
GramCheck verify_gram_tuple(const std::vector<Eigen::MatrixXcd>& Q,
                            double eps, const Tolerances& tol);

// SDPA sparse (.dat-s) export of the feasibility program for (n, k), with
// one PSD block of size n per step 1..k and a 1x1 slack block making the
// final-entry inequality an equality.  Feasibility problem: zero objective.
void export_sdp(int n, int k, double eps, const std::string& path);

}  // namespace osearch
