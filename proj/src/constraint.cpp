#include "osearch/constraint.hpp"

#include <cmath>
#include <map>

#include <fmt/format.h>

namespace osearch {

std::vector<double> apply_v(std::span<const double> a) {
  const size_t n = a.size();
  std::vector<double> out(n);
  out[0] = a[0];
  for (size_t j = 1; j < n; ++j) out[j] = a[n - j];
  return out;
}

std::vector<double> forward_residual(std::span<const double> a_t,
                                     std::span<const double> a_prev, int t) {
  require(a_t.size() == a_prev.size() && !a_t.empty(),
          "forward_residual: length mismatch");
  const double sgn = (t % 2 == 0) ? 1.0 : -1.0;
  const size_t n = a_t.size();
  std::vector<double> diff(n);
  for (size_t j = 0; j < n; ++j) diff[j] = a_t[j] - a_prev[j];
  std::vector<double> vdiff = apply_v(diff);
  for (size_t j = 0; j < n; ++j) diff[j] += sgn * vdiff[j];
  return diff;
}

std::vector<double> eliminate_middle(std::span<const double> before,
                                     std::span<const double> after, int t) {
  require(before.size() == after.size() && !before.empty(),
          "eliminate_middle: length mismatch");
  const double sgn = (t % 2 == 0) ? 1.0 : -1.0;
  const size_t n = before.size();
  std::vector<double> diff(n);
  for (size_t j = 0; j < n; ++j) diff[j] = before[j] - after[j];
  std::vector<double> vdiff = apply_v(diff);
  std::vector<double> out(n);
  for (size_t j = 0; j < n; ++j)
    out[j] = 0.5 * (before[j] + after[j]) + 0.5 * sgn * vdiff[j];
  return out;
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Trip = Eigen::Triplet<double>;

// (I + s V) as a sparse n x n matrix, s in {+1, -1}.
SpMat i_plus_sv(int n, double s) {
  std::vector<Trip> tr;
  tr.reserve(static_cast<size_t>(2 * n));
  tr.emplace_back(0, 0, 1.0 + s);
  for (int j = 1; j < n; ++j) {
    tr.emplace_back(j, j, 1.0);
    tr.emplace_back(j, n - j, s);
  }
  SpMat m(n, n);
  m.setFromTriplets(tr.begin(), tr.end());
  return m;
}

Eigen::VectorXd unit_e0(int n) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  v(0) = 1.0;
  return v;
}

Eigen::VectorXd fejer_vec(int n) {
  Eigen::VectorXd v(n);
  for (int j = 0; j < n; ++j) v(j) = static_cast<double>(n - j) / n;
  return v;
}

}  // namespace

SymLaurentPoly ConstraintSystem::reconstruct(int t, const Eigen::VectorXd& x) const {
  require(t >= 0 && t <= k, "reconstruct: t out of range");
  require(x.size() == num_free, "reconstruct: wrong free-vector length");
  Eigen::VectorXd v = base[static_cast<size_t>(t)];
  if (pmap[static_cast<size_t>(t)].cols() > 0)
    v += pmap[static_cast<size_t>(t)] * x;
  return SymLaurentPoly{std::vector<double>(v.data(), v.data() + v.size())};
}

std::vector<SymLaurentPoly> ConstraintSystem::reconstruct_all(
    const Eigen::VectorXd& x) const {
  std::vector<SymLaurentPoly> qs;
  qs.reserve(static_cast<size_t>(k + 1));
  for (int t = 0; t <= k; ++t) qs.push_back(reconstruct(t, x));
  return qs;
}

void ConstraintSystem::eval_row(int t, double theta, Eigen::VectorXd& grad,
                                double& constant) const {
  require(t >= 0 && t <= k, "eval_row: t out of range");
  // Evaluation functional e with e_0 = 1, e_j = 2 cos(j theta).
  Eigen::VectorXd e(n);
  e(0) = 1.0;
  for (int j = 1; j < n; ++j) e(j) = 2.0 * std::cos(j * theta);
  constant = base[static_cast<size_t>(t)].dot(e);
  grad = pmap[static_cast<size_t>(t)].transpose() * e;
}

Eigen::VectorXd ConstraintSystem::coeff_direction(int t,
                                                  const Eigen::VectorXd& dx) const {
  require(t >= 0 && t <= k, "coeff_direction: t out of range");
  return pmap[static_cast<size_t>(t)] * dx;
}

namespace {

// Explicit-variable layout for the uneliminated system.
void build_explicit(ConstraintSystem& sys) {
  const int n = sys.n;
  const int k = sys.k;
  sys.num_free = (k - 1) * n;
  auto var = [n](int t, int j) { return (t - 1) * n + j; };

  for (int t = 1; t < k; ++t) {
    SpMat P(n, sys.num_free);
    std::vector<Trip> tr;
    tr.reserve(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) tr.emplace_back(j, var(t, j), 1.0);
    P.setFromTriplets(tr.begin(), tr.end());
    sys.pmap[static_cast<size_t>(t)] = P;
    sys.base[static_cast<size_t>(t)] = Eigen::VectorXd::Zero(n);
    sys.blocks.push_back(FreeBlock{t, var(t, 0), n, false});
  }

  for (int t = 1; t < k; ++t) {
    Eigen::SparseVector<double> row(sys.num_free);
    row.insert(var(t, 0)) = 1.0;
    sys.eq_rows.push_back(std::move(row));
    sys.eq_rhs.push_back(1.0);
    sys.eq_names.push_back(fmt::format("norm_t{}", t));
  }

  // Linking rows: component i of (I + (-1)^t V)(a_t - a_{t-1}) = 0.
  // Endpoint vectors (t = 0 and t = k) are constants and move to the rhs.
  const Eigen::VectorXd f = fejer_vec(n);
  const Eigen::VectorXd e0 = unit_e0(n);
  for (int t = 1; t <= k; ++t) {
    const double sgn = (t % 2 == 0) ? 1.0 : -1.0;
    for (int i = 0; i < n; ++i) {
      const int iv = (i == 0) ? 0 : n - i;
      std::map<int, double> w;  // variable -> coefficient
      double rhs = 0.0;
      auto add = [&](int tt, int idx, double weight) {
        if (tt >= 1 && tt < k) {
          w[var(tt, idx)] += weight;
        } else if (tt == 0) {
          rhs -= weight * f(idx);
        } else {  // tt == k
          rhs -= weight * e0(idx);
        }
      };
      add(t, i, 1.0);
      add(t, iv, sgn);
      add(t - 1, i, -1.0);
      add(t - 1, iv, -sgn);

      Eigen::SparseVector<double> row(sys.num_free);
      bool nonzero = std::abs(rhs) > 0.0;
      for (const auto& [v, coef] : w) {
        if (coef != 0.0) {
          row.insert(v) = coef;
          nonzero = true;
        }
      }
      if (!nonzero) continue;  // identically-zero row (odd t at i = 0, etc.)
      sys.eq_rows.push_back(std::move(row));
      sys.eq_rhs.push_back(rhs);
      sys.eq_names.push_back(fmt::format("link_t{}_i{}", t, i));
    }
  }
}

// Minimal parametrization: even steps carry free coefficient blocks, odd
// steps are eliminated middles; for odd k the first step keeps a
// V-symmetric slack block instead.  Every linking constraint then holds for
// every value of the free vector, because (I -+ V)(I +- V) = 0.
void build_eliminated(ConstraintSystem& sys) {
  const int n = sys.n;
  const int k = sys.k;
  const Eigen::VectorXd f = fejer_vec(n);
  const Eigen::VectorXd e0 = unit_e0(n);
  const SpMat half_i_minus_v = i_plus_sv(n, -1.0) * 0.5;
  const SpMat half_i_plus_v = i_plus_sv(n, 1.0) * 0.5;

  std::vector<bool> direct(static_cast<size_t>(k + 1), false);
  direct[0] = true;
  direct[static_cast<size_t>(k)] = true;

  // For n = 1 every coefficient vector is the pinned (c_0) = (1); the
  // direct steps then carry no block at all.
  int offset = 0;
  if (k % 2 == 0) {
    for (int t = 2; t <= k - 2; t += 2) {
      direct[static_cast<size_t>(t)] = true;
      if (n > 1) {
        sys.blocks.push_back(FreeBlock{t, offset, n - 1, false});
        offset += n - 1;
      }
    }
  } else {
    direct[1] = true;
    const int slack_dim = n / 2;  // number of {j, n-j} pairs among 1..n-1
    if (slack_dim > 0) {
      sys.blocks.push_back(FreeBlock{1, offset, slack_dim, true});
      offset += slack_dim;
    }
    for (int t = 3; t <= k - 2; t += 2) {
      direct[static_cast<size_t>(t)] = true;
      if (n > 1) {
        sys.blocks.push_back(FreeBlock{t, offset, n - 1, false});
        offset += n - 1;
      }
    }
  }
  sys.num_free = offset;

  sys.base[0] = f;
  sys.base[static_cast<size_t>(k)] = e0;
  if (k % 2 == 1) sys.base[1] = f;
  for (int t = 2; t < k; ++t)
    if (direct[static_cast<size_t>(t)]) sys.base[static_cast<size_t>(t)] = e0;

  for (int t = 0; t <= k; ++t)
    sys.pmap[static_cast<size_t>(t)] = SpMat(n, sys.num_free);

  for (const FreeBlock& blk : sys.blocks) {
    SpMat P(n, sys.num_free);
    std::vector<Trip> tr;
    if (!blk.slack) {
      for (int j = 1; j < n; ++j) tr.emplace_back(j, blk.offset + (j - 1), 1.0);
    } else {
      // q_1 = Fejer + V-symmetric slack: pair index p covers j = p + 1 and
      // j = n - (p + 1); for even n the self-paired j = n/2 is one row.
      for (int j = 1; j < n; ++j) {
        const int pair = std::min(j, n - j) - 1;
        tr.emplace_back(j, blk.offset + pair, 1.0);
      }
    }
    P.setFromTriplets(tr.begin(), tr.end());
    sys.pmap[static_cast<size_t>(blk.t)] = P;
  }

  // Eliminated middles:
  //   a_t = (1/2)(I + (-1)^t V) a_{t-1} + (1/2)(I - (-1)^t V) a_{t+1};
  // both neighbours of a non-direct step are direct, so one pass fills all.
  for (int t = 1; t < k; ++t) {
    if (direct[static_cast<size_t>(t)]) continue;
    const bool even = (t % 2 == 0);
    const SpMat& left = even ? half_i_plus_v : half_i_minus_v;
    const SpMat& right = even ? half_i_minus_v : half_i_plus_v;
    require(direct[static_cast<size_t>(t - 1)] && direct[static_cast<size_t>(t + 1)],
            "build_system: elimination neighbours not direct");
    sys.base[static_cast<size_t>(t)] =
        left * sys.base[static_cast<size_t>(t - 1)] +
        right * sys.base[static_cast<size_t>(t + 1)];
    SpMat P = left * sys.pmap[static_cast<size_t>(t - 1)] +
              right * sys.pmap[static_cast<size_t>(t + 1)];
    P.makeCompressed();
    sys.pmap[static_cast<size_t>(t)] = P;
  }
}

}  // namespace

ConstraintSystem build_system(int n, int k, bool eliminate) {
  require(n >= 1, "build_system: n must be positive");
  require(k >= 1, "build_system: k must be positive");
  ConstraintSystem sys;
  sys.n = n;
  sys.k = k;
  sys.eliminated = eliminate;
  sys.base.assign(static_cast<size_t>(k + 1), Eigen::VectorXd::Zero(n));
  sys.pmap.assign(static_cast<size_t>(k + 1), SpMat(n, 0));
  sys.base[0] = fejer_vec(n);
  sys.base[static_cast<size_t>(k)] = unit_e0(n);

  if (k == 1) {
    // No interior polynomials; the single linking constraint is a fixed
    // vector identity between the endpoint coefficient vectors.
    std::vector<double> fv(sys.base[0].data(), sys.base[0].data() + n);
    std::vector<double> ev(sys.base[1].data(), sys.base[1].data() + n);
    auto r = forward_residual(ev, fv, 1);
    double worst = 0.0;
    for (double v : r) worst = std::max(worst, std::abs(v));
    sys.contradiction_residual = worst;
    sys.contradiction = worst > 1e-14;
    return sys;
  }

  if (eliminate)
    build_eliminated(sys);
  else
    build_explicit(sys);
  return sys;
}

}  // namespace osearch
