#include "osearch/spectral.hpp"

#include <lapacke.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

namespace osearch {

namespace {

// Eigenvalues of the companion matrix of a monic real polynomial
// z^m + a_{m-1} z^{m-1} + ... + a_0.
std::vector<cd> companion_roots(const std::vector<double>& monic_tail) {
  const int m = static_cast<int>(monic_tail.size());
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(m, m);
  for (int i = 1; i < m; ++i) C(i, i - 1) = 1.0;
  for (int i = 0; i < m; ++i) C(i, m - 1) = -monic_tail[static_cast<size_t>(i)];
  std::vector<double> wr(static_cast<size_t>(m)), wi(static_cast<size_t>(m));
  const lapack_int info =
      LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'N', m, C.data(), m, wr.data(),
                    wi.data(), nullptr, 1, nullptr, 1);
  require(info == 0, fmt::format("companion_roots: dgeev failed ({})", info));
  std::vector<cd> roots(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i)
    roots[static_cast<size_t>(i)] = cd(wr[static_cast<size_t>(i)], wi[static_cast<size_t>(i)]);
  return roots;
}

double angle_dist(double a, double b) {
  double d = std::fmod(std::abs(a - b), 2.0 * M_PI);
  return std::min(d, 2.0 * M_PI - d);
}

}  // namespace

SymLaurentPoly factor_autocorrelation(const std::vector<cd>& b, int n) {
  SymLaurentPoly q;
  q.c.assign(static_cast<size_t>(n), 0.0);
  const int len = static_cast<int>(b.size());
  for (int m = 0; m < n; ++m) {
    cd s(0.0, 0.0);
    for (int j = 0; j + m < len; ++j) s += b[static_cast<size_t>(j + m)] * std::conj(b[static_cast<size_t>(j)]);
    q.c[static_cast<size_t>(m)] = s.real();
  }
  return q;
}

std::vector<cd> spectral_factor(const SymLaurentPoly& q, const Tolerances& tol,
                                double* residual) {
  const int n = q.n();
  require(n >= 1, "spectral_factor: empty polynomial");
  double maxabs = 0.0;
  for (double v : q.c) maxabs = std::max(maxabs, std::abs(v));
  require(maxabs > 0.0, "spectral_factor: zero polynomial");

  int d = n - 1;
  while (d > 0 && std::abs(q.c[static_cast<size_t>(d)]) <= 1e-14 * maxabs) --d;

  std::vector<cd> b;
  if (d == 0) {
    require(q.c[0] >= 0.0, "spectral_factor: negative constant");
    b = {cd(std::sqrt(q.c[0]), 0.0)};
  } else {
    // Roots of z^d q(z), a palindromic real polynomial of degree 2d.
    std::vector<double> tail(static_cast<size_t>(2 * d), 0.0);
    const double lead = q.c[static_cast<size_t>(d)];
    for (int i = 0; i < 2 * d; ++i)
      tail[static_cast<size_t>(i)] = q.c[static_cast<size_t>(std::abs(i - d))] / lead;
    std::vector<cd> roots = companion_roots(tail);

    std::vector<cd> inside, outside, circle;
    for (const cd& r : roots) {
      const double ar = std::abs(r);
      if (std::abs(ar - 1.0) <= tol.circle_pair)
        circle.push_back(r);
      else if (ar < 1.0)
        inside.push_back(r);
      else
        outside.push_back(r);
    }
    require(inside.size() == outside.size(),
            fmt::format("spectral_factor: unbalanced root classes ({} inside, "
                        "{} outside, {} near circle)",
                        inside.size(), outside.size(), circle.size()));
    require(circle.size() % 2 == 0,
            "spectral_factor: odd number of near-circle roots");

    // Circle roots appear with even multiplicity; pair nearest angles and
    // keep one representative per pair at the averaged angle.
    std::vector<double> ang(circle.size());
    for (size_t i = 0; i < circle.size(); ++i) ang[i] = std::arg(circle[i]);
    std::vector<size_t> order(circle.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t bb) { return ang[a] < ang[bb]; });
    std::vector<bool> used(circle.size(), false);
    std::vector<cd> picked;
    for (size_t oi = 0; oi < order.size(); ++oi) {
      const size_t i = order[oi];
      if (used[i]) continue;
      used[i] = true;
      size_t best = SIZE_MAX;
      double best_d = std::numeric_limits<double>::infinity();
      for (size_t oj = 0; oj < order.size(); ++oj) {
        const size_t j = order[oj];
        if (used[j]) continue;
        const double dd = angle_dist(ang[i], ang[j]);
        if (dd < best_d) {
          best_d = dd;
          best = j;
        }
      }
      require(best != SIZE_MAX && best_d < 1e-3,
              "spectral_factor: cannot pair a near-circle root");
      used[best] = true;
      // Average on the circle through the angle midpoint of the pair.
      double mid = ang[i] + 0.5 * std::remainder(ang[best] - ang[i], 2.0 * M_PI);
      picked.push_back(std::polar(1.0, mid));
    }

    // Minimum-phase choice: all inside roots plus one per circle pair.
    std::vector<cd> zeros = inside;
    zeros.insert(zeros.end(), picked.begin(), picked.end());
    require(static_cast<int>(zeros.size()) == d,
            fmt::format("spectral_factor: expected {} factor roots, got {}", d,
                        zeros.size()));

    // Expand prod (z - rho_i) and scale the energy to c_0.  Multiplying the
    // factors in arbitrary order lets intermediate coefficients grow by many
    // orders of magnitude before cancelling, which destroys the low-order
    // coefficients in double precision.  Leja ordering (greedily maximizing
    // the distance product to the roots already absorbed) keeps the partial
    // products balanced, and the accumulation runs in extended precision.
    std::vector<cd> ordered;
    ordered.reserve(zeros.size());
    {
      std::vector<char> taken(zeros.size(), 0);
      std::vector<double> logdist(zeros.size(), 0.0);
      size_t pick = 0;
      for (size_t i = 1; i < zeros.size(); ++i)
        if (std::abs(zeros[i]) > std::abs(zeros[pick])) pick = i;
      for (size_t round = 0; round < zeros.size(); ++round) {
        taken[pick] = 1;
        ordered.push_back(zeros[pick]);
        const cd chosen = zeros[pick];
        size_t next = SIZE_MAX;
        for (size_t i = 0; i < zeros.size(); ++i) {
          if (taken[i]) continue;
          logdist[i] += std::log(std::max(std::abs(zeros[i] - chosen), 1e-300));
          if (next == SIZE_MAX || logdist[i] > logdist[next]) next = i;
        }
        if (next == SIZE_MAX) break;
        pick = next;
      }
    }
    using cld = std::complex<long double>;
    std::vector<cld> acc(static_cast<size_t>(d + 1), cld(0.0L, 0.0L));
    acc[0] = cld(1.0L, 0.0L);
    int deg = 0;
    for (const cd& rho_d : ordered) {
      const cld rho(rho_d.real(), rho_d.imag());
      ++deg;
      for (int i = deg; i >= 1; --i)
        acc[static_cast<size_t>(i)] = acc[static_cast<size_t>(i - 1)] - rho * acc[static_cast<size_t>(i)];
      acc[0] *= -rho;
    }
    // acc now holds the coefficient of z^i at index i; the chosen roots all
    // lie in the closed unit disk, so this is the minimum-phase factor.
    long double energy = 0.0L;
    for (const cld& v : acc) energy += std::norm(v);
    require(energy > 0.0L, "spectral_factor: zero factor energy");
    const long double gamma = std::sqrt(static_cast<long double>(q.c[0]) / energy);
    b.resize(static_cast<size_t>(d + 1));
    for (size_t i = 0; i < acc.size(); ++i)
      b[i] = cd(static_cast<double>(acc[i].real() * gamma),
                static_cast<double>(acc[i].imag() * gamma));
  }

  // Global phase: make b_0 real and nonnegative.
  cd lead = b[0];
  if (std::abs(lead) > 0.0) {
    const cd phase = std::conj(lead) / std::abs(lead);
    for (cd& v : b) v *= phase;
    b[0] = cd(std::abs(b[0].real()), 0.0);
  }

  if (residual) {
    const SymLaurentPoly back = factor_autocorrelation(b, n);
    double worst = 0.0;
    for (int j = 0; j < n; ++j)
      worst = std::max(worst, std::abs(back.c[static_cast<size_t>(j)] - q.c[static_cast<size_t>(j)]));
    *residual = worst;
  }
  return b;
}

Eigen::MatrixXcd gram_rank1(const std::vector<cd>& b, int n) {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n);
  require(static_cast<int>(b.size()) <= n, "gram_rank1: factor longer than n");
  for (size_t j = 0; j < b.size(); ++j) v(static_cast<Eigen::Index>(j)) = b[j];
  return v * v.adjoint();
}

UniqueInitialReport check_unique_initial(const Eigen::MatrixXcd& A,
                                         double psd_tol,
                                         const Tolerances& tol) {
  const int n = static_cast<int>(A.rows());
  require(A.cols() == n && n >= 1, "check_unique_initial: bad shape");
  UniqueInitialReport rep;

  rep.symmetric = (A - A.adjoint()).cwiseAbs().maxCoeff() <= tol.eq_residual;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
      cd(0.5, 0.0) * (A + A.adjoint()), Eigen::EigenvaluesOnly);
  rep.psd = es.eigenvalues().minCoeff() >= -psd_tol;

  double trace_resid = 0.0;
  for (int l = 0; l < n; ++l)
    trace_resid = std::max(trace_resid, std::abs(cyclic_trace(A, l) - cd(1.0, 0.0)));
  rep.traces_ok = trace_resid <= tol.eq_residual;

  rep.max_dev = (A - Eigen::MatrixXcd::Constant(n, n, cd(1.0 / n, 0.0)))
                    .cwiseAbs()
                    .maxCoeff();
  // Any PSD matrix with unit wrapped diagonal sums is entrywise within this
  // bound of the constant matrix; the cross terms are controlled through
  // the arithmetic-geometric mean inequality on 2x2 minors.
  rep.derived_bound =
      4.0 * n * std::sqrt(std::max(0.0, trace_resid + n * psd_tol)) + trace_resid;
  rep.conclusion = rep.symmetric && rep.psd && rep.traces_ok &&
                   rep.max_dev <= rep.derived_bound;
  return rep;
}

GramCheck verify_gram_tuple(const std::vector<Eigen::MatrixXcd>& Q,
                            double eps, const Tolerances& tol) {
  GramCheck gc;
  require(Q.size() >= 2, "verify_gram_tuple: need at least two matrices");
  const int k = static_cast<int>(Q.size()) - 1;
  const int n = static_cast<int>(Q[0].rows());
  gc.min_eigenvalue = std::numeric_limits<double>::infinity();

  auto fail = [&](std::string msg) {
    if (gc.detail.empty()) gc.detail = std::move(msg);
  };

  // Initial matrix must be the constant matrix J/n.
  const double dev0 =
      (Q[0] - Eigen::MatrixXcd::Constant(n, n, cd(1.0 / n, 0.0))).cwiseAbs().maxCoeff();
  gc.max_equality_residual = dev0;
  if (dev0 > tol.eq_residual) fail(fmt::format("initial matrix deviates by {}", dev0));

  for (int t = 0; t <= k; ++t) {
    const Eigen::MatrixXcd& M = Q[static_cast<size_t>(t)];
    require(M.rows() == n && M.cols() == n, "verify_gram_tuple: shape mismatch");
    const double herm = (M - M.adjoint()).cwiseAbs().maxCoeff();
    gc.max_equality_residual = std::max(gc.max_equality_residual, herm);
    if (herm > tol.eq_residual) fail(fmt::format("matrix {} not Hermitian ({})", t, herm));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
        cd(0.5, 0.0) * (M + M.adjoint()), Eigen::EigenvaluesOnly);
    const double mineig = es.eigenvalues().minCoeff();
    gc.min_eigenvalue = std::min(gc.min_eigenvalue, mineig);
    if (mineig < -tol.eq_residual) fail(fmt::format("matrix {} has eigenvalue {}", t, mineig));
    const double tr = std::abs(M.trace() - cd(1.0, 0.0));
    gc.max_equality_residual = std::max(gc.max_equality_residual, tr);
    if (tr > tol.eq_residual) fail(fmt::format("matrix {} trace off by {}", t, tr));
  }

  // Linking rows: component j of (I + (-1)^t V) applied to the difference
  // of trace vectors must vanish for every step.
  for (int t = 1; t <= k; ++t) {
    const double sgn = (t % 2 == 0) ? 1.0 : -1.0;
    std::vector<double> at(static_cast<size_t>(n)), ap(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
      at[static_cast<size_t>(j)] = generalized_trace(Q[static_cast<size_t>(t)], j).real();
      ap[static_cast<size_t>(j)] = generalized_trace(Q[static_cast<size_t>(t - 1)], j).real();
    }
    for (int j = 0; j < n; ++j) {
      const int jv = (j == 0) ? 0 : n - j;
      const double r = (at[static_cast<size_t>(j)] - ap[static_cast<size_t>(j)]) +
                       sgn * (at[static_cast<size_t>(jv)] - ap[static_cast<size_t>(jv)]);
      gc.max_equality_residual = std::max(gc.max_equality_residual, std::abs(r));
      if (std::abs(r) > tol.eq_residual)
        fail(fmt::format("linking row (t={}, j={}) residual {}", t, j, r));
    }
  }

  gc.final_entry = Q[static_cast<size_t>(k)](0, 0).real();
  if (gc.final_entry < 1.0 - eps - tol.eq_residual)
    fail(fmt::format("final entry {} below 1 - {}", gc.final_entry, eps));

  gc.ok = gc.detail.empty();
  if (gc.ok) gc.detail = "all constraints within tolerance";
  return gc;
}

namespace {

std::string fnum(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  require(ec == std::errc(), "export_sdp: to_chars failed");
  return std::string(buf, ptr);
}

}  // namespace

void export_sdp(int n, int k, double eps, const std::string& path) {
  require(n >= 1 && n <= 2048, "export_sdp: n out of supported range");
  require(k >= 1, "export_sdp: k must be positive");

  struct Entry {
    int blk, i, j;  // 1-based, upper triangle
    double v;
  };
  struct Con {
    std::vector<Entry> entries;
    double rhs;
  };
  std::vector<Con> cons;

  // Step-linking rows.  For t = 1 the fixed initial matrix contributes the
  // right-hand side (n - 2j)/n; j runs over one representative per +-pair.
  for (int t = 1; t <= k; ++t) {
    const int sgn = (t % 2 == 0) ? 1 : -1;
    const int j_hi = (t % 2 == 0) ? n / 2 : (n - 1) / 2;
    for (int j = 1; j <= j_hi; ++j) {
      if (t % 2 == 0 && 2 * j == n) {
        // Self-paired component: the two halves merge into one diagonal.
        Con c;
        c.rhs = 0.0;
        for (int i = 0; i + j < n; ++i)
          c.entries.push_back({t, i + 1, i + j + 1, 1.0});
        if (t > 1)
          for (int i = 0; i + j < n; ++i)
            c.entries.push_back({t - 1, i + 1, i + j + 1, -1.0});
        else
          c.rhs = static_cast<double>(n - 2 * j) / n;
        cons.push_back(std::move(c));
        continue;
      }
      Con c;
      c.rhs = 0.0;
      auto add_step = [&](int blk, double w) {
        for (int i = 0; i + j < n; ++i)
          c.entries.push_back({blk, i + 1, i + j + 1, 0.5 * w});
        for (int i = 0; i + (n - j) < n; ++i)
          c.entries.push_back({blk, i + 1, i + (n - j) + 1, 0.5 * w * sgn});
      };
      add_step(t, 1.0);
      if (t > 1) {
        add_step(t - 1, -1.0);
      } else {
        // <S, J/n> with S as above: the j-diagonal sums to (n-j)/n and the
        // (n-j)-diagonal to j/n, signed.
        c.rhs = 0.5 * (static_cast<double>(n - j) / n) * 2.0 +
                0.5 * sgn * (static_cast<double>(j) / n) * 2.0;
      }
      cons.push_back(std::move(c));
    }
  }

  // Unit trace per step.
  for (int t = 1; t <= k; ++t) {
    Con c;
    c.rhs = 1.0;
    for (int i = 1; i <= n; ++i) c.entries.push_back({t, i, i, 1.0});
    cons.push_back(std::move(c));
  }

  // Success floor: Q_k[0][0] - slack = 1 - eps.
  {
    Con c;
    c.rhs = 1.0 - eps;
    c.entries.push_back({k, 1, 1, 1.0});
    c.entries.push_back({k + 1, 1, 1, -1.0});
    cons.push_back(std::move(c));
  }

  std::ofstream out(path);
  require(out.good(), fmt::format("export_sdp: cannot open '{}'", path));
  out << fmt::format("* exact-query feasibility, n={}, k={}, eps={}\n", n, k, fnum(eps));
  out << "* blocks 1..k are the step Gram matrices; the last block is the slack\n";
  out << cons.size() << "\n";
  out << (k + 1) << "\n";
  for (int t = 1; t <= k; ++t) out << n << " ";
  out << "-1\n";
  for (size_t i = 0; i < cons.size(); ++i)
    out << fnum(cons[i].rhs) << (i + 1 == cons.size() ? "\n" : " ");
  for (size_t ci = 0; ci < cons.size(); ++ci)
    for (const Entry& e : cons[ci].entries)
      out << fmt::format("{} {} {} {} {}\n", ci + 1, e.blk, e.i, e.j, fnum(e.v));
  out.close();
  require(out.good(), fmt::format("export_sdp: write to '{}' failed", path));
}

}  // namespace osearch
